#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace tridef {

/// The three players of the engagement. Used as an index everywhere a
/// per-player quantity is stored.
enum class Player : std::size_t { Interceptor = 0, Target = 1, Defender = 2 };

inline constexpr std::size_t kNumPlayers = 3;

inline constexpr std::size_t idx(Player p) { return static_cast<std::size_t>(p); }

const char* player_name(Player p);

struct PlayerParams {
  double max_accel = 0.0;      // command bound [m/s^2]
  double time_constant = 1.0;  // actuator lag tau [s]
  double kill_radius = 0.0;    // [m]
  double init_horizontal = 0.0;  // [m]
  double init_vertical = 0.0;    // [m]
  double init_speed = 1.0;       // horizontal closing speed magnitude [m/s]

  void validate(const std::string& who) const;
};

/// All physical parameters of one engagement. The "table3" preset in
/// config_io fills this with the default scenario.
struct EngagementConfig {
  std::array<PlayerParams, kNumPlayers> players;
  double switching_radius_eta = 0.25;  // interceptor evade trigger [m]
  double physics_dt = 1e-3;            // integrator step [s]
  double decision_dt = 0.1;            // agent command hold [s]
  std::array<double, 2> interceptor_altitude_range{499800.0, 500200.0};  // [m]
  double gravity_g = 10.0;             // conversion for "g"-multiple inputs [m/s^2]
  double lethal_radius_id = 0.25;      // defender kills interceptor within this miss [m]
  double lethal_radius_it = 0.5;       // interceptor kills target within this miss [m]

  const PlayerParams& player(Player p) const { return players[idx(p)]; }
  PlayerParams& player(Player p) { return players[idx(p)]; }

  /// Initial horizontal separations of the two collision triangles.
  double initial_range_it() const;
  double initial_range_id() const;

  void validate() const;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// 7-component state of the linearized relative motion:
/// [y_it, y_it_rate, y_id, y_id_rate, a_int, a_tgt, a_def].
struct LinearState {
  std::array<double, 7> x{};

  double y_it() const { return x[0]; }
  double y_it_rate() const { return x[1]; }
  double y_id() const { return x[2]; }
  double y_id_rate() const { return x[3]; }
  double accel(Player p) const { return x[4 + idx(p)]; }
  void set_accel(Player p, double value) { x[4 + idx(p)] = value; }
};

/// Per-player commands, clamped to the owner's max_accel before use.
using Commands = std::array<double, kNumPlayers>;

/// Engagement clock: elapsed time and the two fixed interception instants.
struct SimClock {
  double t = 0.0;
  double t_it = 0.0;  // interceptor-target interception time [s]
  double t_id = 0.0;  // interceptor-defender interception time [s]

  double t_go_it() const;
  double t_go_id() const;
};

/// Planar states of the three constant-speed mass points plus line-of-sight
/// bookkeeping. Used by the full nonlinear propagation; the linear model is
/// the simulation's reference path.
struct NonlinearState {
  struct Body {
    double pos_x = 0.0;
    double pos_y = 0.0;
    double speed = 0.0;
    double path_angle = 0.0;  // flight path angle [rad]
    double accel = 0.0;       // achieved normal acceleration [m/s^2]
  };
  std::array<Body, kNumPlayers> bodies;
  double range_it = 0.0;
  double range_id = 0.0;
  double los_it = 0.0;  // current line-of-sight angles [rad]
  double los_id = 0.0;
  double los_it_ref = 0.0;  // initial line-of-sight recorded at episode start
  double los_id_ref = 0.0;

  Body& body(Player p) { return bodies[idx(p)]; }
  const Body& body(Player p) const { return bodies[idx(p)]; }
};

/// Fixed interception instants from the initial geometry: range over
/// closing speed, per collision triangle.
SimClock interception_times(const EngagementConfig& config);

/// Remaining time to a fixed final instant; negative remainders clamp to
/// zero (the triangle's engagement is over).
double time_to_go(double t, double t_final);

/// Exact discrete update of the first-order actuator lag for a command held
/// constant over dt.
double first_order_lag(double accel, double command, double time_constant, double dt);

/// One fixed-step RK4 update of the linear relative-motion model.
/// Commands are clamped to each player's bound before integrating.
LinearState step_linear(const LinearState& state, const Commands& commands,
                        const EngagementConfig& config, double dt);

/// Closed-form update of the linear model for commands held constant over
/// dt. Exact, and cheaper than RK4; the environment's propagation path.
LinearState step_linear_exact(const LinearState& state, const Commands& commands,
                              const EngagementConfig& config, double dt);

/// One fixed-step RK4 update of the planar nonlinear kinematics.
/// Returns false when either range closes to zero mid-step (engagement
/// over); the state is then left at the last valid point.
bool step_nonlinear(NonlinearState& state, const Commands& commands,
                    const EngagementConfig& config, double dt);

/// Project a nonlinear state onto the 7-vector of the linear model, taking
/// lateral displacements perpendicular to the recorded initial
/// line-of-sight of each triangle.
LinearState linearize(const NonlinearState& state);

/// Build the planar scene matching a linear state at t = 0: players at
/// their configured horizontal stations, vertical offsets and rates taken
/// from the state, initial lines-of-sight recorded along the horizontal
/// axis. Inverse of linearize at episode start.
NonlinearState nonlinear_from_linear(const LinearState& state, const EngagementConfig& config);

double clamp_command(double u, double bound);

}  // namespace tridef
