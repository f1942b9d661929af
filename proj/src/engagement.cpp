#include "tridef/engagement.hpp"

#include <algorithm>
#include <cmath>

namespace tridef {

const char* player_name(Player p) {
  switch (p) {
    case Player::Interceptor: return "interceptor";
    case Player::Target: return "target";
    case Player::Defender: return "defender";
  }
  return "?";
}

void PlayerParams::validate(const std::string& who) const {
  if (max_accel < 0.0) throw ConfigError(who + ": max_accel must be >= 0");
  if (time_constant <= 0.0) throw ConfigError(who + ": time_constant must be > 0");
  if (kill_radius < 0.0) throw ConfigError(who + ": kill_radius must be >= 0");
  if (init_speed <= 0.0) throw ConfigError(who + ": init_speed must be > 0");
}

double EngagementConfig::initial_range_it() const {
  return std::abs(player(Player::Interceptor).init_horizontal -
                  player(Player::Target).init_horizontal);
}

double EngagementConfig::initial_range_id() const {
  return std::abs(player(Player::Interceptor).init_horizontal -
                  player(Player::Defender).init_horizontal);
}

void EngagementConfig::validate() const {
  for (std::size_t i = 0; i < kNumPlayers; ++i) {
    players[i].validate(player_name(static_cast<Player>(i)));
  }
  if (switching_radius_eta <= 0.0) throw ConfigError("switching_radius_eta must be > 0");
  if (physics_dt <= 0.0 || physics_dt > decision_dt)
    throw ConfigError("need 0 < physics_dt <= decision_dt");
  const double ratio = decision_dt / physics_dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
    throw ConfigError("decision_dt must be an integer multiple of physics_dt");
  if (interceptor_altitude_range[0] > interceptor_altitude_range[1])
    throw ConfigError("interceptor_altitude_range must be ordered [lo, hi]");
  if (gravity_g <= 0.0) throw ConfigError("gravity_g must be > 0");
  if (lethal_radius_id < 0.0 || lethal_radius_it < 0.0)
    throw ConfigError("lethal radii must be >= 0");
}

double SimClock::t_go_it() const { return time_to_go(t, t_it); }
double SimClock::t_go_id() const { return time_to_go(t, t_id); }

SimClock interception_times(const EngagementConfig& config) {
  const double v_i = config.player(Player::Interceptor).init_speed;
  const double v_t = config.player(Player::Target).init_speed;
  const double v_d = config.player(Player::Defender).init_speed;
  const double closing_it = v_i + v_t;
  const double closing_id = v_i + v_d;
  if (closing_it <= 0.0 || closing_id <= 0.0)
    throw ConfigError("closing speeds must be strictly positive");
  SimClock clock;
  clock.t = 0.0;
  clock.t_it = config.initial_range_it() / closing_it;
  clock.t_id = config.initial_range_id() / closing_id;
  return clock;
}

double time_to_go(double t, double t_final) {
  return t >= t_final ? 0.0 : t_final - t;
}

double first_order_lag(double accel, double command, double time_constant, double dt) {
  return command + (accel - command) * std::exp(-dt / time_constant);
}

double clamp_command(double u, double bound) {
  return std::clamp(u, -bound, bound);
}

namespace {

// x' = Ax + Bu of the linear model; tau and the clamped commands come in
// via the closure.
struct LinearOde {
  std::array<double, 3> tau;
  std::array<double, 3> u;

  std::array<double, 7> operator()(const std::array<double, 7>& x) const {
    return {
        x[1],
        x[4] - x[5],
        x[3],
        x[4] - x[6],
        (u[0] - x[4]) / tau[0],
        (u[1] - x[5]) / tau[1],
        (u[2] - x[6]) / tau[2],
    };
  }
};

Commands clamp_all(const Commands& commands, const EngagementConfig& config) {
  Commands out;
  for (std::size_t i = 0; i < kNumPlayers; ++i) {
    out[i] = clamp_command(commands[i], config.players[i].max_accel);
  }
  return out;
}

std::array<double, 3> taus(const EngagementConfig& config) {
  return {config.players[0].time_constant, config.players[1].time_constant,
          config.players[2].time_constant};
}

}  // namespace

LinearState step_linear(const LinearState& state, const Commands& commands,
                        const EngagementConfig& config, double dt) {
  const LinearOde ode{taus(config), clamp_all(commands, config)};
  const auto& x = state.x;
  const auto k1 = ode(x);
  std::array<double, 7> tmp;
  for (int i = 0; i < 7; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
  const auto k2 = ode(tmp);
  for (int i = 0; i < 7; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
  const auto k3 = ode(tmp);
  for (int i = 0; i < 7; ++i) tmp[i] = x[i] + dt * k3[i];
  const auto k4 = ode(tmp);
  LinearState out;
  for (int i = 0; i < 7; ++i) {
    out.x[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return out;
}

LinearState step_linear_exact(const LinearState& state, const Commands& commands,
                              const EngagementConfig& config, double dt) {
  const auto u = clamp_all(commands, config);
  const auto tau = taus(config);
  // For constant u the lag integrates to an exponential; lateral rate and
  // displacement pick up its single and double time integrals.
  std::array<double, 3> a1;      // accel at t+dt
  std::array<double, 3> da_int;  // integral of a over [t, t+dt]
  std::array<double, 3> da_dbl;  // double integral of a over [t, t+dt]
  for (std::size_t i = 0; i < 3; ++i) {
    const double a0 = state.x[4 + i];
    const double decay = std::exp(-dt / tau[i]);
    a1[i] = u[i] + (a0 - u[i]) * decay;
    da_int[i] = u[i] * dt + (a0 - u[i]) * tau[i] * (1.0 - decay);
    da_dbl[i] = 0.5 * u[i] * dt * dt +
                (a0 - u[i]) * tau[i] * (dt - tau[i] * (1.0 - decay));
  }
  LinearState out = state;
  out.x[0] = state.x[0] + state.x[1] * dt + da_dbl[0] - da_dbl[1];
  out.x[1] = state.x[1] + da_int[0] - da_int[1];
  out.x[2] = state.x[2] + state.x[3] * dt + da_dbl[0] - da_dbl[2];
  out.x[3] = state.x[3] + da_int[0] - da_int[2];
  out.x[4] = a1[0];
  out.x[5] = a1[1];
  out.x[6] = a1[2];
  return out;
}

namespace {

// Velocity direction convention matching the default geometry: the
// interceptor flies toward -X, target and defender toward +X. Positive
// accel rotates every velocity vector toward +Y.
inline double heading_x(Player p, double speed, double angle) {
  const double c = speed * std::cos(angle);
  return p == Player::Interceptor ? -c : c;
}

}  // namespace

bool step_nonlinear(NonlinearState& state, const Commands& commands,
                    const EngagementConfig& config, double dt) {
  const auto u = clamp_all(commands, config);
  // Per-player state is (x, y, phi, a); speed is constant.
  for (std::size_t i = 0; i < kNumPlayers; ++i) {
    auto& b = state.bodies[i];
    const Player p = static_cast<Player>(i);
    const double tau = config.players[i].time_constant;
    const double v = b.speed;

    auto deriv = [&](double phi, double a) {
      return std::array<double, 4>{heading_x(p, v, phi), v * std::sin(phi), a / v,
                                   (u[i] - a) / tau};
    };
    const auto k1 = deriv(b.path_angle, b.accel);
    const auto k2 = deriv(b.path_angle + 0.5 * dt * k1[2], b.accel + 0.5 * dt * k1[3]);
    const auto k3 = deriv(b.path_angle + 0.5 * dt * k2[2], b.accel + 0.5 * dt * k2[3]);
    const auto k4 = deriv(b.path_angle + dt * k3[2], b.accel + dt * k3[3]);
    b.pos_x += dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
    b.pos_y += dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
    b.path_angle += dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]);
    b.accel += dt / 6.0 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3]);
  }

  const auto& bi = state.body(Player::Interceptor);
  const auto& bt = state.body(Player::Target);
  const auto& bd = state.body(Player::Defender);
  const double dx_it = bi.pos_x - bt.pos_x;
  const double dy_it = bi.pos_y - bt.pos_y;
  const double dx_id = bi.pos_x - bd.pos_x;
  const double dy_id = bi.pos_y - bd.pos_y;
  state.range_it = std::hypot(dx_it, dy_it);
  state.range_id = std::hypot(dx_id, dy_id);
  state.los_it = std::atan2(dy_it, dx_it);
  state.los_id = std::atan2(dy_id, dx_id);

  const double min_range = 1e-6;
  return state.range_it > min_range && state.range_id > min_range;
}

LinearState linearize(const NonlinearState& state) {
  const auto& bi = state.body(Player::Interceptor);
  const auto& bt = state.body(Player::Target);
  const auto& bd = state.body(Player::Defender);

  auto lateral = [](const NonlinearState::Body& a, const NonlinearState::Body& b,
                    double los_ref, double& y, double& y_rate) {
    // component of the relative position/velocity perpendicular to the
    // initial line-of-sight (normal chosen so los_ref = 0 gives +Y)
    const double nx = -std::sin(los_ref);
    const double ny = std::cos(los_ref);
    y = (a.pos_x - b.pos_x) * nx + (a.pos_y - b.pos_y) * ny;
    const double avx = heading_x(Player::Interceptor, a.speed, a.path_angle);
    const double avy = a.speed * std::sin(a.path_angle);
    const double bvx = b.speed * std::cos(b.path_angle);
    const double bvy = b.speed * std::sin(b.path_angle);
    y_rate = (avx - bvx) * nx + (avy - bvy) * ny;
  };

  LinearState out;
  lateral(bi, bt, state.los_it_ref, out.x[0], out.x[1]);
  lateral(bi, bd, state.los_id_ref, out.x[2], out.x[3]);
  out.x[4] = bi.accel;
  out.x[5] = bt.accel;
  out.x[6] = bd.accel;
  return out;
}

NonlinearState nonlinear_from_linear(const LinearState& state, const EngagementConfig& config) {
  NonlinearState out;
  const auto& pi = config.player(Player::Interceptor);
  const auto& pt = config.player(Player::Target);
  const auto& pd = config.player(Player::Defender);

  auto& bi = out.body(Player::Interceptor);
  auto& bt = out.body(Player::Target);
  auto& bd = out.body(Player::Defender);

  bt.pos_x = pt.init_horizontal;
  bt.pos_y = pt.init_vertical;
  bt.speed = pt.init_speed;
  bt.path_angle = 0.0;
  bt.accel = state.accel(Player::Target);

  bi.pos_x = pi.init_horizontal;
  bi.pos_y = bt.pos_y + state.y_it();
  bi.speed = pi.init_speed;
  // target flies level, so the whole y_it rate goes to the interceptor
  bi.path_angle = std::asin(state.y_it_rate() / pi.init_speed);
  bi.accel = state.accel(Player::Interceptor);

  bd.pos_x = pd.init_horizontal;
  bd.pos_y = bi.pos_y - state.y_id();
  bd.speed = pd.init_speed;
  const double vy_i = bi.speed * std::sin(bi.path_angle);
  bd.path_angle = std::asin((vy_i - state.y_id_rate()) / pd.init_speed);
  bd.accel = state.accel(Player::Defender);

  const double dx_it = bi.pos_x - bt.pos_x;
  const double dy_it = bi.pos_y - bt.pos_y;
  const double dx_id = bi.pos_x - bd.pos_x;
  const double dy_id = bi.pos_y - bd.pos_y;
  out.range_it = std::hypot(dx_it, dy_it);
  out.range_id = std::hypot(dx_id, dy_id);
  out.los_it = std::atan2(dy_it, dx_it);
  out.los_id = std::atan2(dy_id, dx_id);
  // lateral displacements are measured against the horizontal axis
  out.los_it_ref = 0.0;
  out.los_id_ref = 0.0;
  return out;
}

}  // namespace tridef
