#pragma once

#include "tridef/engagement.hpp"
#include "tridef/guidance.hpp"
#include "tridef/rng.hpp"
#include "tridef/zem.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace tridef {

/// 13-slot agent input:
///   [ y_it, y_it_rate, y_id, y_id_rate,          relative kinematics
///     a_int, a_tgt, a_def,                       achieved accelerations
///     t_go_it, t_go_id,                          remaining horizons
///     z_it, z_id,                                zero-effort misses
///     int_max_accel, int_time_constant ]         interceptor prior knowledge
struct Observation {
  std::array<double, 13> o{};

  static constexpr std::size_t kSize = 13;
  static constexpr std::size_t kMaskStart = 11;  // prior-knowledge slots

  /// Fixed scales that map each slot to roughly [-1, 1] for the networks.
  static const std::array<double, 13>& scales();
  std::array<double, 13> normalized() const;
};

enum class ObservationMode { Perfect, Imperfect };

/// Block amplitudes of the multiplicative measurement noise: each
/// kinematic slot is scaled by (1 + delta), delta ~ U(-sigma, sigma),
/// sigma chosen by the slot's unit (length / rate / acceleration).
struct NoiseSpec {
  double sigma_y = 0.0;
  double sigma_v = 0.0;
  double sigma_a = 0.0;

  bool zero() const { return sigma_y == 0.0 && sigma_v == 0.0 && sigma_a == 0.0; }
  void validate() const;
};

struct RewardParams {
  double alpha1 = 500.0;  // I-T miss scale [m]
  double alpha2 = 500.0;  // I-D miss scale [m]
  double beta1 = 1.0;
  double beta2 = 1.0;
  double sigma_terminal = 7.5;
  double bound_c = 1.0;       // intended |r_medium| bound
  int foresight_steps = 200;  // terminal reward must beat the bound this many steps out
  double discount = 0.99;

  /// Enforces sigma_terminal >= bound_c / discount^foresight_steps.
  void validate() const;
};

double medium_reward(const ZemPair& z, const RewardParams& rp);
double terminal_reward(bool success, const RewardParams& rp);

struct CurriculumStage {
  int stage = 1;  // 1..3
  AnalyticPolicy interceptor_policy;
  double interceptor_max_accel = 0.0;
};

/// Stage schedule: episodes 0-100 fly against a non-maneuvering
/// interceptor, 101-1000 against a 6g square wave, afterwards against the
/// optimal guidance law with max acceleration drawn from {2g, 4g, 6g}.
CurriculumStage curriculum_stage(long episode_index, const EngagementConfig& config,
                                 Rng& rng);

struct EpisodeOutcome {
  bool success = false;
  bool interceptor_destroyed = false;
  double miss_it = 0.0;  // |y_it| at final time (projected miss when destroyed earlier) [m]
  double miss_id = 0.0;  // |y_id| at the defender's interception time [m]
  double t_end = 0.0;
  double accumulated_reward = 0.0;  // plain sum over the episode
  double discounted_return = 0.0;   // gamma-weighted sum from t = 0
};

/// Success: the defender destroys the interceptor, or the interceptor
/// misses the target by more than the lethal radius.
EpisodeOutcome judge_outcome(bool interceptor_destroyed, double miss_id, double miss_it,
                             double t_end, const EngagementConfig& config);

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  std::optional<EpisodeOutcome> outcome;
};

/// One row per agent decision, for trajectory dumps.
struct TraceRow {
  double t;
  std::array<double, 7> x;
  double u_target, u_defender, u_interceptor;
  double z_it, z_id;
  double reward;
};
using EpisodeTrace = std::vector<TraceRow>;

struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

/// The decision-process wrapper around the linear engagement: holds the
/// state, runs the scripted interceptor, applies the team action, shapes
/// rewards and judges the outcome.
class Environment {
 public:
  Environment(const EngagementConfig& config, const RewardParams& reward);

  /// Swap the scripted adversary (curriculum stages, evaluation sweeps).
  /// max_accel overrides the interceptor's command bound for the episode.
  void set_adversary(const AnalyticPolicy& policy, double max_accel);
  void set_observation(ObservationMode mode, const NoiseSpec& noise);
  /// false = sparse reward (terminal signal only).
  void set_reward_shaping(bool shaped);
  void set_trace(EpisodeTrace* trace) { trace_ = trace; }

  Observation reset(std::uint64_t seed);
  StepResult step(const std::array<double, 2>& action);

  bool done() const { return done_; }
  const SimClock& clock() const { return clock_; }
  const LinearState& state() const { return state_; }
  const EngagementConfig& active_config() const { return active_; }
  ZemPair current_zem() const;

  /// Steps per episode upper bound (full horizon / decision interval).
  long max_decision_steps() const;

  /// Build the observation for an arbitrary state; exposed for tests.
  Observation observe(const LinearState& state, const SimClock& clock,
                      ObservationMode mode, const NoiseSpec& noise, Rng& rng) const;

 private:
  ZemPair zem_now(const LinearState& state, const SimClock& clock) const;

  EngagementConfig base_;
  EngagementConfig active_;  // base with the adversary's bound applied
  RewardParams reward_;
  AnalyticPolicy adversary_;
  ObservationMode mode_ = ObservationMode::Perfect;
  NoiseSpec noise_;
  bool shaped_ = true;

  LinearState state_;
  SimClock clock_;
  Rng rng_{0};
  bool started_ = false;
  bool done_ = false;
  bool past_tid_ = false;
  bool interceptor_destroyed_ = false;
  double frozen_z_id_ = 0.0;
  double miss_id_ = 0.0;
  double sum_reward_ = 0.0;
  double discounted_ = 0.0;
  double discount_pow_ = 1.0;
  EpisodeTrace* trace_ = nullptr;
};

}  // namespace tridef
