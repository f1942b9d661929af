#include "tridef/environment.hpp"

#include <algorithm>
#include <cmath>

namespace tridef {

const std::array<double, 13>& Observation::scales() {
  static const std::array<double, 13> s = {
      2500.0, 500.0, 2500.0, 500.0,  // lateral offsets and rates
      60.0, 60.0, 60.0,              // accelerations
      20.0, 20.0,                    // times to go
      2500.0, 2500.0,                // zero-effort misses
      60.0, 0.1,                     // prior knowledge
  };
  return s;
}

std::array<double, 13> Observation::normalized() const {
  std::array<double, 13> out;
  const auto& s = scales();
  for (std::size_t i = 0; i < kSize; ++i) out[i] = o[i] / s[i];
  return out;
}

void NoiseSpec::validate() const {
  if (sigma_y < 0 || sigma_v < 0 || sigma_a < 0)
    throw ConfigError("noise amplitudes must be >= 0");
}

void RewardParams::validate() const {
  if (alpha1 <= 0 || alpha2 <= 0 || beta1 <= 0 || beta2 <= 0)
    throw ConfigError("reward scales and exponents must be > 0");
  if (sigma_terminal <= 0 || bound_c <= 0)
    throw ConfigError("sigma_terminal and bound_c must be > 0");
  if (discount <= 0.0 || discount > 1.0) throw ConfigError("discount must be in (0, 1]");
  if (foresight_steps < 0) throw ConfigError("foresight_steps must be >= 0");
  const double floor = bound_c / std::pow(discount, foresight_steps);
  if (sigma_terminal < floor)
    throw ConfigError("sigma_terminal " + std::to_string(sigma_terminal) +
                      " below the foresight bound c/gamma^n = " + std::to_string(floor));
}

double medium_reward(const ZemPair& z, const RewardParams& rp) {
  return std::pow(std::abs(z.z_it / rp.alpha1), rp.beta1) -
         std::pow(std::abs(z.z_id / rp.alpha2), rp.beta2);
}

double terminal_reward(bool success, const RewardParams& rp) {
  return success ? rp.sigma_terminal : -rp.sigma_terminal;
}

CurriculumStage curriculum_stage(long episode_index, const EngagementConfig& config,
                                 Rng& rng) {
  const double g = config.gravity_g;
  CurriculumStage out;
  if (episode_index <= 100) {
    out.stage = 1;
    out.interceptor_policy = AnalyticPolicy::non_maneuvering();
    out.interceptor_max_accel = 0.0;
  } else if (episode_index <= 1000) {
    out.stage = 2;
    out.interceptor_policy = AnalyticPolicy::square(6.0 * g, 4.0);
    out.interceptor_max_accel = 6.0 * g;
  } else {
    out.stage = 3;
    out.interceptor_policy = AnalyticPolicy::sogl();
    const double choices[3] = {2.0 * g, 4.0 * g, 6.0 * g};
    out.interceptor_max_accel = choices[rng.uniform_index(3)];
  }
  return out;
}

EpisodeOutcome judge_outcome(bool interceptor_destroyed, double miss_id, double miss_it,
                             double t_end, const EngagementConfig& config) {
  EpisodeOutcome out;
  out.interceptor_destroyed = interceptor_destroyed;
  out.miss_id = miss_id;
  out.miss_it = miss_it;
  out.t_end = t_end;
  out.success = interceptor_destroyed || miss_it > config.lethal_radius_it;
  return out;
}

Environment::Environment(const EngagementConfig& config, const RewardParams& reward)
    : base_(config), active_(config), reward_(reward) {
  base_.validate();
  reward_.validate();
  adversary_ = AnalyticPolicy::sogl();
}

void Environment::set_adversary(const AnalyticPolicy& policy, double max_accel) {
  adversary_ = policy;
  active_ = base_;
  active_.player(Player::Interceptor).max_accel = max_accel;
}

void Environment::set_observation(ObservationMode mode, const NoiseSpec& noise) {
  noise.validate();
  mode_ = mode;
  noise_ = noise;
}

void Environment::set_reward_shaping(bool shaped) { shaped_ = shaped; }

long Environment::max_decision_steps() const {
  const SimClock clock = interception_times(base_);
  return static_cast<long>(std::ceil(clock.t_it / base_.decision_dt - 1e-9));
}

Observation Environment::reset(std::uint64_t seed) {
  rng_ = Rng(seed);
  clock_ = interception_times(active_);
  state_ = LinearState{};

  const double target_alt = active_.player(Player::Target).init_vertical;
  const double defender_alt = active_.player(Player::Defender).init_vertical;
  const double alt = rng_.uniform(active_.interceptor_altitude_range[0],
                                  active_.interceptor_altitude_range[1]);
  state_.x[0] = alt - target_alt;                  // y_it
  state_.x[2] = state_.x[0] - (defender_alt - target_alt);  // y_id

  started_ = true;
  done_ = false;
  past_tid_ = false;
  interceptor_destroyed_ = false;
  frozen_z_id_ = 0.0;
  miss_id_ = 0.0;
  sum_reward_ = 0.0;
  discounted_ = 0.0;
  discount_pow_ = 1.0;
  return observe(state_, clock_, mode_, noise_, rng_);
}

ZemPair Environment::zem_now(const LinearState& state, const SimClock& clock) const {
  ZemPair z = zem(state, clock, active_);
  if (past_tid_) {
    z.z_id = frozen_z_id_;
    z.t_go_id = 0.0;
  }
  return z;
}

ZemPair Environment::current_zem() const { return zem_now(state_, clock_); }

Observation Environment::observe(const LinearState& state, const SimClock& clock,
                                 ObservationMode mode, const NoiseSpec& noise,
                                 Rng& rng) const {
  const ZemPair z = zem_now(state, clock);
  Observation obs;
  obs.o = {state.x[0], state.x[1], state.x[2], state.x[3],
           state.x[4], state.x[5], state.x[6],
           z.t_go_it,  z.t_go_id,
           z.z_it,     z.z_id,
           active_.player(Player::Interceptor).max_accel,
           active_.player(Player::Interceptor).time_constant};
  if (mode == ObservationMode::Imperfect) {
    // unit-blocked multiplicative noise on the nine kinematic slots
    static constexpr std::size_t kLengthSlots[] = {0, 2, 9, 10};
    static constexpr std::size_t kRateSlots[] = {1, 3};
    static constexpr std::size_t kAccelSlots[] = {4, 5, 6};
    for (auto i : kLengthSlots) obs.o[i] *= 1.0 + rng.uniform(-noise.sigma_y, noise.sigma_y);
    for (auto i : kRateSlots) obs.o[i] *= 1.0 + rng.uniform(-noise.sigma_v, noise.sigma_v);
    for (auto i : kAccelSlots) obs.o[i] *= 1.0 + rng.uniform(-noise.sigma_a, noise.sigma_a);
    obs.o[11] = 0.0;  // prior knowledge masked
    obs.o[12] = 0.0;
  }
  return obs;
}

StepResult Environment::step(const std::array<double, 2>& action) {
  if (!started_) throw ContractError("step before reset");
  if (done_) throw ContractError("step after episode end");

  const double u_target =
      clamp_command(action[0], 1.0) * active_.player(Player::Target).max_accel;
  const double u_defender =
      clamp_command(action[1], 1.0) * active_.player(Player::Defender).max_accel;

  const double t_stop = std::min(clock_.t + active_.decision_dt, clock_.t_it);
  double logged_u_int = 0.0;
  bool first_substep = true;

  while (clock_.t < t_stop - 1e-12 && !done_) {
    // land exactly on the defender event and the final time
    double dt = std::min(active_.physics_dt, t_stop - clock_.t);
    if (!past_tid_ && clock_.t < clock_.t_id && clock_.t + dt > clock_.t_id) {
      dt = clock_.t_id - clock_.t;
    }

    const ZemPair z = zem_now(state_, clock_);
    const double u_int = interceptor_command(adversary_, z, clock_, active_);
    if (first_substep) {
      logged_u_int = u_int;
      first_substep = false;
    }

    const Commands commands{u_int, u_target, past_tid_ ? 0.0 : u_defender};
    state_ = step_linear_exact(state_, commands, active_, dt);
    clock_.t += dt;

    if (!past_tid_ && clock_.t >= clock_.t_id - 1e-12) {
      // defender interception instant
      past_tid_ = true;
      frozen_z_id_ = state_.x[2];  // zem equals the lateral separation at t_go = 0
      miss_id_ = std::abs(state_.x[2]);
      if (miss_id_ <= active_.lethal_radius_id) {
        interceptor_destroyed_ = true;
        done_ = true;
      }
    }
    if (clock_.t >= clock_.t_it - 1e-12) done_ = true;
  }

  StepResult result;
  const ZemPair z_after = zem_now(state_, clock_);
  double reward = shaped_ ? medium_reward(z_after, reward_) : 0.0;

  if (done_) {
    const double miss_it = interceptor_destroyed_ ? std::abs(z_after.z_it)
                                                  : std::abs(state_.x[0]);
    EpisodeOutcome outcome =
        judge_outcome(interceptor_destroyed_, miss_id_, miss_it, clock_.t, active_);
    reward += terminal_reward(outcome.success, reward_);
    sum_reward_ += reward;
    discounted_ += discount_pow_ * reward;
    outcome.accumulated_reward = sum_reward_;
    outcome.discounted_return = discounted_;
    result.outcome = outcome;
  } else {
    sum_reward_ += reward;
    discounted_ += discount_pow_ * reward;
  }
  discount_pow_ *= reward_.discount;

  result.reward = reward;
  result.done = done_;
  result.observation = observe(state_, clock_, mode_, noise_, rng_);

  if (trace_) {
    trace_->push_back(TraceRow{clock_.t, state_.x, u_target, u_defender, logged_u_int,
                               z_after.z_it, z_after.z_id, reward});
  }
  return result;
}

}  // namespace tridef
