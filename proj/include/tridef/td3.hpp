#pragma once

#include "tridef/checkpoint.hpp"
#include "tridef/environment.hpp"
#include "tridef/net.hpp"
#include "tridef/rng.hpp"

#include <array>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace tridef {

/// Training arithmetic runs in single precision (double accumulation where
/// it matters); checkpoints are written as float64 either way.
using Real = float;

struct Transition {
  std::array<Real, Observation::kSize> obs{};
  std::array<Real, 2> action{};
  Real reward = 0;
  std::array<Real, Observation::kSize> next_obs{};
  bool done = false;
};

/// Fixed-capacity FIFO ring with uniform sampling (with replacement).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(const Transition& tr);
  std::size_t size() const { return count_; }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t total_pushed() const { return pushed_; }

  /// Oldest-first access (index 0 = oldest surviving element).
  const Transition& at(std::size_t logical) const;

  /// False (and out untouched) while the buffer holds fewer than batch
  /// elements.
  bool sample(int batch, Rng& rng, std::vector<Transition>& out) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> data_;
  std::size_t head_ = 0;  // next write slot
  std::size_t count_ = 0;
  std::uint64_t pushed_ = 0;
};

struct Td3Config {
  double discount = 0.99;
  double lr = 3e-4;
  int buffer_capacity = 5120;
  int batch_size = 128;
  double soft_update_kappa = 5e-3;
  int policy_delay = 2;
  long train_frequency = 6000;  // env steps collected between training phases
  double smoothing_sigma = 0.2;
  double smoothing_clip = 0.5;
  double exploration_sigma = 0.1;
  long warmup_steps = 1000;

  void validate() const;
};

struct TrainingDivergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Actor, twin critics, their targets and optimizer state.
struct AgentBundle {
  Mlp<Real> actor, actor_target;
  Mlp<Real> critic1, critic2, critic1_target, critic2_target;
  AdamOptimizer<Real> actor_opt, critic1_opt, critic2_opt;
  long critic_updates = 0;
  long actor_updates = 0;

  static AgentBundle create(int obs_dim, int action_dim, const Td3Config& cfg,
                            std::uint64_t seed);
  void save(const std::filesystem::path& path) const;
  static AgentBundle load(const std::filesystem::path& path);
};

/// Bootstrapped regression targets: clipped-noise target action, then
/// r + (1 - done) * gamma * min of the two target critics.
std::vector<Real> critic_target(const std::vector<Transition>& batch, AgentBundle& agent,
                                const Td3Config& cfg, Rng& noise_rng);

/// One mean-squared regression step of both critics toward the shared
/// targets. Returns the two losses.
std::array<double, 2> critic_update(const std::vector<Transition>& batch,
                                    const std::vector<Real>& targets, AgentBundle& agent,
                                    const Td3Config& cfg);

/// One deterministic-policy-gradient ascent step on critic1's value of the
/// actor's action. Returns the actor loss (negated mean value).
double actor_update(const std::vector<Transition>& batch, AgentBundle& agent,
                    const Td3Config& cfg);

/// target <- kappa * source + (1 - kappa) * target, per parameter.
void soft_update(const Mlp<Real>& source, Mlp<Real>& target, double kappa);

/// Noisy policy query: uniform random during warmup, otherwise
/// clamp(actor(obs) + N(0, sigma)) per component.
std::array<double, 2> exploration_action(const Mlp<Real>& actor,
                                         const std::array<double, 13>& obs_normalized,
                                         const Td3Config& cfg, long global_step, Rng& rng);

/// One full TD3 iteration (targets, critic regression, delayed policy and
/// target updates). Throws TrainingDivergence on non-finite or exploding
/// losses.
struct UpdateStats {
  double critic1_loss = 0, critic2_loss = 0;
  bool actor_updated = false;
  double actor_loss = 0;
};
UpdateStats td3_update(const ReplayBuffer& buffer, AgentBundle& agent, const Td3Config& cfg,
                       Rng& sample_rng, Rng& noise_rng);

struct EpisodeRecord {
  long episode = 0;
  double accumulated_reward = 0;
  bool win = false;
  int stage = 0;
  long steps = 0;
};

struct TrainOptions {
  EngagementConfig engagement;
  RewardParams reward;
  Td3Config td3;
  bool shaped_reward = true;
  bool curriculum = true;
  long episodes = 5000;
  std::uint64_t seed = 0;
  int workers = 1;
  std::filesystem::path out_dir;  // checkpoints + learning_curve.csv land here
  int checkpoint_every = 100;
  std::function<void(const EpisodeRecord&)> on_episode;  // optional progress hook
};

struct TrainResult {
  std::vector<EpisodeRecord> curve;
  std::filesystem::path final_checkpoint;       // full bundle
  std::filesystem::path final_actor_checkpoint; // actor only
  long total_env_steps = 0;
  long total_updates = 0;
  bool diverged = false;
  std::string divergence_message;
};

/// Curriculum-driven training loop. Deterministic for workers == 1; with
/// more workers rollouts are merged in arrival order.
TrainResult train(const TrainOptions& options);

/// Learning-curve CSV helpers (episode, accumulated_reward, win, stage).
void write_learning_curve(const std::filesystem::path& path,
                          const std::vector<EpisodeRecord>& curve);
std::vector<EpisodeRecord> read_learning_curve(const std::filesystem::path& path);

}  // namespace tridef
