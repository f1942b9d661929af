#include "tridef/td3.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace tridef {

void Td3Config::validate() const {
  if (discount <= 0.0 || discount > 1.0) throw ConfigError("td3: discount in (0,1]");
  if (lr <= 0.0) throw ConfigError("td3: lr must be > 0");
  if (buffer_capacity <= 0 || batch_size <= 0 || batch_size > buffer_capacity)
    throw ConfigError("td3: need 0 < batch_size <= buffer_capacity");
  if (soft_update_kappa <= 0.0 || soft_update_kappa > 1.0)
    throw ConfigError("td3: soft_update_kappa in (0,1]");
  if (policy_delay < 1) throw ConfigError("td3: policy_delay >= 1");
  if (train_frequency < 1) throw ConfigError("td3: train_frequency >= 1");
  if (smoothing_sigma < 0 || smoothing_clip < 0 || exploration_sigma < 0)
    throw ConfigError("td3: noise parameters must be >= 0");
  if (warmup_steps < 0) throw ConfigError("td3: warmup_steps >= 0");
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  data_.reserve(capacity);
}

void ReplayBuffer::push(const Transition& tr) {
  if (count_ < capacity_) {
    data_.push_back(tr);
    ++count_;
  } else {
    data_[head_] = tr;  // overwrite the oldest
  }
  head_ = (head_ + 1) % capacity_;
  ++pushed_;
}

const Transition& ReplayBuffer::at(std::size_t logical) const {
  if (logical >= count_) throw std::out_of_range("replay buffer index");
  if (count_ < capacity_) return data_[logical];
  return data_[(head_ + logical) % capacity_];
}

bool ReplayBuffer::sample(int batch, Rng& rng, std::vector<Transition>& out) const {
  if (count_ < std::size_t(batch)) return false;
  out.resize(batch);
  for (int i = 0; i < batch; ++i) out[i] = data_[rng.uniform_index(count_)];
  return true;
}

AgentBundle AgentBundle::create(int obs_dim, int action_dim, const Td3Config& cfg,
                                std::uint64_t seed) {
  cfg.validate();
  NetworkSpec actor_spec;
  actor_spec.input_dim = obs_dim;
  actor_spec.output_dim = action_dim;
  actor_spec.tanh_head = true;
  NetworkSpec critic_spec;
  critic_spec.input_dim = obs_dim + action_dim;
  critic_spec.output_dim = 1;
  critic_spec.tanh_head = false;

  AgentBundle b;
  b.actor = Mlp<Real>(actor_spec, Rng::mix(seed, 11));
  b.critic1 = Mlp<Real>(critic_spec, Rng::mix(seed, 12));
  b.critic2 = Mlp<Real>(critic_spec, Rng::mix(seed, 13));
  b.actor_target = b.actor;
  b.critic1_target = b.critic1;
  b.critic2_target = b.critic2;
  b.actor_opt = AdamOptimizer<Real>(b.actor.param_count(), cfg.lr);
  b.critic1_opt = AdamOptimizer<Real>(b.critic1.param_count(), cfg.lr);
  b.critic2_opt = AdamOptimizer<Real>(b.critic2.param_count(), cfg.lr);
  return b;
}

namespace {

std::vector<double> to_doubles(std::span<const Real> in) {
  return std::vector<double>(in.begin(), in.end());
}

void from_doubles(const std::vector<double>& in, std::span<Real> out) {
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = Real(in[i]);
}

void save_net(CheckpointFile& file, const std::string& name, const Mlp<Real>& net,
              nlohmann::json& nets) {
  nets[name] = spec_to_json(net.spec());
  file.add_array(name, to_doubles(net.params()));
}

Mlp<Real> load_net(const CheckpointFile& file, const std::string& name) {
  Mlp<Real> net(spec_from_json(file.header.at("nets").at(name)), 0);
  const auto& flat = file.array(name);
  if (flat.size() != net.param_count())
    throw ConfigError("bundle checkpoint: bad length for " + name);
  from_doubles(flat, net.params());
  return net;
}

void save_opt(CheckpointFile& file, const std::string& name,
              const AdamOptimizer<Real>& opt, nlohmann::json& opts) {
  opts[name] = {{"steps", opt.step_count()}, {"lr", opt.lr()}};
  file.add_array(name + ".m", opt.first_moment());
  file.add_array(name + ".v", opt.second_moment());
}

AdamOptimizer<Real> load_opt(const CheckpointFile& file, const std::string& name,
                             std::size_t n) {
  const auto& meta = file.header.at("optimizers").at(name);
  AdamOptimizer<Real> opt(n, meta.at("lr").get<double>());
  opt.first_moment() = file.array(name + ".m");
  opt.second_moment() = file.array(name + ".v");
  if (opt.first_moment().size() != n || opt.second_moment().size() != n)
    throw ConfigError("bundle checkpoint: bad optimizer state for " + name);
  opt.restore(meta.at("steps").get<long>());
  return opt;
}

}  // namespace

void AgentBundle::save(const std::filesystem::path& path) const {
  CheckpointFile file;
  file.header["payload"] = "td3_bundle";
  file.header["critic_updates"] = critic_updates;
  file.header["actor_updates"] = actor_updates;
  auto& nets = file.header["nets"] = nlohmann::json::object();
  save_net(file, "actor", actor, nets);
  save_net(file, "actor_target", actor_target, nets);
  save_net(file, "critic1", critic1, nets);
  save_net(file, "critic2", critic2, nets);
  save_net(file, "critic1_target", critic1_target, nets);
  save_net(file, "critic2_target", critic2_target, nets);
  auto& opts = file.header["optimizers"] = nlohmann::json::object();
  save_opt(file, "actor_opt", actor_opt, opts);
  save_opt(file, "critic1_opt", critic1_opt, opts);
  save_opt(file, "critic2_opt", critic2_opt, opts);
  file.write(path);
}

AgentBundle AgentBundle::load(const std::filesystem::path& path) {
  const CheckpointFile file = CheckpointFile::read(path);
  if (file.header.at("payload") != "td3_bundle")
    throw ConfigError("not a td3 bundle checkpoint: " + path.string());
  AgentBundle b;
  b.actor = load_net(file, "actor");
  b.actor_target = load_net(file, "actor_target");
  b.critic1 = load_net(file, "critic1");
  b.critic2 = load_net(file, "critic2");
  b.critic1_target = load_net(file, "critic1_target");
  b.critic2_target = load_net(file, "critic2_target");
  b.actor_opt = load_opt(file, "actor_opt", b.actor.param_count());
  b.critic1_opt = load_opt(file, "critic1_opt", b.critic1.param_count());
  b.critic2_opt = load_opt(file, "critic2_opt", b.critic2.param_count());
  b.critic_updates = file.header.at("critic_updates").get<long>();
  b.actor_updates = file.header.at("actor_updates").get<long>();
  return b;
}

namespace {

// Batched workspaces reused across updates (single learner thread).
struct Scratch {
  Mlp<Real>::Batch actor_ws, critic1_ws, critic2_ws;
  std::vector<Real> obs, next_obs, critic_in, q, dq, grad, dinput;
};

Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

constexpr int kObsDim = int(Observation::kSize);

void gather_obs(const std::vector<Transition>& batch, bool next, std::vector<Real>& out) {
  const int n = int(batch.size());
  out.resize(std::size_t(n) * kObsDim);
  for (int i = 0; i < n; ++i) {
    const auto& src = next ? batch[i].next_obs : batch[i].obs;
    std::copy(src.begin(), src.end(), out.begin() + std::size_t(i) * kObsDim);
  }
}

void concat_critic_input(const std::vector<Real>& obs, const Real* actions, int n,
                         std::vector<Real>& out) {
  const int dim = kObsDim + 2;
  out.resize(std::size_t(n) * dim);
  for (int i = 0; i < n; ++i) {
    Real* row = out.data() + std::size_t(i) * dim;
    std::copy(obs.begin() + std::size_t(i) * kObsDim,
              obs.begin() + std::size_t(i + 1) * kObsDim, row);
    row[kObsDim] = actions[std::size_t(i) * 2];
    row[kObsDim + 1] = actions[std::size_t(i) * 2 + 1];
  }
}

void check_finite(double loss, const char* what) {
  if (!std::isfinite(loss) || std::abs(loss) > 1e6) {
    throw TrainingDivergence(std::string(what) + " loss diverged: " + std::to_string(loss));
  }
}

}  // namespace

std::vector<Real> critic_target(const std::vector<Transition>& batch, AgentBundle& agent,
                                const Td3Config& cfg, Rng& noise_rng) {
  auto& s = scratch();
  const int n = int(batch.size());
  gather_obs(batch, true, s.next_obs);

  agent.actor_target.forward_batch(s.next_obs.data(), n, s.actor_ws);
  std::vector<Real> actions(s.actor_ws.out);
  for (auto& a : actions) {
    const double eps = std::clamp(noise_rng.normal(0.0, cfg.smoothing_sigma),
                                  -cfg.smoothing_clip, cfg.smoothing_clip);
    a = Real(std::clamp(double(a) + eps, -1.0, 1.0));
  }

  concat_critic_input(s.next_obs, actions.data(), n, s.critic_in);
  agent.critic1_target.forward_batch(s.critic_in.data(), n, s.critic1_ws);
  agent.critic2_target.forward_batch(s.critic_in.data(), n, s.critic2_ws);

  std::vector<Real> targets(n);
  for (int i = 0; i < n; ++i) {
    const double q_min = std::min(double(s.critic1_ws.out[i]), double(s.critic2_ws.out[i]));
    const double mask = batch[i].done ? 0.0 : 1.0;
    targets[i] = Real(double(batch[i].reward) + mask * cfg.discount * q_min);
  }
  return targets;
}

std::array<double, 2> critic_update(const std::vector<Transition>& batch,
                                    const std::vector<Real>& targets, AgentBundle& agent,
                                    const Td3Config& cfg) {
  (void)cfg;
  auto& s = scratch();
  const int n = int(batch.size());
  gather_obs(batch, false, s.obs);
  std::vector<Real> actions(std::size_t(n) * 2);
  for (int i = 0; i < n; ++i) {
    actions[std::size_t(i) * 2] = batch[i].action[0];
    actions[std::size_t(i) * 2 + 1] = batch[i].action[1];
  }
  concat_critic_input(s.obs, actions.data(), n, s.critic_in);

  std::array<double, 2> losses{};
  Mlp<Real>* critics[2] = {&agent.critic1, &agent.critic2};
  AdamOptimizer<Real>* opts[2] = {&agent.critic1_opt, &agent.critic2_opt};
  Mlp<Real>::Batch* wss[2] = {&s.critic1_ws, &s.critic2_ws};

  for (int c = 0; c < 2; ++c) {
    critics[c]->forward_batch(s.critic_in.data(), n, *wss[c]);
    s.dq.resize(n);
    double loss = 0.0;  // accumulate in double
    for (int i = 0; i < n; ++i) {
      const double resid = double(wss[c]->out[i]) - double(targets[i]);
      loss += resid * resid;
      s.dq[i] = Real(2.0 * resid / n);
    }
    losses[c] = loss / n;
    check_finite(losses[c], "critic");
    s.grad.assign(critics[c]->param_count(), Real(0));
    critics[c]->backward_batch(s.dq.data(), *wss[c], s.grad.data(), nullptr);
    opts[c]->step(critics[c]->params(), s.grad);
  }
  return losses;
}

double actor_update(const std::vector<Transition>& batch, AgentBundle& agent,
                    const Td3Config& cfg) {
  (void)cfg;
  auto& s = scratch();
  const int n = int(batch.size());
  gather_obs(batch, false, s.obs);

  agent.actor.forward_batch(s.obs.data(), n, s.actor_ws);
  concat_critic_input(s.obs, s.actor_ws.out.data(), n, s.critic_in);
  agent.critic1.forward_batch(s.critic_in.data(), n, s.critic1_ws);

  double mean_q = 0.0;
  for (int i = 0; i < n; ++i) mean_q += double(s.critic1_ws.out[i]);
  mean_q /= n;
  const double loss = -mean_q;
  check_finite(loss, "actor");

  // ascend Q: chain the critic's input gradient through the actor
  s.dq.assign(n, Real(-1.0 / n));
  s.dinput.resize(std::size_t(n) * (kObsDim + 2));
  agent.critic1.backward_batch(s.dq.data(), s.critic1_ws, nullptr, s.dinput.data());

  std::vector<Real> daction(std::size_t(n) * 2);
  for (int i = 0; i < n; ++i) {
    daction[std::size_t(i) * 2] = s.dinput[std::size_t(i) * (kObsDim + 2) + kObsDim];
    daction[std::size_t(i) * 2 + 1] = s.dinput[std::size_t(i) * (kObsDim + 2) + kObsDim + 1];
  }
  s.grad.assign(agent.actor.param_count(), Real(0));
  agent.actor.backward_batch(daction.data(), s.actor_ws, s.grad.data(), nullptr);
  agent.actor_opt.step(agent.actor.params(), s.grad);
  return loss;
}

void soft_update(const Mlp<Real>& source, Mlp<Real>& target, double kappa) {
  auto src = source.params();
  auto dst = target.params();
  if (src.size() != dst.size()) throw ConfigError("soft_update: parameter size mismatch");
  const Real k = Real(kappa);
  const Real one_minus = Real(1) - k;
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = k * src[i] + one_minus * dst[i];
}

std::array<double, 2> exploration_action(const Mlp<Real>& actor,
                                         const std::array<double, 13>& obs_normalized,
                                         const Td3Config& cfg, long global_step, Rng& rng) {
  if (global_step < cfg.warmup_steps) {
    return {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  }
  std::array<Real, 13> in;
  for (std::size_t i = 0; i < in.size(); ++i) in[i] = Real(obs_normalized[i]);
  std::array<Real, 2> out;
  actor.forward(in, out);
  return {std::clamp(double(out[0]) + rng.normal(0.0, cfg.exploration_sigma), -1.0, 1.0),
          std::clamp(double(out[1]) + rng.normal(0.0, cfg.exploration_sigma), -1.0, 1.0)};
}

UpdateStats td3_update(const ReplayBuffer& buffer, AgentBundle& agent, const Td3Config& cfg,
                       Rng& sample_rng, Rng& noise_rng) {
  thread_local std::vector<Transition> batch;
  if (!buffer.sample(cfg.batch_size, sample_rng, batch))
    throw ContractError("td3_update: replay buffer not ready");

  UpdateStats stats;
  const auto targets = critic_target(batch, agent, cfg, noise_rng);
  const auto losses = critic_update(batch, targets, agent, cfg);
  stats.critic1_loss = losses[0];
  stats.critic2_loss = losses[1];
  ++agent.critic_updates;

  if (agent.critic_updates % cfg.policy_delay == 0) {
    stats.actor_loss = actor_update(batch, agent, cfg);
    stats.actor_updated = true;
    ++agent.actor_updates;
    soft_update(agent.actor, agent.actor_target, cfg.soft_update_kappa);
    soft_update(agent.critic1, agent.critic1_target, cfg.soft_update_kappa);
    soft_update(agent.critic2, agent.critic2_target, cfg.soft_update_kappa);
  }
  return stats;
}

void write_learning_curve(const std::filesystem::path& path,
                          const std::vector<EpisodeRecord>& curve) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write learning curve: " + path.string());
  out << "episode,accumulated_reward,win,stage\n";
  out.precision(17);
  for (const auto& r : curve) {
    out << r.episode << ',' << r.accumulated_reward << ',' << (r.win ? 1 : 0) << ','
        << r.stage << '\n';
  }
}

std::vector<EpisodeRecord> read_learning_curve(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read learning curve: " + path.string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<EpisodeRecord> curve;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpisodeRecord r;
    std::istringstream ss(line);
    char comma;
    int win = 0;
    ss >> r.episode >> comma >> r.accumulated_reward >> comma >> win >> comma >> r.stage;
    r.win = win != 0;
    curve.push_back(r);
  }
  return curve;
}

namespace {

std::filesystem::path actor_checkpoint_path(const std::filesystem::path& dir, long episode) {
  char name[64];
  std::snprintf(name, sizeof(name), "actor_ep%06ld.ckpt", episode);
  return dir / name;
}

struct WorkerEpisode {
  std::vector<Transition> transitions;
  EpisodeRecord record;
};

}  // namespace

TrainResult train(const TrainOptions& options) {
  options.td3.validate();
  options.reward.validate();
  options.engagement.validate();
  if (options.episodes < 0) throw ConfigError("train: episodes must be >= 0");
  std::filesystem::create_directories(options.out_dir);

  AgentBundle agent = AgentBundle::create(kObsDim, 2, options.td3, Rng::mix(options.seed, 100));
  ReplayBuffer buffer(options.td3.buffer_capacity);
  Rng stage_rng(Rng::mix(options.seed, 5));
  Rng sample_rng(Rng::mix(options.seed, 2));
  Rng smooth_rng(Rng::mix(options.seed, 3));

  TrainResult result;
  result.final_actor_checkpoint = actor_checkpoint_path(options.out_dir, 0);
  save_mlp(result.final_actor_checkpoint, agent.actor, "actor");
  result.final_checkpoint = options.out_dir / "final.ckpt";

  long global_step = 0;
  long steps_since_train = 0;
  long updates = 0;
  bool stop = false;

  auto run_training_phase = [&](long n_updates) {
    for (long i = 0; i < n_updates && !stop; ++i) {
      td3_update(buffer, agent, options.td3, sample_rng, smooth_rng);
      ++updates;
    }
  };

  auto finish_episode = [&](const EpisodeRecord& record) {
    result.curve.push_back(record);
    if (options.on_episode) options.on_episode(record);
    const long done_episodes = record.episode + 1;
    if (options.checkpoint_every > 0 && done_episodes % options.checkpoint_every == 0) {
      result.final_actor_checkpoint =
          actor_checkpoint_path(options.out_dir, done_episodes);
      save_mlp(result.final_actor_checkpoint, agent.actor, "actor");
    }
  };

  auto stage_for = [&](long episode) {
    const long index = options.curriculum ? episode : episode + 1001;
    return curriculum_stage(index, options.engagement, stage_rng);
  };

  try {
    if (options.workers <= 1) {
      Environment env(options.engagement, options.reward);
      env.set_reward_shaping(options.shaped_reward);
      Rng explore_rng(Rng::mix(options.seed, 1));

      for (long ep = 0; ep < options.episodes && !stop; ++ep) {
        const CurriculumStage stage = stage_for(ep);
        env.set_adversary(stage.interceptor_policy, stage.interceptor_max_accel);
        Observation obs = env.reset(Rng::mix(options.seed, 1000003 + ep));
        EpisodeRecord record{ep, 0.0, false, stage.stage, 0};

        while (!env.done()) {
          const auto action = exploration_action(agent.actor, obs.normalized(), options.td3,
                                                 global_step, explore_rng);
          const StepResult sr = env.step({action[0], action[1]});

          Transition tr;
          const auto before = obs.normalized();
          const auto after = sr.observation.normalized();
          for (std::size_t i = 0; i < before.size(); ++i) {
            tr.obs[i] = Real(before[i]);
            tr.next_obs[i] = Real(after[i]);
          }
          tr.action = {Real(action[0]), Real(action[1])};
          tr.reward = Real(sr.reward);
          tr.done = sr.done;
          buffer.push(tr);

          obs = sr.observation;
          ++global_step;
          ++steps_since_train;
          ++record.steps;

          if (steps_since_train >= options.td3.train_frequency &&
              buffer.size() >= std::size_t(options.td3.batch_size)) {
            run_training_phase(steps_since_train);
            steps_since_train = 0;
          }

          if (sr.done) {
            record.accumulated_reward = sr.outcome->accumulated_reward;
            record.win = sr.outcome->success;
          }
        }
        finish_episode(record);
      }
    } else {
      // N rollout workers feed one learner; actor snapshots refresh after
      // every training phase. Arrival order is nondeterministic by design.
      std::mutex mu;
      std::condition_variable cv_push, cv_pop;
      std::deque<WorkerEpisode> queue;
      std::atomic<long> next_episode{0};
      std::atomic<bool> abort{false};
      auto snapshot = std::make_shared<Mlp<Real>>(agent.actor);
      std::mutex snap_mu;
      constexpr std::size_t kQueueCap = 64;

      auto worker_fn = [&](int w) {
        Environment env(options.engagement, options.reward);
        env.set_reward_shaping(options.shaped_reward);
        Rng explore_rng(Rng::mix(options.seed, 41 + w));
        Rng worker_stage_rng(Rng::mix(options.seed, 71 + w));
        while (!abort.load()) {
          const long ep = next_episode.fetch_add(1);
          if (ep >= options.episodes) break;
          const long index = options.curriculum ? ep : ep + 1001;
          const CurriculumStage stage =
              curriculum_stage(index, options.engagement, worker_stage_rng);
          env.set_adversary(stage.interceptor_policy, stage.interceptor_max_accel);
          Observation obs = env.reset(Rng::mix(options.seed, 1000003 + ep));

          std::shared_ptr<Mlp<Real>> actor;
          {
            std::lock_guard<std::mutex> lk(snap_mu);
            actor = snapshot;
          }
          WorkerEpisode we;
          we.record = EpisodeRecord{ep, 0.0, false, stage.stage, 0};
          while (!env.done()) {
            const auto action = exploration_action(*actor, obs.normalized(), options.td3,
                                                   global_step, explore_rng);
            const StepResult sr = env.step({action[0], action[1]});
            Transition tr;
            const auto before = obs.normalized();
            const auto after = sr.observation.normalized();
            for (std::size_t i = 0; i < before.size(); ++i) {
              tr.obs[i] = Real(before[i]);
              tr.next_obs[i] = Real(after[i]);
            }
            tr.action = {Real(action[0]), Real(action[1])};
            tr.reward = Real(sr.reward);
            tr.done = sr.done;
            we.transitions.push_back(tr);
            obs = sr.observation;
            ++we.record.steps;
            if (sr.done) {
              we.record.accumulated_reward = sr.outcome->accumulated_reward;
              we.record.win = sr.outcome->success;
            }
          }
          {
            std::unique_lock<std::mutex> lk(mu);
            cv_pop.wait(lk, [&] { return queue.size() < kQueueCap || abort.load(); });
            if (abort.load()) break;
            queue.push_back(std::move(we));
          }
          cv_push.notify_one();
        }
      };

      std::vector<std::thread> threads;
      for (int w = 0; w < options.workers; ++w) threads.emplace_back(worker_fn, w);

      long episodes_done = 0;
      std::string error;
      while (episodes_done < options.episodes) {
        WorkerEpisode we;
        {
          std::unique_lock<std::mutex> lk(mu);
          cv_push.wait(lk, [&] { return !queue.empty(); });
          we = std::move(queue.front());
          queue.pop_front();
        }
        cv_pop.notify_all();

        bool trained = false;
        try {
          for (const auto& tr : we.transitions) {
            buffer.push(tr);
            ++global_step;
            ++steps_since_train;
            if (steps_since_train >= options.td3.train_frequency &&
                buffer.size() >= std::size_t(options.td3.batch_size)) {
              run_training_phase(steps_since_train);
              steps_since_train = 0;
              trained = true;
            }
          }
        } catch (const TrainingDivergence& e) {
          error = e.what();
          abort.store(true);
          cv_pop.notify_all();
        }
        if (trained) {
          std::lock_guard<std::mutex> lk(snap_mu);
          snapshot = std::make_shared<Mlp<Real>>(agent.actor);
        }
        finish_episode(we.record);
        ++episodes_done;
        if (abort.load()) break;
      }
      abort.store(true);
      cv_pop.notify_all();
      for (auto& t : threads) t.join();
      if (!error.empty()) throw TrainingDivergence(error);
    }
  } catch (const TrainingDivergence& e) {
    result.diverged = true;
    result.divergence_message = e.what();
  }

  agent.save(result.final_checkpoint);
  result.total_env_steps = global_step;
  result.total_updates = updates;
  write_learning_curve(options.out_dir / "learning_curve.csv", result.curve);
  return result;
}

}  // namespace tridef
