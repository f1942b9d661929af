#include "tridef/zem.hpp"

#include <cmath>
#include <stdexcept>

namespace tridef {

double phi(double chi) {
  if (chi < 1e-4) {
    // series keeps precision where exp(-chi)+chi-1 cancels
    return chi * chi * (0.5 - chi / 6.0 + chi * chi / 24.0);
  }
  return std::exp(-chi) + chi - 1.0;
}

double phi_prime(double chi) { return 1.0 - std::exp(-chi); }

ZemPair zem(const LinearState& state, const SimClock& clock, const EngagementConfig& config) {
  if (clock.t > clock.t_it + 1e-12)
    throw std::invalid_argument("zem: clock past final interception time");
  const double tau_i = config.player(Player::Interceptor).time_constant;
  const double tau_t = config.player(Player::Target).time_constant;
  const double tau_d = config.player(Player::Defender).time_constant;

  ZemPair out;
  out.t_go_it = clock.t_go_it();
  out.t_go_id = clock.t_go_id();
  out.z_it = state.x[0] + out.t_go_it * state.x[1] +
             tau_i * tau_i * phi(out.t_go_it / tau_i) * state.x[4] -
             tau_t * tau_t * phi(out.t_go_it / tau_t) * state.x[5];
  out.z_id = state.x[2] + out.t_go_id * state.x[3] +
             tau_i * tau_i * phi(out.t_go_id / tau_i) * state.x[4] -
             tau_d * tau_d * phi(out.t_go_id / tau_d) * state.x[6];
  return out;
}

std::array<double, 2> zem_rate(const SimClock& clock, const EngagementConfig& config,
                               const Commands& commands) {
  const double tau_i = config.player(Player::Interceptor).time_constant;
  const double tau_t = config.player(Player::Target).time_constant;
  const double tau_d = config.player(Player::Defender).time_constant;
  const double t_go_it = clock.t_go_it();
  const double t_go_id = clock.t_go_id();
  const double u_i = clamp_command(commands[0], config.players[0].max_accel);
  const double u_t = clamp_command(commands[1], config.players[1].max_accel);
  const double u_d = clamp_command(commands[2], config.players[2].max_accel);
  return {
      tau_i * phi(t_go_it / tau_i) * u_i - tau_t * phi(t_go_it / tau_t) * u_t,
      tau_i * phi(t_go_id / tau_i) * u_i - tau_d * phi(t_go_id / tau_d) * u_d,
  };
}

}  // namespace tridef
