#include "tridef/guidance.hpp"

#include <cmath>
#include <functional>

namespace tridef {

void LqoglWeights::validate() const {
  if (omega1 < 0 || omega2 < 0 || xi1 < 0 || xi2 < 0)
    throw ConfigError("lqogl weights must be nonnegative");
  if (omega1 == 0 || xi1 == 0)
    throw ConfigError("lqogl own-effort weights must be positive");
}

double sogl_interceptor(const ZemPair& z, double tau_interceptor, double max_accel,
                        double switching_radius_eta) {
  (void)tau_interceptor;  // phi(t_go/tau) only contributes its sign, +1 for t_go > 0
  if (std::abs(z.z_id) < switching_radius_eta && z.t_go_id > 0.0) {
    return max_accel * sign_pos(z.z_id);
  }
  if (z.t_go_it <= 0.0) return 0.0;
  return -max_accel * sign_pos(z.z_it);
}

std::array<double, 2> sogl_target_defender(const ZemPair& z, const EngagementConfig& config) {
  const double u_t_max = config.player(Player::Target).max_accel;
  const double u_d_max = config.player(Player::Defender).max_accel;
  const double u_t = z.t_go_it > 0.0 ? -u_t_max * sign_pos(z.z_it) : 0.0;
  const double u_d = z.t_go_id > 0.0 ? u_d_max * sign_pos(z.z_id) : 0.0;
  return {u_t, u_d};
}

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double fa, double fm, double fb, double whole, double tol,
                        int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  if (b <= a) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

constexpr double kGainQuadTol = 1e-9;

// Remaining-horizon integral of Eq-style weighted squared lag responses,
// written over g = t_final - s so the domain is [0, t_go].
double gain_integral(double t_go, double own_max, double own_tau, double own_weight,
                     double adv_max, double adv_tau, double adv_weight) {
  auto integrand = [&](double g) {
    const double own = own_max * own_tau * phi(g / own_tau);
    const double adv = adv_max * adv_tau * phi(g / adv_tau);
    return own * own / own_weight - adv * adv / adv_weight;
  };
  return integrate(integrand, 0.0, t_go, kGainQuadTol);
}

double apply_gain_form(double integral, LqoglGainForm form, const char* which) {
  if (integral <= 0.0)
    throw GainSingularityError(std::string(which) +
                               ": gain integral not positive; weights violate the "
                               "convergence condition");
  switch (form) {
    case LqoglGainForm::ReciprocalMinusOne:
      return 1.0 / integral - 1.0;
    case LqoglGainForm::ReciprocalOfOffset: {
      const double denom = integral - 1.0;
      if (std::abs(denom) < 1e-12)
        throw GainSingularityError(std::string(which) + ": gain denominator vanishes");
      return 1.0 / denom;
    }
  }
  return 0.0;
}

}  // namespace

std::array<double, 2> lqogl_gains(const SimClock& clock, const EngagementConfig& config,
                                  const LqoglWeights& weights) {
  weights.validate();
  const auto& pi = config.player(Player::Interceptor);
  const auto& pt = config.player(Player::Target);
  const auto& pd = config.player(Player::Defender);

  const double evade_integral =
      gain_integral(clock.t_go_id(), pi.max_accel, pi.time_constant, weights.omega1,
                    pd.max_accel, pd.time_constant, weights.omega2);
  const double pursue_integral =
      gain_integral(clock.t_go_it(), pi.max_accel, pi.time_constant, weights.xi1,
                    pt.max_accel, pt.time_constant, weights.xi2);
  return {apply_gain_form(evade_integral, weights.gain_form, "K"),
          apply_gain_form(pursue_integral, weights.gain_form, "P")};
}

double lqogl_interceptor(const ZemPair& z, const SimClock& clock,
                         const EngagementConfig& config, const LqoglWeights& weights) {
  const auto& pi = config.player(Player::Interceptor);
  const double tau_i = pi.time_constant;
  const double u_max = pi.max_accel;

  if (std::abs(z.z_id) < config.switching_radius_eta && z.t_go_id > 0.0) {
    const double evade_integral =
        gain_integral(clock.t_go_id(), u_max, tau_i, weights.omega1,
                      config.player(Player::Defender).max_accel,
                      config.player(Player::Defender).time_constant, weights.omega2);
    const double k = apply_gain_form(evade_integral, weights.gain_form, "K");
    const double u =
        -(k * z.z_id / weights.omega1) * u_max * tau_i * phi(z.t_go_id / tau_i);
    return clamp_command(u, u_max);
  }
  if (z.t_go_it <= 0.0) return 0.0;
  const double pursue_integral =
      gain_integral(clock.t_go_it(), u_max, tau_i, weights.xi1,
                    config.player(Player::Target).max_accel,
                    config.player(Player::Target).time_constant, weights.xi2);
  const double p = apply_gain_form(pursue_integral, weights.gain_form, "P");
  const double u = -(p * z.z_it / weights.xi1) * u_max * tau_i * phi(z.t_go_it / tau_i);
  return clamp_command(u, u_max);
}

double square_wave(double t, double amplitude, double period) {
  if (period <= 0.0) throw ConfigError("square wave period must be > 0");
  double frac = std::fmod(t, period);
  if (frac < 0.0) frac += period;
  return frac < 0.5 * period ? amplitude : -amplitude;
}

AnalyticPolicy AnalyticPolicy::non_maneuvering() { return {}; }

AnalyticPolicy AnalyticPolicy::square(double amplitude, double period) {
  AnalyticPolicy p;
  p.kind = Kind::SquareWave;
  p.amplitude = amplitude;
  p.period = period;
  return p;
}

AnalyticPolicy AnalyticPolicy::sogl() {
  AnalyticPolicy p;
  p.kind = Kind::Sogl;
  return p;
}

AnalyticPolicy AnalyticPolicy::lqogl(const LqoglWeights& weights) {
  AnalyticPolicy p;
  p.kind = Kind::Lqogl;
  p.weights = weights;
  return p;
}

AnalyticPolicy AnalyticPolicy::from_name(const std::string& name, double amplitude,
                                         double period) {
  if (name == "none") return non_maneuvering();
  if (name == "square") return square(amplitude, period);
  if (name == "sogl") return sogl();
  if (name == "lqogl") return lqogl();
  throw ConfigError("unknown interceptor policy '" + name +
                    "' (expected none|square|sogl|lqogl)");
}

std::string AnalyticPolicy::name() const {
  switch (kind) {
    case Kind::NonManeuvering: return "none";
    case Kind::SquareWave: return "square";
    case Kind::Sogl: return "sogl";
    case Kind::Lqogl: return "lqogl";
  }
  return "?";
}

double interceptor_command(const AnalyticPolicy& policy, const ZemPair& z,
                           const SimClock& clock, const EngagementConfig& config) {
  const auto& pi = config.player(Player::Interceptor);
  switch (policy.kind) {
    case AnalyticPolicy::Kind::NonManeuvering:
      return 0.0;
    case AnalyticPolicy::Kind::SquareWave:
      return clamp_command(square_wave(clock.t, policy.amplitude, policy.period),
                           pi.max_accel);
    case AnalyticPolicy::Kind::Sogl:
      return sogl_interceptor(z, pi.time_constant, pi.max_accel,
                              config.switching_radius_eta);
    case AnalyticPolicy::Kind::Lqogl:
      return lqogl_interceptor(z, clock, config, policy.weights);
  }
  return 0.0;
}

}  // namespace tridef
