#pragma once

#include "tridef/engagement.hpp"
#include "tridef/zem.hpp"

#include <stdexcept>
#include <string>

namespace tridef {

/// sign with the tie-break used throughout the guidance laws: sign(0) = +1.
inline double sign_pos(double v) { return v >= 0.0 ? 1.0 : -1.0; }

/// Raised when the linear-quadratic gain integral is not positive, i.e. the
/// chosen weights break the convergence condition.
struct GainSingularityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The two published readings of the gain expression "1 / (integral) - 1".
enum class LqoglGainForm {
  ReciprocalMinusOne,  // (1 / integral) - 1  (default)
  ReciprocalOfOffset,  // 1 / (integral - 1)
};

struct LqoglWeights {
  double omega1 = 1.0;   // evade branch, own-effort weight
  double omega2 = 25.0;  // evade branch, defender weight
  double xi1 = 1.0;      // pursuit branch, own-effort weight
  double xi2 = 25.0;     // pursuit branch, target weight
  LqoglGainForm gain_form = LqoglGainForm::ReciprocalMinusOne;

  void validate() const;
};

/// Bang-bang interceptor law: evade the defender while its predicted miss
/// is inside the switching radius, otherwise pursue the target. Commands
/// zero once the relevant triangle's time-to-go has expired.
double sogl_interceptor(const ZemPair& z, double tau_interceptor, double max_accel,
                        double switching_radius_eta);

/// Bang-bang team law: the target grows the I-T miss, the defender drives
/// the I-D miss to zero. Returns {u_target, u_defender}.
std::array<double, 2> sogl_target_defender(const ZemPair& z, const EngagementConfig& config);

/// Horizon-integral gains K (evade) and P (pursuit) of the linear-quadratic
/// interceptor law, evaluated by adaptive Simpson quadrature (abs tol 1e-9).
/// Throws GainSingularityError when the weighted integral is not positive.
std::array<double, 2> lqogl_gains(const SimClock& clock, const EngagementConfig& config,
                                  const LqoglWeights& weights);

/// Linear-quadratic interceptor command (miss-proportional, clamped).
double lqogl_interceptor(const ZemPair& z, const SimClock& clock,
                         const EngagementConfig& config, const LqoglWeights& weights);

/// +amplitude for the first half of every period, -amplitude for the second.
double square_wave(double t, double amplitude, double period);

/// Scripted interceptor policies: the curriculum adversaries plus the two
/// optimal laws.
struct AnalyticPolicy {
  enum class Kind { NonManeuvering, SquareWave, Sogl, Lqogl };

  Kind kind = Kind::NonManeuvering;
  double amplitude = 0.0;  // square wave [m/s^2]
  double period = 4.0;     // square wave [s]
  LqoglWeights weights;    // lqogl only

  static AnalyticPolicy non_maneuvering();
  static AnalyticPolicy square(double amplitude, double period);
  static AnalyticPolicy sogl();
  static AnalyticPolicy lqogl(const LqoglWeights& weights = {});

  static AnalyticPolicy from_name(const std::string& name, double amplitude, double period);
  std::string name() const;
};

/// Evaluate a scripted interceptor policy. The interceptor's command bound,
/// lag and the switching radius come from the config (the curriculum stages
/// override the config's interceptor entry).
double interceptor_command(const AnalyticPolicy& policy, const ZemPair& z,
                           const SimClock& clock, const EngagementConfig& config);

}  // namespace tridef
