#pragma once

#include "tridef/engagement.hpp"

namespace tridef {

/// Zero-effort miss of both collision triangles plus the times-to-go they
/// were evaluated at.
struct ZemPair {
  double z_it = 0.0;    // [m]
  double z_id = 0.0;    // [m]
  double t_go_it = 0.0;  // [s]
  double t_go_id = 0.0;  // [s]
};

/// phi(chi) = exp(-chi) + chi - 1. Carries the first-order lag's influence
/// on the terminal miss; nonnegative and increasing for chi >= 0.
double phi(double chi);

/// Derivative of phi: 1 - exp(-chi).
double phi_prime(double chi);

/// Zero-effort miss of both triangles from the linear state. The miss is
/// the lateral separation that would result at interception if every
/// command were zero from now on.
///
/// After the defender's interception instant the I-D triangle is out of
/// play; callers freeze z_id at its terminal value (the environment does
/// this), and this function reports it with t_go_id = 0.
ZemPair zem(const LinearState& state, const SimClock& clock, const EngagementConfig& config);

/// Time derivative of the miss under the given commands (state drops out:
/// the miss only moves when someone maneuvers).
/// Returns {z_it_rate, z_id_rate} in m/s.
std::array<double, 2> zem_rate(const SimClock& clock, const EngagementConfig& config,
                               const Commands& commands);

}  // namespace tridef
