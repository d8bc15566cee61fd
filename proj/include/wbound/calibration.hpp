#pragma once

// Frozen constants for the implicit-constant checks.
// Generated by `wbound calibrate`; do not edit by hand.

namespace wbound::calibration {

// median ratio 1.74921, max ratio 4.80297 over 50 seeds
inline constexpr double peyre = 9.6059372401911194;
// median ratio 0.010486, max ratio 0.019785 over 50 seeds
inline constexpr double magic_identity = 0.039570056682233817;
// median ratio 4.05142e-06, max ratio 1.23858e-05 over 50 seeds
inline constexpr double stability = 2.4771514818326621e-05;
// median ratio 0.00349967, max ratio 0.00462305 over 50 seeds
inline constexpr double main_bound = 0.0092460977765648159;

}  // namespace wbound::calibration
