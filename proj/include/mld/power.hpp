#pragma once

#include <span>

namespace mld {

double normal_cdf(double x);

/// Inverse of normal_cdf, accurate to a few ulps on (0, 1).
double normal_quantile(double p);

/// Mean over se_samples of the two-sided normal-approximation power
/// Phi(|delta|/se - z) + Phi(-|delta|/se - z), z = z_{1 - alpha/2}.
/// se_samples are standard errors on the experimental-minus-control scale.
double empirical_power(std::span<const double> se_samples, double effect_size_diff, double alpha);

}  // namespace mld
