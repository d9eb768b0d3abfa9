#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Dense>

namespace cage {

using Rng = std::mt19937_64;

/// Mixes a base seed with a list of stream indices (splitmix64 finalizer),
/// so that per-task streams are independent of evaluation order.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> stream);

double standard_normal(Rng& rng);

Eigen::VectorXd standard_normal_vector(Eigen::Index n, Rng& rng);

/// Gamma(shape, rate) variate.
double gamma_variate(double shape, double rate, Rng& rng);

/// Inverse-gamma(shape, scale) variate, density proportional to x^{-shape-1} exp(-scale/x).
double inverse_gamma_variate(double shape, double scale, Rng& rng);

/// Draws a precision matrix K ~ Wishart(df, S^{-1}), i.e. K^{-1} ~ InverseWishart(df, S).
/// Uses the Bartlett decomposition; S must be symmetric positive definite.
Eigen::MatrixXd sample_wishart_precision(double df, const Eigen::MatrixXd& iw_scale, Rng& rng);

/// Q ~ InverseWishart(df, S) with E[Q] = S / (df - r - 1).
Eigen::MatrixXd sample_inverse_wishart(double df, const Eigen::MatrixXd& iw_scale, Rng& rng);

}  // namespace cage
