#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "sb/rng.hpp"

namespace sb::lsn {

// Standard normal density and distribution function (erf-based, absolute
// error below 1e-12).
double gauss_pdf(double z);
double gauss_cdf(double z);

// Closed-form population hinge gradients on the linear/3-slab/noise
// distribution, valid while the hinge is active for all points. noise_norm
// is the l2 norm of the noise-block weights of the unit. A zero noise_norm
// is an error unless `limit` requests the degenerate Phi(+-inf) limit.
double pop_grad_linear(double w1, double w2, double noise_norm, double v,
                       bool limit = false);
double pop_grad_slab(double w1, double w2, double noise_norm, double v,
                     bool limit = false);
// Coefficient G-bar of the noise gradient along w-bar / ||w-bar||.
double pop_grad_noise_coeff(double w1, double w2, double noise_norm, double v,
                            bool limit = false);

// Residual bounds accompanying the noise-gradient approximation: the
// component along w-bar is within `parallel` and the orthogonal component
// within `perp` of G-bar * w-bar (both already scaled by eta).
struct NoiseBounds {
  double parallel = 0.0;
  double perp = 0.0;
};
NoiseBounds noise_residual_bounds(double eta, double v, double c, int d);

// Monte-Carlo estimates of the same three quantities from n draws of
// (y, epsilon, Z), assuming the hinge is active everywhere (the estimator
// mirrors the closed forms' conditioning, it does not clamp).
struct McGrads {
  double linear = 0.0;
  double slab = 0.0;
  double noise_parallel = 0.0;  // component along w-bar direction
};
McGrads mc_pop_grads(double w1, double w2, double noise_norm, double v, long n,
                     std::uint64_t seed);

// Full-vector Monte-Carlo noise gradient for a concrete w-bar (d-2 dims).
Eigen::VectorXd mc_noise_grad(double w1, double w2,
                              const Eigen::VectorXd& wbar, double v, long n,
                              std::uint64_t seed);

struct TheoremParams {
  int d = 400;
  int k = 16;
  double eta = 0.4;
  long m = 0;        // defaults to c * d^2 when 0
  double c = 2.0;    // universal constant, never specified numerically
  int t_steps = 4;
  std::uint64_t seed = 1;

  double c0() const { return 2.0; }
  double c_hat() const { return eta / 4.0; }
  double alpha() const;       // exponent with m = d^alpha / c
  double c_n(int t) const;    // 5 sqrt(alpha) c0 (1 + c_hat)^t
  long sample_size() const { return m > 0 ? m : static_cast<long>(c * d * static_cast<double>(d)); }
  void validate() const;
};

struct TrajectoryPrediction {
  int t = 0;
  double expected_w1_abs = 0.0;   // t*eta/(2 sqrt(k)) for |v| = 1/sqrt(k)
  double w1_band = 0.0;           // c0(1+c_hat)^t / (sqrt(dk) log d)
  double w2_bound = 0.0;          // same as w1_band
  double noise_norm_bound = 0.0;  // c0(1+c_hat)^t / (sqrt(k) log d)
  double score_center = 0.0;      // t*eta/4
  double score_halfwidth = 0.0;   // c_n / sqrt(log d)
};

// Bands of the inductive lemma at step t; throws when t exceeds the lemma's
// admissible range (4/eta)(1 - c_n/sqrt(log d)), naming the bound.
TrajectoryPrediction predict_trajectory(const TheoremParams& params, int t);

// Same bands without the admissibility gate (the gate is vacuous at desk
// scale, where c_n/sqrt(log d) > 1 for every t).
TrajectoryPrediction trajectory_bands(const TheoremParams& params, int t);

struct StepRecord {
  int t = 0;
  double max_w1_dev = 0.0;       // max_j | |w1j| - predicted |
  double w1_band = 0.0;
  double max_w2 = 0.0;
  double w2_bound = 0.0;
  double max_noise_norm = 0.0;
  double noise_bound = 0.0;
  double active_fraction = 0.0;  // hinge-active share of the step's batch
  bool w1_ok = false, w2_ok = false, noise_ok = false;
};

struct TheoremReport {
  TheoremParams params;
  std::vector<StepRecord> steps;  // t = 0 .. t_steps
  double test_error = 1.0;        // on 10^5 fresh samples
  bool all_bands_ok = false;
  bool all_active = false;
};

// Trains the theorem's one-hidden-layer hinge model (frozen output, no
// biases) with one fresh batch of m/t_steps samples per full-batch gradient
// step and checks every band.
TheoremReport verify_theorem(const TheoremParams& params);

}  // namespace sb::lsn
