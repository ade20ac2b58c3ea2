#include "sb/lsn.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "sb/errors.hpp"

namespace sb::lsn {

namespace {
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
constexpr double kInvSqrt2 = 0.7071067811865475244;

double ratio_or_limit(double num, double noise_norm, bool limit) {
  if (noise_norm > 0.0) return num / noise_norm;
  if (!limit) {
    throw SpecError(
        "population gradient undefined at noise_norm = 0; pass the limit "
        "flag to evaluate the Phi(+-inf) limit");
  }
  if (num > 0.0) return std::numeric_limits<double>::infinity();
  if (num < 0.0) return -std::numeric_limits<double>::infinity();
  return 0.0;
}
}  // namespace

double gauss_pdf(double z) {
  return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

double gauss_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double pop_grad_linear(double w1, double w2, double noise_norm, double v,
                       bool limit) {
  const double a = gauss_cdf(ratio_or_limit(w1 + w2, noise_norm, limit));
  const double b = gauss_cdf(ratio_or_limit(w1 - w2, noise_norm, limit));
  const double c = gauss_cdf(ratio_or_limit(w1, noise_norm, limit));
  return -(v / 4.0) * (2.0 + a + b - 2.0 * c);
}

double pop_grad_slab(double w1, double w2, double noise_norm, double v,
                     bool limit) {
  const double a = gauss_cdf(ratio_or_limit(w1 + w2, noise_norm, limit));
  const double b = gauss_cdf(ratio_or_limit(w1 - w2, noise_norm, limit));
  return -(v / 4.0) * (a - b);
}

double pop_grad_noise_coeff(double w1, double w2, double noise_norm, double v,
                            bool limit) {
  if (noise_norm <= 0.0 && !limit) {
    throw SpecError(
        "population gradient undefined at noise_norm = 0; pass the limit "
        "flag to evaluate the degenerate limit");
  }
  if (noise_norm <= 0.0) return 0.0;  // densities vanish at +-inf
  const double a = gauss_pdf((w1 + w2) / noise_norm);
  const double b = gauss_pdf((w1 - w2) / noise_norm);
  const double c = gauss_pdf(w1 / noise_norm);
  return -(v / (4.0 * noise_norm)) * (a + b - 2.0 * c);
}

NoiseBounds noise_residual_bounds(double eta, double v, double c, int d) {
  if (c <= 0.0 || d < 3) throw SpecError("bad residual-bound parameters");
  const double scd = std::sqrt(c) * d;
  NoiseBounds b;
  b.parallel = 3.0 * eta * std::abs(v) * std::log(scd) / scd;
  b.perp = 6.0 * eta * std::abs(v) / std::sqrt(c * d);
  return b;
}

McGrads mc_pop_grads(double w1, double w2, double noise_norm, double v, long n,
                     std::uint64_t seed) {
  if (n < 1) throw SpecError("need at least one draw");
  if (!(noise_norm > 0.0)) throw SpecError("need a positive noise norm");
  Rng rng = Rng::derived(seed, 71);
  double g1 = 0.0, g2 = 0.0, gn = 0.0;
  for (long i = 0; i < n; ++i) {
    const int y = rng.sign();
    const int eps = rng.sign();
    const double z = rng.normal();
    const double x2 = (y + 1) / 2 * eps;
    const double pre = w1 * y + w2 * x2 + noise_norm * z;
    if (pre < 0.0) continue;  // relu gate (active at 0)
    // hinge assumed active: subgradient is -v * y * x per coordinate
    g1 += -v * y * y;
    g2 += -v * y * x2;
    gn += -v * y * z;  // component along w-bar: x-bar . w-hat = Z
  }
  return {g1 / n, g2 / n, gn / n};
}

Eigen::VectorXd mc_noise_grad(double w1, double w2,
                              const Eigen::VectorXd& wbar, double v, long n,
                              std::uint64_t seed) {
  if (n < 1) throw SpecError("need at least one draw");
  const double nn = wbar.norm();
  if (!(nn > 0.0)) throw SpecError("need a nonzero noise weight vector");
  Rng rng = Rng::derived(seed, 73);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(wbar.size());
  Eigen::VectorXd xbar(wbar.size());
  for (long i = 0; i < n; ++i) {
    const int y = rng.sign();
    const int eps = rng.sign();
    for (int j = 0; j < xbar.size(); ++j) xbar(j) = rng.normal();
    const double pre = w1 * y + w2 * ((y + 1) / 2 * eps) + wbar.dot(xbar);
    if (pre < 0.0) continue;
    total += -v * y * xbar;
  }
  return total / static_cast<double>(n);
}

double TheoremParams::alpha() const {
  return std::log(c * static_cast<double>(sample_size())) /
         std::log(static_cast<double>(d));
}

double TheoremParams::c_n(int t) const {
  return 5.0 * std::sqrt(alpha()) * c0() * std::pow(1.0 + c_hat(), t);
}

void TheoremParams::validate() const {
  if (d < 3 || k < 2 || k % 2 != 0) {
    throw SpecError("theorem setup needs d >= 3 and even k >= 2");
  }
  if (!(eta > 0.0)) throw SpecError("eta must be positive");
  if (!(c > 0.0)) throw SpecError("c must be positive");
  if (t_steps < 1) throw SpecError("need at least one step");
  if (sample_size() < t_steps) throw SpecError("sample size below step count");
}

TrajectoryPrediction trajectory_bands(const TheoremParams& p, int t) {
  p.validate();
  if (t < 0) throw SpecError("negative step");
  const double ld = std::log(static_cast<double>(p.d));
  const double growth = p.c0() * std::pow(1.0 + p.c_hat(), t);
  TrajectoryPrediction pred;
  pred.t = t;
  pred.expected_w1_abs = t * p.eta / (2.0 * std::sqrt(p.k));
  pred.w1_band = growth / (std::sqrt(static_cast<double>(p.d) * p.k) * ld);
  pred.w2_bound = pred.w1_band;
  pred.noise_norm_bound = growth / (std::sqrt(static_cast<double>(p.k)) * ld);
  pred.score_center = t * p.eta / 4.0;
  pred.score_halfwidth = p.c_n(t) / std::sqrt(ld);
  return pred;
}

TrajectoryPrediction predict_trajectory(const TheoremParams& p, int t) {
  const auto pred = trajectory_bands(p, t);
  const double limit =
      (4.0 / p.eta) *
      (1.0 - p.c_n(t) / std::sqrt(std::log(static_cast<double>(p.d))));
  if (static_cast<double>(t) > limit) {
    throw SpecError("step t = " + std::to_string(t) +
                    " exceeds the admissible range t <= (4/eta)(1 - "
                    "c_n/sqrt(log d)) = " +
                    std::to_string(limit));
  }
  return pred;
}

namespace {

// One fresh batch: columns y (+-1), slab eps, noise matrix Z (n x (d-2)).
struct Batch {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;  // n x d
};

Batch draw_lsn_batch(int n, int d, Rng& rng) {
  Batch b;
  b.y.resize(n);
  b.X.resize(n, d);
  for (int i = 0; i < n; ++i) {
    const int y = rng.sign();
    const int eps = rng.sign();
    b.y(i) = y;
    b.X(i, 0) = y;
    b.X(i, 1) = (y + 1) / 2 * eps;
    for (int j = 2; j < d; ++j) b.X(i, j) = rng.normal();
  }
  return b;
}

}  // namespace

TheoremReport verify_theorem(const TheoremParams& p) {
  p.validate();
  TheoremReport rep;
  rep.params = p;

  Rng rng = Rng::derived(p.seed, 83);
  // theorem initialization: w_ij ~ N(0, 1/(d k log^2 d)), v split half/half
  const double ld = std::log(static_cast<double>(p.d));
  const double sigma =
      1.0 / std::sqrt(static_cast<double>(p.d) * p.k * ld * ld);
  Eigen::MatrixXd W(p.d, p.k);
  for (int i = 0; i < p.d; ++i) {
    for (int j = 0; j < p.k; ++j) W(i, j) = sigma * rng.normal();
  }
  Eigen::VectorXd v(p.k);
  const double vmag = 1.0 / std::sqrt(static_cast<double>(p.k));
  for (int j = 0; j < p.k; ++j) v(j) = j < p.k / 2 ? vmag : -vmag;
  for (int j = p.k - 1; j > 0; --j) {
    const int r = static_cast<int>(rng.below(j + 1));
    std::swap(v(j), v(r));
  }

  const long batch_n = p.sample_size() / p.t_steps;

  auto record = [&](int t, double active_fraction) {
    const auto bands = trajectory_bands(p, t);
    StepRecord rec;
    rec.t = t;
    rec.w1_band = bands.w1_band;
    rec.w2_bound = bands.w2_bound;
    rec.noise_bound = bands.noise_norm_bound;
    rec.active_fraction = active_fraction;
    for (int j = 0; j < p.k; ++j) {
      const double predicted = t * p.eta * v(j) / 2.0;
      rec.max_w1_dev = std::max(rec.max_w1_dev, std::abs(W(0, j) - predicted));
      rec.max_w2 = std::max(rec.max_w2, std::abs(W(1, j)));
      rec.max_noise_norm =
          std::max(rec.max_noise_norm, W.col(j).tail(p.d - 2).norm());
    }
    rec.w1_ok = rec.max_w1_dev <= rec.w1_band;
    rec.w2_ok = rec.max_w2 <= rec.w2_bound;
    rec.noise_ok = rec.max_noise_norm <= rec.noise_bound;
    rep.steps.push_back(rec);
  };
  record(0, 1.0);

  for (int t = 1; t <= p.t_steps; ++t) {
    const Batch batch = draw_lsn_batch(static_cast<int>(batch_n), p.d, rng);
    const Eigen::MatrixXd pre = batch.X * W;                    // n x k
    const Eigen::VectorXd scores = pre.cwiseMax(0.0) * v;       // n
    long active = 0;
    Eigen::VectorXd coeff(batch_n);  // y * 1{hinge active}
    for (long i = 0; i < batch_n; ++i) {
      const bool on = batch.y(i) * scores(i) <= 1.0;
      active += on;
      coeff(i) = on ? batch.y(i) : 0.0;
    }
    // dL/dW = -(1/n) sum_i 1{active} y_i x_i (v .* relu'(pre_i))^T
    Eigen::MatrixXd gate =
        (pre.array() >= 0.0).cast<double>().matrix();          // n x k
    Eigen::MatrixXd weighted = gate.array().colwise() * coeff.array();
    weighted = weighted.array().rowwise() * v.transpose().array();
    const Eigen::MatrixXd grad =
        -(batch.X.transpose() * weighted) / static_cast<double>(batch_n);
    W -= p.eta * grad;
    record(t, static_cast<double>(active) / batch_n);
  }

  rep.all_bands_ok = true;
  rep.all_active = true;
  for (const auto& rec : rep.steps) {
    rep.all_bands_ok = rep.all_bands_ok && rec.w1_ok && rec.w2_ok && rec.noise_ok;
    rep.all_active = rep.all_active && rec.active_fraction == 1.0;
  }

  const int test_n = 100000;
  const Batch test = draw_lsn_batch(test_n, p.d, rng);
  const Eigen::VectorXd s = (test.X * W).cwiseMax(0.0) * v;
  long wrong = 0;
  for (int i = 0; i < test_n; ++i) {
    const int pred = s(i) >= 0.0 ? 1 : -1;
    wrong += pred != static_cast<int>(test.y(i));
  }
  rep.test_error = static_cast<double>(wrong) / test_n;
  return rep;
}

}  // namespace sb::lsn
