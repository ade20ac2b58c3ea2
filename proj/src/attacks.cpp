#include "sb/attacks.hpp"

#include <cmath>
#include <limits>

#include "sb/errors.hpp"

namespace sb::attacks {

std::string to_string(Norm n) { return n == Norm::L2 ? "l2" : "linf"; }

Norm norm_from_string(const std::string& s) {
  if (s == "l2" || s == "L2") return Norm::L2;
  if (s == "linf" || s == "Linf") return Norm::Linf;
  throw SpecError("unknown norm: " + s);
}

void AttackConfig::validate() const {
  if (budget < 0.0) throw SpecError("attack budget must be nonnegative");
  if (steps < 1) throw SpecError("attack needs at least one step");
  if (!(step_size > 0.0)) throw SpecError("attack step size must be positive");
  if (restarts < 1) throw SpecError("attack needs at least one restart");
}

namespace {

void project(Eigen::MatrixXd& delta, Norm norm, double budget) {
  if (norm == Norm::L2) {
    for (int i = 0; i < delta.rows(); ++i) {
      const double n = delta.row(i).norm();
      if (n > budget) delta.row(i) *= budget / n;
    }
  } else {
    delta = delta.cwiseMax(-budget).cwiseMin(budget);
  }
}

// steepest-ascent direction under the norm constraint
Eigen::MatrixXd ascent_direction(const Eigen::MatrixXd& grad, Norm norm) {
  if (norm == Norm::Linf) return grad.array().sign().matrix();
  Eigen::MatrixXd dir = grad;
  for (int i = 0; i < dir.rows(); ++i) {
    const double n = dir.row(i).norm();
    if (n > 0) dir.row(i) /= n;
  }
  return dir;
}

Eigen::VectorXd per_example_loss(const mlp::MlpModel& model,
                                 const Eigen::MatrixXd& X,
                                 const Eigen::VectorXi& y, mlp::Loss loss) {
  const Eigen::VectorXd s = mlp::forward_batch(model, X);
  if (!s.allFinite()) throw SpecError("non-finite model output");
  Eigen::VectorXd out(X.rows());
  for (int i = 0; i < X.rows(); ++i) {
    const double m = y(i) * s(i);
    out(i) = loss == mlp::Loss::Hinge
                 ? std::max(0.0, 1.0 - m)
                 : (m > 0 ? std::log1p(std::exp(-m))
                          : -m + std::log1p(std::exp(m)));
  }
  return out;
}

}  // namespace

Eigen::MatrixXd pgd_batch(const mlp::MlpModel& model, const Eigen::MatrixXd& X,
                          const Eigen::VectorXi& y, const AttackConfig& cfg) {
  cfg.validate();
  if (cfg.budget == 0.0) return X;
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());

  Eigen::MatrixXd best_delta = Eigen::MatrixXd::Zero(n, d);
  Eigen::VectorXd best_loss =
      Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
  Rng rng = Rng::derived(cfg.seed, 59);

  for (int r = 0; r < cfg.restarts; ++r) {
    Eigen::MatrixXd delta(n, d);
    if (r == 0) {
      delta.setZero();
    } else {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
          delta(i, j) = rng.uniform(-cfg.budget, cfg.budget);
        }
      }
      project(delta, cfg.norm, cfg.budget);
    }
    Eigen::VectorXd step = Eigen::VectorXd::Constant(n, cfg.step_size);
    Eigen::VectorXd cur = per_example_loss(model, X + delta, y, cfg.loss);
    for (int t = 0; t < cfg.steps; ++t) {
      const Eigen::MatrixXd grad =
          mlp::input_gradient(model, X + delta, y, cfg.loss);
      const Eigen::MatrixXd dir = ascent_direction(grad, cfg.norm);
      Eigen::MatrixXd cand = delta + step.asDiagonal() * dir;
      project(cand, cfg.norm, cfg.budget);
      const Eigen::VectorXd cand_loss =
          per_example_loss(model, X + cand, y, cfg.loss);
      if (cfg.monotone) {
        for (int i = 0; i < n; ++i) {
          if (cand_loss(i) >= cur(i)) {
            delta.row(i) = cand.row(i);
            cur(i) = cand_loss(i);
          } else {
            step(i) *= 0.5;  // overshoot: keep the old iterate
          }
        }
      } else {
        delta = std::move(cand);
        cur = cand_loss;
      }
    }
    for (int i = 0; i < n; ++i) {
      if (cur(i) > best_loss(i)) {
        best_loss(i) = cur(i);
        best_delta.row(i) = delta.row(i);
      }
    }
  }
  return X + best_delta;
}

Eigen::VectorXd pgd(const mlp::MlpModel& model, const Eigen::VectorXd& x,
                    int y, const AttackConfig& cfg) {
  Eigen::VectorXi yy(1);
  yy << y;
  return pgd_batch(model, x.transpose(), yy, cfg).row(0).transpose();
}

std::map<std::string, double> energy_by_group(const Eigen::VectorXd& delta,
                                              const datagen::Dataset& data) {
  if (delta.size() != data.dim()) throw SpecError("delta dimension mismatch");
  Eigen::VectorXd pre = delta;
  if (data.rotation) pre = data.rotation->transpose() * delta;
  const double total = pre.squaredNorm();
  std::map<std::string, double> out;
  for (const auto& [name, coords] : data.groups) {
    double e = 0.0;
    for (int c : coords) e += pre(c) * pre(c);
    out[name] = total > 0 ? e / total : 0.0;
  }
  return out;
}

UapResult uap(const mlp::MlpModel& model, const datagen::Dataset& data,
              const AttackConfig& cfg) {
  cfg.validate();
  if (data.n() < 1) throw SpecError("uap: empty dataset");
  const int d = data.dim();
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(d);
  if (cfg.budget > 0.0) {
    double step = cfg.step_size;
    Eigen::MatrixXd shifted = data.features;
    double cur =
        per_example_loss(model, shifted, data.labels, cfg.loss).mean();
    for (int t = 0; t < cfg.steps; ++t) {
      const Eigen::MatrixXd grads =
          mlp::input_gradient(model, shifted, data.labels, cfg.loss);
      Eigen::VectorXd g = grads.colwise().mean().transpose();
      Eigen::VectorXd dir;
      if (cfg.norm == Norm::Linf) {
        dir = g.array().sign().matrix();
      } else {
        const double n = g.norm();
        if (n == 0.0) break;
        dir = g / n;
      }
      Eigen::VectorXd cand = delta + step * dir;
      if (cfg.norm == Norm::L2) {
        const double n = cand.norm();
        if (n > cfg.budget) cand *= cfg.budget / n;
      } else {
        cand = cand.cwiseMax(-cfg.budget).cwiseMin(cfg.budget);
      }
      Eigen::MatrixXd cand_shift = data.features.rowwise() + cand.transpose();
      const double cand_loss =
          per_example_loss(model, cand_shift, data.labels, cfg.loss).mean();
      if (cfg.monotone && cand_loss < cur) {
        step *= 0.5;
        continue;
      }
      delta = std::move(cand);
      shifted = std::move(cand_shift);
      cur = cand_loss;
    }
  }
  UapResult res;
  res.delta = delta;
  res.norm_used = cfg.norm == Norm::L2 ? delta.norm()
                                       : delta.cwiseAbs().maxCoeff();
  res.fooled_fraction = uap_transfer(delta, model, data);
  res.energy_by_group = energy_by_group(delta, data);
  return res;
}

double uap_transfer(const Eigen::VectorXd& delta, const mlp::MlpModel& model,
                    const datagen::Dataset& data) {
  if (delta.size() != data.dim()) throw SpecError("delta dimension mismatch");
  const Eigen::MatrixXd shifted =
      data.features.rowwise() + delta.transpose();
  const Eigen::VectorXd s = mlp::forward_batch(model, shifted);
  int wrong = 0;
  for (int i = 0; i < data.n(); ++i) {
    wrong += mlp::predict(s(i)) != data.labels(i);
  }
  return static_cast<double>(wrong) / data.n();
}

std::pair<mlp::MlpModel, mlp::TrainHistory> adversarial_train(
    const mlp::MlpModel& model, const datagen::Dataset& data,
    const AttackConfig& cfg_attack, const mlp::TrainConfig& cfg_train) {
  cfg_attack.validate();
  cfg_train.validate();
  const auto transform = [&](const mlp::MlpModel& m, Eigen::MatrixXd& X,
                             const Eigen::VectorXi& y) {
    X = pgd_batch(m, X, y, cfg_attack);
  };
  return mlp::train_transformed(model, data, cfg_train, transform);
}

}  // namespace sb::attacks
