#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>

#include "sb/datagen.hpp"
#include "sb/mlp.hpp"

namespace sb::attacks {

enum class Norm { L2, Linf };

std::string to_string(Norm n);
Norm norm_from_string(const std::string& s);

struct AttackConfig {
  Norm norm = Norm::L2;
  double budget = 0.0;
  int steps = 40;
  double step_size = 0.1;
  int restarts = 1;
  std::uint64_t seed = 0;
  mlp::Loss loss = mlp::Loss::Logistic;
  // Halve the step and retry whenever an iterate lowers the loss; off by
  // default (plain fixed-step ascent).
  bool monotone = false;

  void validate() const;
};

// Best-of-restarts projected gradient ascent on the per-example loss around
// x; the result never leaves the budget ball.
Eigen::VectorXd pgd(const mlp::MlpModel& model, const Eigen::VectorXd& x,
                    int y, const AttackConfig& cfg);
// Row-wise attack of a batch.
Eigen::MatrixXd pgd_batch(const mlp::MlpModel& model, const Eigen::MatrixXd& X,
                          const Eigen::VectorXi& y, const AttackConfig& cfg);

struct UapResult {
  Eigen::VectorXd delta;  // in the dataset's stored basis
  double norm_used = 0.0;
  double fooled_fraction = 0.0;
  std::map<std::string, double> energy_by_group;  // fraction of squared norm
};

// Single shared perturbation optimized by projected gradient ascent on the
// mean loss over the dataset.
UapResult uap(const mlp::MlpModel& model, const datagen::Dataset& data,
              const AttackConfig& cfg);

// Error rate of `model` on data shifted by a fixed delta.
double uap_transfer(const Eigen::VectorXd& delta, const mlp::MlpModel& model,
                    const datagen::Dataset& data);

// Squared-norm fraction of delta inside each named coordinate group of the
// dataset, measured in the pre-rotation basis.
std::map<std::string, double> energy_by_group(const Eigen::VectorXd& delta,
                                              const datagen::Dataset& data);

// Standard training where every batch is replaced by its PGD perturbation.
std::pair<mlp::MlpModel, mlp::TrainHistory> adversarial_train(
    const mlp::MlpModel& model, const datagen::Dataset& data,
    const AttackConfig& cfg_attack, const mlp::TrainConfig& cfg_train);

}  // namespace sb::attacks
