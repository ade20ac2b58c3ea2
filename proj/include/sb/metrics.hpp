#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sb/attacks.hpp"
#include "sb/datagen.hpp"
#include "sb/mlp.hpp"

namespace sb::metrics {

// Fraction of sign(score) == label, with sign(0) = +1.
double accuracy(const Eigen::VectorXd& scores, const Eigen::VectorXi& labels);

// Rank (Mann-Whitney) AUC: P(score+ > score-) + half the tie mass.
double auc(const Eigen::VectorXd& scores, const Eigen::VectorXi& labels);

// Area under the precision-recall curve (average precision), secondary.
double pr_auc(const Eigen::VectorXd& scores, const Eigen::VectorXi& labels);

// Two-sample Kolmogorov-Smirnov distance.
double ks_distance(std::vector<double> a, std::vector<double> b);

struct RandomizedResult {
  double accuracy = 0.0;
  double auc = 0.0;
  double logit_shift = 0.0;  // KS distance on originally-true-positive scores
};

// Mean over `repeats` independent group randomizations of accuracy and AUC;
// logit_shift compares score distributions on the original true positives.
RandomizedResult randomized_metrics(const mlp::MlpModel& model,
                                    const datagen::Dataset& data,
                                    const std::vector<int>& coords, int repeats,
                                    std::uint64_t seed);
RandomizedResult randomized_metrics(const mlp::MlpModel& model,
                                    const datagen::Dataset& data,
                                    const std::string& group, int repeats,
                                    std::uint64_t seed);

// Attack-based lower bound: accuracy after the configured PGD attack.
double robust_accuracy(const mlp::MlpModel& model,
                       const datagen::Dataset& data,
                       const attacks::AttackConfig& cfg);

// Scores over a resolution x resolution grid spanning [-B, B]^2 in
// pre-rotation coordinates (coord_a, coord_b); all other coordinates come
// from `reference_row`. grid(i, j): row i follows coord_b, column j coord_a.
Eigen::MatrixXd decision_boundary_grid(const mlp::MlpModel& model,
                                       const datagen::Dataset& data,
                                       int coord_a, int coord_b,
                                       int resolution, int reference_row = 0);

// Coordinates sorted by drop in AUC when that coordinate alone is
// randomized, descending; pairs of (coordinate, drop).
std::vector<std::pair<int, double>> influence_ranking(
    const mlp::MlpModel& model, const datagen::Dataset& data,
    std::uint64_t seed);

struct MetricsReport {
  double standard_accuracy = 0.0;
  double standard_auc = 0.0;
  double standard_pr_auc = 0.0;
  std::map<std::string, RandomizedResult> randomized;  // by group name
  std::map<std::string, double> robust;  // "norm:budget" -> accuracy
  int n_eval = 0;
  std::uint64_t seed = 0;
};

MetricsReport evaluate(const mlp::MlpModel& model,
                       const datagen::Dataset& data,
                       const std::vector<std::string>& groups,
                       const std::vector<std::pair<attacks::Norm, double>>&
                           robust_budgets,
                       int repeats, std::uint64_t seed,
                       const attacks::AttackConfig& attack_template = {});

}  // namespace sb::metrics
