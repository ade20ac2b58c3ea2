#include "sb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "sb/errors.hpp"

namespace sb::metrics {

double accuracy(const Eigen::VectorXd& scores, const Eigen::VectorXi& labels) {
  if (scores.size() != labels.size() || scores.size() == 0) {
    throw SpecError("accuracy: length mismatch or empty input");
  }
  int correct = 0;
  for (int i = 0; i < scores.size(); ++i) {
    correct += mlp::predict(scores(i)) == labels(i);
  }
  return static_cast<double>(correct) / scores.size();
}

double auc(const Eigen::VectorXd& scores, const Eigen::VectorXi& labels) {
  if (scores.size() != labels.size() || scores.size() == 0) {
    throw SpecError("auc: length mismatch or empty input");
  }
  const int n = static_cast<int>(scores.size());
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return scores(a) < scores(b); });
  // midrank assignment, then Mann-Whitney U
  std::vector<double> rank(n);
  long npos = 0;
  for (int i = 0; i < n;) {
    int j = i;
    while (j < n && scores(idx[j]) == scores(idx[i])) ++j;
    const double mid = 0.5 * (i + j - 1) + 1.0;  // 1-based midrank
    for (int t = i; t < j; ++t) rank[idx[t]] = mid;
    i = j;
  }
  double rank_sum_pos = 0.0;
  for (int i = 0; i < n; ++i) {
    if (labels(i) == 1) {
      ++npos;
      rank_sum_pos += rank[i];
    }
  }
  const long nneg = n - npos;
  if (npos == 0 || nneg == 0) throw SpecError("auc: single-class labels");
  const double u = rank_sum_pos - 0.5 * npos * (npos + 1);
  return u / (static_cast<double>(npos) * nneg);
}

double pr_auc(const Eigen::VectorXd& scores, const Eigen::VectorXi& labels) {
  if (scores.size() != labels.size() || scores.size() == 0) {
    throw SpecError("pr_auc: length mismatch or empty input");
  }
  const int n = static_cast<int>(scores.size());
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return scores(a) > scores(b); });
  int npos = 0;
  for (int i = 0; i < n; ++i) npos += labels(i) == 1;
  if (npos == 0 || npos == n) throw SpecError("pr_auc: single-class labels");
  // average precision with ties handled by processing equal scores together
  double ap = 0.0;
  int tp = 0, seen = 0;
  for (int i = 0; i < n;) {
    int j = i, tp_block = 0;
    while (j < n && scores(idx[j]) == scores(idx[i])) {
      tp_block += labels(idx[j]) == 1;
      ++j;
    }
    tp += tp_block;
    seen = j;
    const double precision = static_cast<double>(tp) / seen;
    ap += precision * tp_block;
    i = j;
  }
  return ap / npos;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw SpecError("ks_distance: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() -
                             static_cast<double>(j) / b.size()));
  }
  return d;
}

RandomizedResult randomized_metrics(const mlp::MlpModel& model,
                                    const datagen::Dataset& data,
                                    const std::vector<int>& coords,
                                    int repeats, std::uint64_t seed) {
  if (repeats < 1) throw SpecError("randomized_metrics: repeats must be >= 1");
  const Eigen::VectorXd base = mlp::forward_batch(model, data.features);
  if (coords.empty()) {
    return {accuracy(base, data.labels), auc(base, data.labels), 0.0};
  }
  std::vector<int> tp;  // original true positives
  for (int i = 0; i < data.n(); ++i) {
    if (data.labels(i) == 1 && mlp::predict(base(i)) == 1) tp.push_back(i);
  }
  RandomizedResult res;
  double shift = 0.0;
  for (int r = 0; r < repeats; ++r) {
    const auto rnd = datagen::randomize_group(data, coords, Rng::mix(seed, r));
    const Eigen::VectorXd s = mlp::forward_batch(model, rnd.features);
    res.accuracy += accuracy(s, rnd.labels);
    res.auc += auc(s, rnd.labels);
    if (!tp.empty()) {
      std::vector<double> before, after;
      for (int i : tp) {
        before.push_back(base(i));
        after.push_back(s(i));
      }
      shift += ks_distance(std::move(before), std::move(after));
    }
  }
  res.accuracy /= repeats;
  res.auc /= repeats;
  res.logit_shift = shift / repeats;
  return res;
}

RandomizedResult randomized_metrics(const mlp::MlpModel& model,
                                    const datagen::Dataset& data,
                                    const std::string& group, int repeats,
                                    std::uint64_t seed) {
  return randomized_metrics(model, data, data.group(group), repeats, seed);
}

double robust_accuracy(const mlp::MlpModel& model,
                       const datagen::Dataset& data,
                       const attacks::AttackConfig& cfg) {
  cfg.validate();
  const Eigen::MatrixXd adv =
      attacks::pgd_batch(model, data.features, data.labels, cfg);
  return accuracy(mlp::forward_batch(model, adv), data.labels);
}

Eigen::MatrixXd decision_boundary_grid(const mlp::MlpModel& model,
                                       const datagen::Dataset& data,
                                       int coord_a, int coord_b,
                                       int resolution, int reference_row) {
  if (data.n() < 1) throw SpecError("decision_boundary_grid: empty dataset");
  if (coord_a < 0 || coord_a >= data.dim() || coord_b < 0 ||
      coord_b >= data.dim()) {
    throw SpecError("decision_boundary_grid: coordinate out of range");
  }
  if (resolution < 2) throw SpecError("decision_boundary_grid: resolution < 2");
  if (reference_row < 0 || reference_row >= data.n()) {
    throw SpecError("decision_boundary_grid: bad reference row");
  }
  const double Ba = data.spec.blocks.empty()
                        ? 1.0
                        : data.spec.blocks[coord_a].width;
  const double Bb = data.spec.blocks.empty()
                        ? 1.0
                        : data.spec.blocks[coord_b].width;
  const Eigen::RowVectorXd ref =
      data.pre_rotation_features().row(reference_row);
  Eigen::MatrixXd points(resolution * resolution, data.dim());
  for (int i = 0; i < resolution; ++i) {
    const double vb = -Bb + 2.0 * Bb * i / (resolution - 1);
    for (int j = 0; j < resolution; ++j) {
      const double va = -Ba + 2.0 * Ba * j / (resolution - 1);
      Eigen::RowVectorXd row = ref;
      row(coord_a) = va;
      row(coord_b) = vb;
      points.row(i * resolution + j) = row;
    }
  }
  if (data.rotation) points = points * data.rotation->transpose();
  const Eigen::VectorXd s = mlp::forward_batch(model, points);
  Eigen::MatrixXd grid(resolution, resolution);
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) grid(i, j) = s(i * resolution + j);
  }
  return grid;
}

std::vector<std::pair<int, double>> influence_ranking(
    const mlp::MlpModel& model, const datagen::Dataset& data,
    std::uint64_t seed) {
  if (data.n() < 2) throw SpecError("influence_ranking: need n >= 2");
  const Eigen::VectorXd base = mlp::forward_batch(model, data.features);
  const double base_auc = auc(base, data.labels);
  std::vector<std::pair<int, double>> drops;
  for (int c = 0; c < data.dim(); ++c) {
    const auto res =
        randomized_metrics(model, data, std::vector<int>{c}, 1, Rng::mix(seed, c));
    drops.emplace_back(c, base_auc - res.auc);
  }
  std::stable_sort(drops.begin(), drops.end(),
                   [](const auto& a, const auto& b) {
                     return a.second > b.second;
                   });
  return drops;
}

MetricsReport evaluate(const mlp::MlpModel& model,
                       const datagen::Dataset& data,
                       const std::vector<std::string>& groups,
                       const std::vector<std::pair<attacks::Norm, double>>&
                           robust_budgets,
                       int repeats, std::uint64_t seed,
                       const attacks::AttackConfig& attack_template) {
  MetricsReport rep;
  rep.n_eval = data.n();
  rep.seed = seed;
  const Eigen::VectorXd s = mlp::forward_batch(model, data.features);
  rep.standard_accuracy = accuracy(s, data.labels);
  rep.standard_auc = auc(s, data.labels);
  rep.standard_pr_auc = pr_auc(s, data.labels);
  for (const auto& g : groups) {
    rep.randomized[g] =
        randomized_metrics(model, data, g, repeats, Rng::mix(seed, 101));
  }
  for (const auto& [norm, budget] : robust_budgets) {
    attacks::AttackConfig cfg = attack_template;
    cfg.norm = norm;
    cfg.budget = budget;
    cfg.seed = Rng::mix(seed, 202);
    char key[64];
    std::snprintf(key, sizeof(key), "%s:%g", attacks::to_string(norm).c_str(),
                  budget);
    rep.robust[key] = robust_accuracy(model, data, cfg);
  }
  return rep;
}

}  // namespace sb::metrics
