// Acceptance suite: one pass/fail line per shipping criterion.
//
// Each criterion runs a full desk-scale experiment with pinned settings and
// tolerances and prints a single line:
//   C<n> PASS|FAIL  <what was measured>
// The binary exits nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "sb/attacks.hpp"
#include "sb/datagen.hpp"
#include "sb/errors.hpp"
#include "sb/harness.hpp"
#include "sb/lsn.hpp"
#include "sb/metrics.hpp"
#include "sb/mlp.hpp"
#include "sb/rng.hpp"

using namespace sb;

namespace {

struct Line {
  std::string id;
  bool pass = false;
  std::string detail;
};

std::vector<Line> g_lines;

void report(const std::string& id, bool pass, const std::string& detail) {
  g_lines.push_back({id, pass, detail});
  std::printf("%s %s  %s\n", id.c_str(), pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string fmt(double v) { return harness::format_number(v); }

// Shared trained models for the extreme-reliance criteria (C1, C2, C4 reuse
// the training recipe): width-2000 one-hidden-layer networks.
struct TrainedRun {
  std::string preset;
  int d = 0;
  double train_seconds = 0.0;
  metrics::RandomizedResult s, sc;
  double test_acc = 0.0;
};

mlp::TrainConfig wide_train_config() {
  mlp::TrainConfig tc;
  tc.loss = mlp::Loss::Hinge;
  tc.opt.lr = 0.3;
  tc.opt.weight_decay = 5e-7;
  tc.batch_size = 64;
  tc.epochs = 15;
  return tc;
}

std::vector<TrainedRun> run_extreme_models() {
  const std::vector<std::pair<std::string, int>> cases = {
      {"lms-5", 50}, {"lms-5", 250}, {"ms-(5,7)", 50}};
  std::vector<TrainedRun> out;
  for (std::size_t ci = 0; ci < cases.size(); ++ci) {
    const auto& [preset, d] = cases[ci];
    const std::uint64_t seed = Rng::mix(41, ci);
    const auto spec = datagen::preset_by_name(preset, d);
    const auto train_data = datagen::generate_dataset(spec, 50000, seed);
    const auto test_data =
        datagen::generate_dataset(spec, 10000, Rng::mix(seed, 1));
    const double t0 = now_seconds();
    auto model = mlp::init_model(d, 2000, 1, mlp::Activation::ReLU,
                                 mlp::InitSpec{}, false, Rng::mix(seed, 2));
    mlp::TrainConfig tc = wide_train_config();
    tc.seed = Rng::mix(seed, 3);
    auto [trained, hist] = mlp::train(model, train_data, tc);
    if (hist.diverged) throw DivergenceError("extreme run diverged");
    TrainedRun run;
    run.preset = preset;
    run.d = d;
    run.train_seconds = now_seconds() - t0;
    run.s = metrics::randomized_metrics(trained, test_data, "S", 3,
                                        Rng::mix(seed, 4));
    run.sc = metrics::randomized_metrics(trained, test_data, "Sc", 3,
                                         Rng::mix(seed, 5));
    run.test_acc = metrics::accuracy(
        mlp::forward_batch(trained, test_data.features), test_data.labels);
    out.push_back(run);
  }
  return out;
}

void criterion_1_and_2() {
  const auto runs = run_extreme_models();
  bool c1 = true, c2 = true;
  std::ostringstream d1, d2;
  for (const auto& r : runs) {
    c1 = c1 && r.s.auc >= 0.47 && r.s.auc <= 0.53 && r.sc.auc >= 0.99 &&
         r.train_seconds <= 300.0;
    c2 = c2 && r.sc.logit_shift < 0.05 && r.s.logit_shift > 0.3;
    d1 << r.preset << " d=" << r.d << " sAUC=" << fmt(r.s.auc)
       << " scAUC=" << fmt(r.sc.auc) << " t=" << fmt(r.train_seconds) << "s; ";
    d2 << r.preset << " d=" << r.d << " ksS=" << fmt(r.s.logit_shift)
       << " ksSc=" << fmt(r.sc.logit_shift) << "; ";
  }
  report("C1", c1,
         "wide nets rely only on the simplest feature: " + d1.str() +
             "need sAUC in [0.47,0.53], scAUC >= 0.99, <= 300s each");
  report("C2", c2,
         "score distributions shift only under simple-feature swaps: " +
             d2.str() + "need ksSc < 0.05, ksS > 0.3");
}

double cell(const harness::Table& t, std::size_t row, const std::string& col) {
  const auto it = std::find(t.columns.begin(), t.columns.end(), col);
  if (it == t.columns.end()) throw SpecError("missing column " + col);
  return std::atof(
      t.rows.at(row).at(it - t.columns.begin()).c_str());
}

const harness::Table& table(const harness::RunManifest& man,
                            const std::string& name) {
  for (const auto& t : man.tables) {
    if (t.name == name) return t;
  }
  throw SpecError("missing table " + name);
}

void criterion_3() {
  harness::ExperimentConfig cfg;
  cfg.experiment = harness::ExperimentKind::Generalization;
  cfg.preset = "nlms-7";
  cfg.dims = {50};
  cfg.n_train = 40000;
  cfg.n_test = 10000;
  cfg.noise = 0.1;
  cfg.archs = {{100, 1}};
  cfg.train.loss = mlp::Loss::Logistic;
  cfg.train.epochs = 150;
  cfg.train.early_stop_loss = 1e-3;
  cfg.grid_subsample = 24;
  cfg.eval_repeats = 3;
  cfg.seed = 11;
  const auto man = harness::run_generalization(cfg);
  const auto& t = table(man, "generalization");
  const double test = cell(t, 0, "test_accuracy");
  const double s_rand = cell(t, 0, "s_rand_accuracy");
  const double sc_rand = cell(t, 0, "sc_rand_accuracy");
  const double no_lin = cell(t, 0, "no_linear_test_accuracy");
  const bool pass = std::abs(test - 0.94) <= 0.02 &&
                    std::abs(s_rand - 0.50) <= 0.02 &&
                    std::abs(sc_rand - test) <= 0.01 && no_lin >= 0.99;
  report("C3", pass,
         "grid-searched slab generalization: test=" + fmt(test) +
             " (0.94+-0.02), sRand=" + fmt(s_rand) + " (0.50+-0.02), scRand=" +
             fmt(sc_rand) + " (within 0.01 of test), noLinear=" + fmt(no_lin) +
             " (>= 0.99)");
}

void criterion_4() {
  attacks::AttackConfig atk;
  atk.norm = attacks::Norm::L2;
  atk.budget = 1.0;
  atk.steps = 400;
  atk.step_size = 0.05;
  atk.loss = mlp::Loss::Hinge;

  auto fit_on = [&](const std::string& preset, long n, std::uint64_t seed) {
    const auto spec = datagen::preset_by_name(preset, 50);
    const auto data = datagen::generate_dataset(spec, n, seed);
    mlp::TrainConfig tc = wide_train_config();
    tc.epochs = 20;
    tc.seed = Rng::mix(seed, 1);
    // wide enough to learn the pure multi-slab dataset, not just lms
    auto model = mlp::init_model(50, 2000, 1, mlp::Activation::ReLU,
                                 mlp::InitSpec{}, false, Rng::mix(seed, 2));
    auto [trained, hist] = mlp::train(model, data, tc);
    if (hist.diverged) throw DivergenceError("uap training diverged");
    return trained;
  };

  const auto lms_test = datagen::generate_dataset(
      datagen::preset_by_name("lms-5", 50), 10000, 1051);
  const auto model_a = fit_on("lms-5", 20000, 1101);
  const auto model_b = fit_on("lms-5", 20000, 1201);
  atk.seed = 7;
  const auto uap_a = attacks::uap(model_a, lms_test, atk);
  const double transfer_err =
      attacks::uap_transfer(uap_a.delta, model_b, lms_test);

  const auto ms_test = datagen::generate_dataset(
      datagen::preset_by_name("ms-(5,7)", 50), 10000, 1052);
  // the pure multi-slab dataset needs more samples before the wide net
  // reliably locks onto the coarser slab coordinate
  const auto ms_model = fit_on("ms-(5,7)", 50000, 1301);
  atk.seed = 8;
  // hinge loss is periodic in a slab coordinate, so the useful perturbation
  // is about half a slab period; a larger budget only spills energy into
  // off-manifold directions
  atk.budget = 0.5;
  atk.step_size = 0.02;
  const auto uap_ms = attacks::uap(ms_model, ms_test, atk);

  const double e_lms = uap_a.energy_by_group.at("S");
  const double e_ms = uap_ms.energy_by_group.at("S");
  const bool pass = e_lms >= 0.95 && e_ms >= 0.95 && transfer_err >= 0.9;
  report("C4", pass,
         "universal perturbations target the simplest feature: energyS(lms)=" +
             fmt(e_lms) + " energyS(ms57)=" + fmt(e_ms) +
             " (both >= 0.95), transferErr=" + fmt(transfer_err) +
             " (>= 0.9; single additive delta on a scorer monotone in the "
             "simple coordinate caps the achievable error near 0.5)");
}

void criterion_5() {
  const long n = 1000000;
  const double tol = 5.0 * std::sqrt(std::log(double(n)) / double(n));
  Rng rng(77);
  bool all_close = true;
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const double w1 = rng.uniform() * 2.0 - 1.0;
    const double w2 = rng.uniform() * 2.0 - 1.0;
    const double nn = 0.3 + rng.uniform() * 1.2;
    const double v = (rng.sign() > 0 ? 1.0 : -1.0) / 4.0;
    const auto mc = lsn::mc_pop_grads(w1, w2, nn, v, n, Rng::mix(500, trial));
    const double e1 = std::abs(mc.linear - lsn::pop_grad_linear(w1, w2, nn, v));
    const double e2 = std::abs(mc.slab - lsn::pop_grad_slab(w1, w2, nn, v));
    const double e3 = std::abs(
        mc.noise_parallel - nn * lsn::pop_grad_noise_coeff(w1, w2, nn, v));
    worst = std::max({worst, e1, e2, e3});
    all_close = all_close && e1 <= tol && e2 <= tol && e3 <= tol;
  }

  // convergence rate: centered error versus sample size on a log-log scale
  const double w1 = 0.3, w2 = -0.2, nn = 0.8, v = 0.25;
  std::vector<double> log_n, log_err;
  for (long m : {1000L, 10000L, 100000L, 1000000L}) {
    const auto mc = lsn::mc_pop_grads(w1, w2, nn, v, m, Rng::mix(8, m));
    const double err =
        std::abs(mc.linear - lsn::pop_grad_linear(w1, w2, nn, v)) +
        std::abs(mc.slab - lsn::pop_grad_slab(w1, w2, nn, v));
    log_n.push_back(std::log(double(m)));
    log_err.push_back(std::log(std::max(err, 1e-300)));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = double(log_n.size());
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    sx += log_n[i];
    sy += log_err[i];
    sxx += log_n[i] * log_n[i];
    sxy += log_n[i] * log_err[i];
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  const bool pass = all_close && slope <= -0.4;
  report("C5", pass,
         "closed-form population gradients match Monte Carlo: worst |err|=" +
             fmt(worst) + " over 50 settings (tol " + fmt(tol) +
             " at n=1e6), log-log slope=" + fmt(slope) + " (<= -0.4)");
}

void criterion_6() {
  lsn::TheoremParams p;
  p.seed = 15;
  const auto rep = lsn::verify_theorem(p);
  // lower-bound min_j |w1j| by the predicted center minus the worst
  // deviation recorded at the final step
  const auto& last = rep.steps.back();
  const double w1_center =
      double(p.t_steps) * p.eta / (2.0 * std::sqrt(double(p.k)));
  const double min_w1 = w1_center - last.max_w1_dev;
  const double ratio = last.max_w2 / min_w1;
  bool active = true;
  for (const auto& s : rep.steps) active = active && s.active_fraction == 1.0;
  const bool pass =
      active && rep.all_bands_ok && ratio <= 0.1 && rep.test_error <= 0.01;
  report("C6", pass,
         "early-dynamics trajectory at d=400, k=16, eta=0.4, t=4: active " +
             std::string(active ? "1.0" : "<1.0") + ", bands " +
             (rep.all_bands_ok ? "ok" : "violated") + ", max|w2|/min|w1|=" +
             fmt(ratio) + " (<= 0.1), testErr=" + fmt(rep.test_error) +
             " (<= 0.01)");
}

void criterion_7() {
  harness::ExperimentConfig cfg;
  cfg.experiment = harness::ExperimentKind::AdvSweep;
  cfg.preset = "advms-(5,7)";
  cfg.dims = {20};
  cfg.n_train = 10000;
  cfg.n_test = 5000;
  cfg.archs = {{1000, 2}};
  cfg.train.loss = mlp::Loss::Hinge;
  cfg.train.opt.lr = 0.3;
  cfg.train.batch_size = 64;
  cfg.train.epochs = 15;
  cfg.train.early_stop_loss = 1e-3;
  cfg.attack.norm = attacks::Norm::L2;
  cfg.attack.steps = 10;
  cfg.attack.step_size = 0.05;
  cfg.attack.loss = mlp::Loss::Hinge;
  cfg.epsilons = {0.25, 0.35};
  cfg.eval_repeats = 2;
  cfg.seed = 21;
  const auto man = harness::run_adv_sweep(cfg);
  const auto& t = table(man, "adv_sweep");
  double std25 = 0, rob25 = 0, sc25 = 0, std35 = 0;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (std::abs(cell(t, r, "epsilon") - 0.25) < 1e-9) {
      std25 = cell(t, r, "standard_accuracy");
      rob25 = cell(t, r, "robust_accuracy");
      sc25 = cell(t, r, "sc_rand_accuracy");
    }
    if (std::abs(cell(t, r, "epsilon") - 0.35) < 1e-9) {
      std35 = cell(t, r, "standard_accuracy");
    }
  }
  const bool pass = std25 >= 0.95 && rob25 >= 0.95 &&
                    std::abs(sc25 - std25) <= 0.02 && std35 <= 0.6;
  report("C7", pass,
         "adversarial training below/above the simple margin: eps=0.25 std=" +
             fmt(std25) + " rob=" + fmt(rob25) + " (both >= 0.95) scRand=" +
             fmt(sc25) + " (within 0.02 of std); eps=0.35 std=" + fmt(std35) +
             " (<= 0.6)");
}

void criterion_8() {
  harness::ExperimentConfig cfg;
  cfg.experiment = harness::ExperimentKind::Ensemble;
  cfg.preset = "ms-5";
  cfg.dims = {50};
  cfg.n_train = 5000;
  cfg.n_test = 10000;
  cfg.noise = 0.5;
  cfg.archs = {{100, 2}};
  cfg.train.loss = mlp::Loss::Hinge;
  cfg.train.opt.lr = 0.3;
  cfg.train.opt.weight_decay = 1e-4;
  cfg.train.batch_size = 16;
  cfg.train.epochs = 120;
  cfg.train.early_stop_loss = 1e-3;
  cfg.ensemble_sizes = {1, 10};
  // the noisy-linear control should sit at its Bayes accuracy rather than in
  // the small-sample overfitting regime of the primary dataset
  cfg.control_n = 20000;
  cfg.seed = 31;
  const auto man = harness::run_ensemble(cfg);
  const auto& t = table(man, "ensemble");
  double slab_gain = 0, noise_gain = 0, noise_single = 0;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (cell(t, r, "size") != 10) continue;
    const bool noisy = t.rows[r][1].rfind("nl-", 0) == 0;
    if (noisy) {
      noise_gain = cell(t, r, "gain_over_single");
      noise_single = cell(t, r, "mean_single");
    } else {
      slab_gain = cell(t, r, "gain_over_single");
    }
  }
  const bool pass = slab_gain >= 0.10 && noise_gain <= 0.03 &&
                    std::abs(noise_single - 0.75) <= 0.03;
  report("C8", pass,
         "ensembles help only when members learn different slabs: slab gain=" +
             fmt(slab_gain) + " (>= 0.10); noisy-linear gain=" +
             fmt(noise_gain) + " (<= 0.03) single=" + fmt(noise_single) +
             " (0.75+-0.03)");
}

double pairwise_auc(const Eigen::VectorXd& s, const Eigen::VectorXi& y) {
  double wins = 0, pairs = 0;
  for (int i = 0; i < s.size(); ++i) {
    for (int j = 0; j < s.size(); ++j) {
      if (y(i) == 1 && y(j) == -1) {
        pairs += 1;
        if (s(i) > s(j)) wins += 1;
        else if (s(i) == s(j)) wins += 0.5;
      }
    }
  }
  return wins / pairs;
}

void criterion_9() {
  bool auc_ok = true;
  Rng rng(15);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 20 + static_cast<int>(rng.below(180));
    Eigen::VectorXd s(n);
    Eigen::VectorXi y(n);
    bool pos = false, neg = false;
    for (int i = 0; i < n; ++i) {
      s(i) = std::round(rng.normal() * 4) / 4.0;
      y(i) = rng.sign();
      (y(i) == 1 ? pos : neg) = true;
    }
    if (!pos || !neg) continue;
    auc_ok =
        auc_ok && std::abs(metrics::auc(s, y) - pairwise_auc(s, y)) < 1e-12;
  }

  bool grad_ok = true;
  double grad_worst = 0.0;
  Rng grng(99);
  int grad_checked = 0;
  for (int trial = 0; trial < 400 && grad_checked < 200; ++trial) {
    const int d = 3, width = 4;
    auto model = mlp::init_model(d, width, 1 + int(grng.below(2)),
                                 mlp::Activation::ReLU, mlp::InitSpec{}, false,
                                 Rng::mix(3000, trial));
    const auto loss = grng.sign() > 0 ? mlp::Loss::Hinge : mlp::Loss::Logistic;
    Eigen::MatrixXd X(5, d);
    Eigen::VectorXi y(5);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < d; ++j) X(i, j) = grng.normal();
      y(i) = grng.sign();
    }
    // skip batches where a kink or the hinge threshold is within h of an
    // evaluation point, where the two-sided difference is one-sided
    const Eigen::VectorXd sc = mlp::forward_batch(model, X);
    bool edge = false;
    for (int i = 0; i < 5 && !edge; ++i) {
      if (loss == mlp::Loss::Hinge && std::abs(1.0 - y(i) * sc(i)) < 1e-3)
        edge = true;
      Eigen::VectorXd h = X.row(i).transpose();
      for (int l = 0; l < model.depth && !edge; ++l) {
        Eigen::VectorXd z = model.W[l] * h + model.b[l];
        if (z.cwiseAbs().minCoeff() < 1e-3) edge = true;
        h = z.cwiseMax(0.0);
      }
    }
    if (edge) continue;
    ++grad_checked;
    const auto [base, grads] = mlp::loss_and_grad(model, X, y, loss);
    const double h = 1e-5;
    for (int l = 0; l < model.layers(); ++l) {
      for (int r = 0; r < model.W[l].rows(); ++r) {
        for (int c = 0; c < std::min<int>(model.W[l].cols(), 2); ++c) {
          auto up = model, dn = model;
          up.W[l](r, c) += h;
          dn.W[l](r, c) -= h;
          const double fd = (mlp::loss_and_grad(up, X, y, loss).first -
                             mlp::loss_and_grad(dn, X, y, loss).first) /
                            (2 * h);
          const double an = grads.W[l](r, c);
          const double rel = std::abs(fd - an) / std::max(1.0, std::abs(fd));
          grad_worst = std::max(grad_worst, rel);
          grad_ok = grad_ok && rel < 1e-5;
        }
      }
    }
  }

  // s(x) = w . x as a degenerate depth-zero model
  bool pgd_ok = true;
  Rng prng(9);
  Eigen::VectorXd w(5);
  w << 0.8, -0.4, 0.2, 1.1, -0.7;
  mlp::MlpModel lin;
  lin.W = {w.transpose()};
  lin.b = {Eigen::VectorXd::Zero(1)};
  lin.width = 5;
  lin.depth = 0;
  attacks::AttackConfig acfg;
  acfg.norm = attacks::Norm::L2;
  acfg.budget = 0.3;
  acfg.steps = 100;
  acfg.step_size = 0.05;
  acfg.monotone = true;
  acfg.loss = mlp::Loss::Logistic;  // gradient never saturates to zero
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd x(5);
    for (int j = 0; j < 5; ++j) x(j) = prng.normal();
    const int y = prng.sign();
    const Eigen::VectorXd adv = attacks::pgd(lin, x, y, acfg);
    const double drop = y * w.dot(x) - y * w.dot(adv);
    const double want = acfg.budget * w.norm();
    pgd_ok = pgd_ok && std::abs(drop - want) / want < 1e-4 &&
             (adv - x).norm() <= acfg.budget + 1e-10;
  }

  const auto data = datagen::generate_dataset(
      datagen::preset_by_name("lms-5", 12), 400, 3051);
  auto zmodel = mlp::init_model(12, 30, 1, mlp::Activation::ReLU,
                                mlp::InitSpec{}, false, 3052);
  attacks::AttackConfig zcfg = acfg;
  zcfg.budget = 0.0;
  zcfg.monotone = false;
  const double rob = metrics::robust_accuracy(zmodel, data, zcfg);
  const double std_acc = metrics::accuracy(
      mlp::forward_batch(zmodel, data.features), data.labels);
  const bool zero_ok = rob == std_acc;

  const bool pass = auc_ok && grad_ok && pgd_ok && zero_ok;
  report("C9", pass,
         std::string("independent oracles: rank statistic vs pairwise "
                     "counting ") +
             (auc_ok ? "ok" : "BAD") + ", finite-difference gradients worst "
             "rel err " + fmt(grad_worst) + " over " +
             std::to_string(grad_checked) + " cases (< 1e-5 " +
             (grad_ok ? "ok" : "BAD") + "), linear-scorer attack vs closed "
             "form " + (pgd_ok ? "ok" : "BAD") +
             ", zero-budget robustness == standard " +
             (zero_ok ? "ok" : "BAD"));
}

void criterion_10() {
  namespace fs = std::filesystem;
  bool pass = true;
  std::string detail = "re-run from emitted manifest is bit-exact:";
  const fs::path root =
      fs::temp_directory_path() / "sb_acceptance_determinism";
  fs::create_directories(root);
  using harness::ExperimentKind;
  const std::vector<ExperimentKind> kinds = {
      ExperimentKind::ExtremeSB,     ExperimentKind::Generalization,
      ExperimentKind::Ensemble,      ExperimentKind::AdvSweep,
      ExperimentKind::Interpolation, ExperimentKind::Theory,
      ExperimentKind::Uap};
  for (const auto kind : kinds) {
    harness::ExperimentConfig cfg;
    cfg.experiment = kind;
    cfg.preset = "lms-5";
    cfg.dims = {10};
    cfg.n_train = 1200;
    cfg.n_test = 600;
    cfg.archs = {{20, 1}};
    cfg.train.loss = mlp::Loss::Hinge;
    cfg.train.opt.lr = 0.1;
    cfg.train.epochs = 3;
    cfg.train.batch_size = 64;
    cfg.grid_lr = {0.05, 0.1};
    cfg.grid_batch = {32};
    cfg.grid_wd = {0.0};
    cfg.grid_momentum = {0.0};
    cfg.grid_subsample = 0;
    cfg.ensemble_sizes = {1, 3};
    cfg.epsilons = {0.0, 0.1};
    cfg.attack.steps = 5;
    cfg.alphas = {0.0, 1.0};
    cfg.theorem.d = 50;
    cfg.theorem.k = 4;
    cfg.theorem.t_steps = 2;
    cfg.eval_repeats = 1;
    cfg.seed = 97;
    const auto first = harness::run_experiment(cfg);
    const fs::path dir = root / harness::to_string(kind);
    harness::emit_report(first, dir.string());
    const auto loaded =
        harness::load_manifest((dir / "manifest.json").string());
    const auto second = harness::run_experiment(loaded.config);
    bool same = first.tables.size() == second.tables.size();
    for (std::size_t i = 0; same && i < first.tables.size(); ++i) {
      same = first.tables[i].name == second.tables[i].name &&
             first.tables[i].rows == second.tables[i].rows;
    }
    pass = pass && same;
    detail += std::string(" ") + harness::to_string(kind) +
              (same ? " ok" : " MISMATCH");
  }
  report("C10", pass, detail);
}

}  // namespace

int main(int argc, char** argv) {
  const struct {
    const char* id;
    void (*fn)();
  } criteria[] = {
      {"C1+C2", criterion_1_and_2}, {"C3", criterion_3},
      {"C4", criterion_4},          {"C5", criterion_5},
      {"C6", criterion_6},          {"C7", criterion_7},
      {"C8", criterion_8},          {"C9", criterion_9},
      {"C10", criterion_10},
  };
  for (const auto& c : criteria) {
    if (argc > 1) {
      bool wanted = false;
      for (int a = 1; a < argc; ++a) {
        if (std::string(c.id).find(argv[a]) != std::string::npos) wanted = true;
      }
      if (!wanted) continue;
    }
    try {
      c.fn();
    } catch (const std::exception& e) {
      report(c.id, false, std::string("exception: ") + e.what());
    }
  }
  int failed = 0;
  std::printf("----\n");
  for (const auto& l : g_lines) {
    if (!l.pass) ++failed;
  }
  std::printf("acceptance: %zu criteria lines, %d failing\n", g_lines.size(),
              failed);
  return failed == 0 ? 0 : 1;
}
