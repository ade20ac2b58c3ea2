// Command-line entry point: dataset generation, training, evaluation,
// universal perturbations, adversarial training, the closed-form trajectory
// verifier, and full experiment runs.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sb/errors.hpp"
#include "sb/harness.hpp"

namespace {

using json = nlohmann::json;
using namespace sb;

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kDivergence = 3;
constexpr int kIoError = 4;

struct ArchFlag {
  int width = 100;
  int depth = 1;
};

ArchFlag parse_arch(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw SpecError("arch must look like 100x1");
  try {
    return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
  } catch (const std::exception&) {
    throw SpecError("arch must look like 100x1");
  }
}

void parse_opt(const std::string& s, mlp::OptimizerSpec* opt) {
  const auto colon = s.find(':');
  const std::string kind = s.substr(0, colon);
  if (kind == "sgd") opt->kind = mlp::OptimizerKind::SGD;
  else if (kind == "adam") opt->kind = mlp::OptimizerKind::Adam;
  else if (kind == "rmsprop") opt->kind = mlp::OptimizerKind::RMSProp;
  else throw SpecError("optimizer must be sgd|adam|rmsprop[:lr]");
  if (colon != std::string::npos) {
    try {
      opt->lr = std::stod(s.substr(colon + 1));
    } catch (const std::exception&) {
      throw SpecError("optimizer learning rate must be numeric");
    }
  }
}

std::pair<attacks::Norm, double> parse_budget(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw SpecError("robust spec must look like l2:0.1");
  try {
    return {attacks::norm_from_string(s.substr(0, colon)),
            std::stod(s.substr(colon + 1))};
  } catch (const SpecError&) {
    throw;
  } catch (const std::exception&) {
    throw SpecError("robust budget must be numeric");
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = s.find(sep, start);
    if (end == std::string::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(IoError::Code::Generic, "cannot open " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError(IoError::Code::Generic, "write failed for " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoError::Code::Generic, "cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// ---- subcommand bodies ----------------------------------------------------

struct GenArgs {
  std::string preset = "lms-5";
  int d = 50;
  long n = 50000;
  std::uint64_t seed = 0;
  double p = 0.1;
  bool rotate = false;
  std::string out;
};

void cmd_gen(const GenArgs& a) {
  auto spec = datagen::preset_by_name(a.preset, a.d, a.p);
  if (a.rotate) spec.rotation_seed = Rng::mix(a.seed, 0xF0F0);
  const auto data = datagen::generate_dataset(spec, static_cast<int>(a.n), a.seed);
  datagen::save_dataset(data, a.out);
  std::printf("wrote %s.bin / %s.json (n=%d, d=%d)\n", a.out.c_str(),
              a.out.c_str(), data.n(), data.dim());
}

struct TrainArgs {
  std::string data;
  std::string arch = "100x1";
  std::string loss = "logistic";
  std::string opt = "sgd:0.1";
  int batch = 256;
  double wd = 0.0;
  double momentum = 0.0;
  double dropout = 0.0;
  int epochs = 500;
  std::uint64_t seed = 0;
  std::string out = "model.ckpt";
  // adversarial-training extras (advtrain only)
  bool adversarial = false;
  std::string norm = "l2";
  double eps = 0.0;
  int attack_steps = 40;
  double step_size = 0.1;
};

void cmd_train(const TrainArgs& a) {
  const auto data = datagen::load_dataset(a.data);
  const ArchFlag arch = parse_arch(a.arch);
  mlp::TrainConfig tc;
  tc.loss = mlp::loss_from_string(a.loss);
  parse_opt(a.opt, &tc.opt);
  tc.opt.weight_decay = a.wd;
  tc.opt.momentum = a.momentum;
  tc.batch_size = a.batch;
  tc.dropout_p = a.dropout;
  tc.epochs = a.epochs;
  tc.seed = Rng::mix(a.seed, 0x2929);
  auto model = mlp::init_model(data.dim(), arch.width, arch.depth,
                               mlp::Activation::ReLU, mlp::InitSpec{}, false,
                               Rng::mix(a.seed, 0x1717));
  mlp::TrainHistory hist;
  if (a.adversarial) {
    attacks::AttackConfig atk;
    atk.norm = attacks::norm_from_string(a.norm);
    atk.budget = a.eps;
    atk.steps = a.attack_steps;
    atk.step_size = a.step_size;
    atk.seed = Rng::mix(a.seed, 0x3A3A);
    std::tie(model, hist) = attacks::adversarial_train(model, data, atk, tc);
  } else {
    std::tie(model, hist) = mlp::train(model, data, tc);
  }
  if (hist.diverged) throw DivergenceError("training diverged");
  mlp::save_model(model, a.out);
  std::printf("trained %s for %d epochs (%d steps), final loss %.6g -> %s\n",
              a.arch.c_str(), hist.epochs, hist.steps,
              hist.epoch_loss.empty() ? 0.0 : hist.epoch_loss.back(),
              a.out.c_str());
}

struct EvalArgs {
  std::string model;
  std::string data;
  std::string groups = "S,Sc";
  std::string robust;
  int repeats = 5;
  std::uint64_t seed = 0;
  std::string out = "report.json";
  std::string boundary;  // optional CSV of a 2-coordinate score grid
  int resolution = 41;
};

void cmd_eval(const EvalArgs& a) {
  const auto model = mlp::load_model(a.model);
  const auto data = datagen::load_dataset(a.data);
  std::vector<std::string> groups;
  if (!a.groups.empty()) groups = split(a.groups, ',');
  std::vector<std::pair<attacks::Norm, double>> budgets;
  if (!a.robust.empty()) {
    for (const auto& item : split(a.robust, ',')) {
      budgets.push_back(parse_budget(item));
    }
  }
  const auto report = metrics::evaluate(model, data, groups, budgets,
                                        a.repeats, a.seed);
  json randomized = json::object();
  for (const auto& [name, r] : report.randomized) {
    randomized[name] = {{"accuracy", r.accuracy},
                        {"auc", r.auc},
                        {"logit_shift", r.logit_shift}};
  }
  json j{{"standard_accuracy", report.standard_accuracy},
         {"standard_auc", report.standard_auc},
         {"standard_pr_auc", report.standard_pr_auc},
         {"randomized", randomized},
         {"robust", report.robust},
         {"n_eval", report.n_eval},
         {"seed", report.seed}};
  write_json(a.out, j);
  if (!a.boundary.empty()) {
    const auto grid =
        metrics::decision_boundary_grid(model, data, 0, 1, a.resolution);
    std::ofstream out(a.boundary, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(IoError::Code::Generic, "cannot open " + a.boundary);
    out << "i,j,score\n";
    for (int i = 0; i < grid.rows(); ++i) {
      for (int jcol = 0; jcol < grid.cols(); ++jcol) {
        out << i << "," << jcol << ","
            << harness::format_number(grid(i, jcol)) << "\n";
      }
    }
  }
  std::printf("evaluated %d samples -> %s\n", report.n_eval, a.out.c_str());
}

struct UapArgs {
  std::string model;
  std::string data;
  std::string norm = "l2";
  double budget = 1.0;
  int steps = 400;
  double step_size = 0.05;
  int restarts = 1;
  std::uint64_t seed = 0;
  std::string out = "uap.json";
};

void cmd_uap(const UapArgs& a) {
  const auto model = mlp::load_model(a.model);
  const auto data = datagen::load_dataset(a.data);
  attacks::AttackConfig atk;
  atk.norm = attacks::norm_from_string(a.norm);
  atk.budget = a.budget;
  atk.steps = a.steps;
  atk.step_size = a.step_size;
  atk.restarts = a.restarts;
  atk.seed = a.seed;
  const auto result = attacks::uap(model, data, atk);
  json j{{"delta", std::vector<double>(result.delta.data(),
                                       result.delta.data() + result.delta.size())},
         {"norm", a.norm},
         {"norm_used", result.norm_used},
         {"fooled_fraction", result.fooled_fraction},
         {"energy_by_group", result.energy_by_group}};
  write_json(a.out, j);
  std::printf("uap fooled %.4f of samples -> %s\n", result.fooled_fraction,
              a.out.c_str());
}

struct TheoryArgs {
  lsn::TheoremParams p;
  std::string out = "theorem.json";
};

void cmd_theory(const TheoryArgs& a) {
  const auto report = lsn::verify_theorem(a.p);
  json steps = json::array();
  for (const auto& r : report.steps) {
    steps.push_back({{"t", r.t},
                     {"max_w1_dev", r.max_w1_dev},
                     {"w1_band", r.w1_band},
                     {"w1_ok", r.w1_ok},
                     {"max_w2", r.max_w2},
                     {"w2_bound", r.w2_bound},
                     {"w2_ok", r.w2_ok},
                     {"max_noise_norm", r.max_noise_norm},
                     {"noise_bound", r.noise_bound},
                     {"noise_ok", r.noise_ok},
                     {"active_fraction", r.active_fraction}});
  }
  json j{{"d", a.p.d},
         {"k", a.p.k},
         {"eta", a.p.eta},
         {"c", a.p.c},
         {"t_steps", a.p.t_steps},
         {"seed", a.p.seed},
         {"steps", steps},
         {"test_error", report.test_error},
         {"all_bands_ok", report.all_bands_ok},
         {"all_active", report.all_active}};
  write_json(a.out, j);
  std::printf("theory: bands %s, active %s, test error %.6g -> %s\n",
              report.all_bands_ok ? "ok" : "VIOLATED",
              report.all_active ? "ok" : "NOT ALWAYS", report.test_error,
              a.out.c_str());
}

struct RunArgs {
  std::string experiment;
  std::string config;
  std::string out = ".";
  std::uint64_t seed = 0;
  bool has_seed = false;
};

void cmd_run(const RunArgs& a) {
  harness::ExperimentConfig cfg;
  if (!a.config.empty()) {
    cfg = harness::parse_experiment_config(read_text(a.config));
  }
  if (!a.experiment.empty()) {
    cfg.experiment = harness::experiment_from_string(a.experiment);
  }
  if (a.has_seed) cfg.seed = a.seed;
  cfg.out_dir = a.out;
  const auto manifest = harness::run_experiment(cfg);
  harness::emit_report(manifest, a.out);
  std::printf("%s: %zu tables in %.2fs -> %s\n",
              harness::to_string(cfg.experiment).c_str(),
              manifest.tables.size(), manifest.wall_clock_seconds,
              a.out.c_str());
}

struct ReportArgs {
  std::string manifest;
  std::string out = ".";
};

void cmd_report(const ReportArgs& a) {
  auto man = harness::load_manifest(a.manifest);
  harness::emit_report(man, a.out);
  std::printf("re-emitted %zu tables -> %s\n", man.tables.size(),
              a.out.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simplicity-bias testbed"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* sc_gen = app.add_subcommand("gen", "generate a dataset");
  sc_gen->add_option("--preset", gen.preset);
  sc_gen->add_option("--d", gen.d);
  sc_gen->add_option("--n", gen.n);
  sc_gen->add_option("--seed", gen.seed);
  sc_gen->add_option("--p", gen.p, "noise fraction for noisy presets");
  sc_gen->add_flag("--rotate", gen.rotate);
  sc_gen->add_option("--out", gen.out)->required();

  TrainArgs tr;
  auto* sc_train = app.add_subcommand("train", "train a model");
  auto add_train_opts = [](CLI::App* sc, TrainArgs& t) {
    sc->add_option("--data", t.data)->required();
    sc->add_option("--arch", t.arch);
    sc->add_option("--loss", t.loss);
    sc->add_option("--opt", t.opt);
    sc->add_option("--batch", t.batch);
    sc->add_option("--wd", t.wd);
    sc->add_option("--momentum", t.momentum);
    sc->add_option("--dropout", t.dropout);
    sc->add_option("--epochs", t.epochs);
    sc->add_option("--seed", t.seed);
    sc->add_option("--out", t.out);
  };
  add_train_opts(sc_train, tr);

  TrainArgs adv;
  adv.adversarial = true;
  auto* sc_adv = app.add_subcommand("advtrain", "adversarially train a model");
  add_train_opts(sc_adv, adv);
  sc_adv->add_option("--norm", adv.norm);
  sc_adv->add_option("--eps", adv.eps)->required();
  sc_adv->add_option("--attack-steps", adv.attack_steps);
  sc_adv->add_option("--step-size", adv.step_size);

  EvalArgs ev;
  auto* sc_eval = app.add_subcommand("eval", "evaluate a model");
  sc_eval->add_option("--model", ev.model)->required();
  sc_eval->add_option("--data", ev.data)->required();
  sc_eval->add_option("--groups", ev.groups);
  sc_eval->add_option("--robust", ev.robust, "comma list like l2:0.1,l2:0.3");
  sc_eval->add_option("--repeats", ev.repeats);
  sc_eval->add_option("--seed", ev.seed);
  sc_eval->add_option("--out", ev.out);
  sc_eval->add_option("--boundary", ev.boundary, "score-grid CSV path");
  sc_eval->add_option("--resolution", ev.resolution);

  UapArgs up;
  auto* sc_uap = app.add_subcommand("uap", "universal perturbation");
  sc_uap->add_option("--model", up.model)->required();
  sc_uap->add_option("--data", up.data)->required();
  sc_uap->add_option("--norm", up.norm);
  sc_uap->add_option("--budget", up.budget);
  sc_uap->add_option("--steps", up.steps);
  sc_uap->add_option("--step-size", up.step_size);
  sc_uap->add_option("--restarts", up.restarts);
  sc_uap->add_option("--seed", up.seed);
  sc_uap->add_option("--out", up.out);

  TheoryArgs th;
  auto* sc_theory = app.add_subcommand("theory", "closed-form trajectory check");
  sc_theory->add_option("--d", th.p.d);
  sc_theory->add_option("--k", th.p.k);
  sc_theory->add_option("--eta", th.p.eta);
  sc_theory->add_option("--c", th.p.c);
  sc_theory->add_option("--m", th.p.m);
  sc_theory->add_option("--steps", th.p.t_steps);
  sc_theory->add_option("--seed", th.p.seed);
  sc_theory->add_option("--out", th.out);

  RunArgs rn;
  auto* sc_run = app.add_subcommand("run", "run a full experiment");
  sc_run->add_option("--experiment", rn.experiment);
  sc_run->add_option("--config", rn.config);
  sc_run->add_option("--out", rn.out);
  auto* seed_opt = sc_run->add_option("--seed", rn.seed);

  ReportArgs rp;
  auto* sc_report = app.add_subcommand("report", "re-emit CSVs from a manifest");
  sc_report->add_option("--manifest", rp.manifest)->required();
  sc_report->add_option("--out", rp.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*sc_gen) cmd_gen(gen);
    else if (*sc_train) cmd_train(tr);
    else if (*sc_adv) cmd_train(adv);
    else if (*sc_eval) cmd_eval(ev);
    else if (*sc_uap) cmd_uap(up);
    else if (*sc_theory) cmd_theory(th);
    else if (*sc_run) {
      rn.has_seed = seed_opt->count() > 0;
      cmd_run(rn);
    } else if (*sc_report) cmd_report(rp);
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "divergence: %s\n", e.what());
    return kDivergence;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kIoError;
  } catch (const SpecError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  }
  return kOk;
}
