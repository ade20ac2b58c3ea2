#include "sb/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "sb/errors.hpp"

namespace sb::harness {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::ExtremeSB: return "extreme-sb";
    case ExperimentKind::Generalization: return "generalization";
    case ExperimentKind::Ensemble: return "ensemble";
    case ExperimentKind::AdvSweep: return "adv-sweep";
    case ExperimentKind::Interpolation: return "interpolation";
    case ExperimentKind::Theory: return "theory";
    case ExperimentKind::Uap: return "uap";
  }
  throw SpecError("unknown experiment kind");
}

ExperimentKind experiment_from_string(const std::string& s) {
  if (s == "extreme-sb") return ExperimentKind::ExtremeSB;
  if (s == "generalization") return ExperimentKind::Generalization;
  if (s == "ensemble") return ExperimentKind::Ensemble;
  if (s == "adv-sweep") return ExperimentKind::AdvSweep;
  if (s == "interpolation") return ExperimentKind::Interpolation;
  if (s == "theory") return ExperimentKind::Theory;
  if (s == "uap") return ExperimentKind::Uap;
  throw SpecError("unknown experiment: " + s);
}

void ExperimentConfig::validate() const {
  if (dims.empty()) throw SpecError("dims must be non-empty");
  for (int d : dims) {
    if (d < 1) throw SpecError("dims entries must be positive");
  }
  if (n_train < 1 || n_test < 1) throw SpecError("sample sizes must be positive");
  if (archs.empty()) throw SpecError("archs must be non-empty");
  for (const auto& a : archs) {
    if (a.width < 1 || a.depth < 0) throw SpecError("bad architecture");
  }
  if (grid_lr.empty() || grid_batch.empty() || grid_wd.empty() ||
      grid_momentum.empty()) {
    throw SpecError("hyperparameter grid must be non-empty");
  }
  if (grid_subsample < 0) throw SpecError("grid_subsample must be >= 0");
  if (ensemble_sizes.empty()) throw SpecError("ensemble_sizes must be non-empty");
  if (control_n < 0) throw SpecError("control_n must be >= 0");
  for (int s : ensemble_sizes) {
    if (s < 1) throw SpecError("ensemble sizes must be positive");
  }
  if (epsilons.empty()) throw SpecError("epsilons must be non-empty");
  if (alphas.empty()) throw SpecError("alphas must be non-empty");
  if (boundary_resolution < 0) throw SpecError("boundary_resolution must be >= 0");
  if (eval_repeats < 1) throw SpecError("eval_repeats must be >= 1");
  if (repeats < 1) throw SpecError("repeats must be >= 1");
  train.validate();
  attack.validate();
}

namespace {

const char* optimizer_name(mlp::OptimizerKind k) {
  switch (k) {
    case mlp::OptimizerKind::SGD: return "sgd";
    case mlp::OptimizerKind::Adam: return "adam";
    case mlp::OptimizerKind::RMSProp: return "rmsprop";
  }
  throw SpecError("unknown optimizer kind");
}

mlp::OptimizerKind optimizer_from_name(const std::string& s) {
  if (s == "sgd") return mlp::OptimizerKind::SGD;
  if (s == "adam") return mlp::OptimizerKind::Adam;
  if (s == "rmsprop") return mlp::OptimizerKind::RMSProp;
  throw SpecError("unknown optimizer: " + s);
}

void check_keys(const json& obj, const std::vector<std::string>& allowed,
                const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw SpecError("unknown config key \"" + key + "\" in " + where);
    }
  }
}

json train_to_json(const mlp::TrainConfig& t) {
  return json{{"loss", mlp::to_string(t.loss)},
              {"optimizer", optimizer_name(t.opt.kind)},
              {"lr", t.opt.lr},
              {"momentum", t.opt.momentum},
              {"weight_decay", t.opt.weight_decay},
              {"batch_size", t.batch_size},
              {"epochs", t.epochs},
              {"dropout", t.dropout_p},
              {"early_stop_loss", t.early_stop_loss}};
}

void train_from_json(const json& j, mlp::TrainConfig* t) {
  check_keys(j,
             {"loss", "optimizer", "lr", "momentum", "weight_decay",
              "batch_size", "epochs", "dropout", "early_stop_loss"},
             "train");
  if (j.contains("loss")) t->loss = mlp::loss_from_string(j.at("loss"));
  if (j.contains("optimizer")) t->opt.kind = optimizer_from_name(j.at("optimizer"));
  if (j.contains("lr")) t->opt.lr = j.at("lr");
  if (j.contains("momentum")) t->opt.momentum = j.at("momentum");
  if (j.contains("weight_decay")) t->opt.weight_decay = j.at("weight_decay");
  if (j.contains("batch_size")) t->batch_size = j.at("batch_size");
  if (j.contains("epochs")) t->epochs = j.at("epochs");
  if (j.contains("dropout")) t->dropout_p = j.at("dropout");
  if (j.contains("early_stop_loss")) t->early_stop_loss = j.at("early_stop_loss");
}

json attack_to_json(const attacks::AttackConfig& a) {
  return json{{"norm", attacks::to_string(a.norm)},
              {"budget", a.budget},
              {"steps", a.steps},
              {"step_size", a.step_size},
              {"restarts", a.restarts},
              {"monotone", a.monotone},
              {"loss", mlp::to_string(a.loss)}};
}

void attack_from_json(const json& j, attacks::AttackConfig* a) {
  check_keys(j, {"norm", "budget", "steps", "step_size", "restarts",
                 "monotone", "loss"},
             "attack");
  if (j.contains("norm")) a->norm = attacks::norm_from_string(j.at("norm"));
  if (j.contains("budget")) a->budget = j.at("budget");
  if (j.contains("steps")) a->steps = j.at("steps");
  if (j.contains("step_size")) a->step_size = j.at("step_size");
  if (j.contains("restarts")) a->restarts = j.at("restarts");
  if (j.contains("monotone")) a->monotone = j.at("monotone");
  if (j.contains("loss")) a->loss = mlp::loss_from_string(j.at("loss"));
}

json theorem_to_json(const lsn::TheoremParams& p) {
  return json{{"d", p.d},     {"k", p.k},       {"eta", p.eta}, {"m", p.m},
              {"c", p.c},     {"t_steps", p.t_steps}};
}

void theorem_from_json(const json& j, lsn::TheoremParams* p) {
  check_keys(j, {"d", "k", "eta", "m", "c", "t_steps"}, "theorem");
  if (j.contains("d")) p->d = j.at("d");
  if (j.contains("k")) p->k = j.at("k");
  if (j.contains("eta")) p->eta = j.at("eta");
  if (j.contains("m")) p->m = j.at("m");
  if (j.contains("c")) p->c = j.at("c");
  if (j.contains("t_steps")) p->t_steps = j.at("t_steps");
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw SpecError(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw SpecError("config must be a JSON object");
  check_keys(j,
             {"experiment", "preset", "dims", "n_train", "n_test", "noise",
              "archs", "train", "grid_lr", "grid_batch", "grid_wd",
              "grid_momentum", "grid_subsample", "ensemble_sizes", "control_n", "epsilons",
              "attack", "alphas", "theorem", "boundary_resolution",
              "eval_repeats", "repeats", "seed", "out_dir"},
             "config");
  ExperimentConfig cfg;
  try {
    if (j.contains("experiment")) cfg.experiment = experiment_from_string(j.at("experiment"));
    if (j.contains("preset")) cfg.preset = j.at("preset");
    if (j.contains("dims")) cfg.dims = j.at("dims").get<std::vector<int>>();
    if (j.contains("n_train")) cfg.n_train = j.at("n_train");
    if (j.contains("n_test")) cfg.n_test = j.at("n_test");
    if (j.contains("noise")) cfg.noise = j.at("noise");
    if (j.contains("archs")) {
      cfg.archs.clear();
      for (const auto& a : j.at("archs")) {
        if (!a.is_array() || a.size() != 2) {
          throw SpecError("archs entries must be [width, depth] pairs");
        }
        cfg.archs.push_back({a.at(0).get<int>(), a.at(1).get<int>()});
      }
    }
    if (j.contains("train")) train_from_json(j.at("train"), &cfg.train);
    if (j.contains("grid_lr")) cfg.grid_lr = j.at("grid_lr").get<std::vector<double>>();
    if (j.contains("grid_batch")) cfg.grid_batch = j.at("grid_batch").get<std::vector<int>>();
    if (j.contains("grid_wd")) cfg.grid_wd = j.at("grid_wd").get<std::vector<double>>();
    if (j.contains("grid_momentum")) cfg.grid_momentum = j.at("grid_momentum").get<std::vector<double>>();
    if (j.contains("grid_subsample")) cfg.grid_subsample = j.at("grid_subsample");
    if (j.contains("ensemble_sizes")) cfg.ensemble_sizes = j.at("ensemble_sizes").get<std::vector<int>>();
    if (j.contains("control_n")) cfg.control_n = j.at("control_n");
    if (j.contains("epsilons")) cfg.epsilons = j.at("epsilons").get<std::vector<double>>();
    if (j.contains("attack")) attack_from_json(j.at("attack"), &cfg.attack);
    if (j.contains("alphas")) cfg.alphas = j.at("alphas").get<std::vector<double>>();
    if (j.contains("theorem")) theorem_from_json(j.at("theorem"), &cfg.theorem);
    if (j.contains("boundary_resolution")) cfg.boundary_resolution = j.at("boundary_resolution");
    if (j.contains("eval_repeats")) cfg.eval_repeats = j.at("eval_repeats");
    if (j.contains("repeats")) cfg.repeats = j.at("repeats");
    if (j.contains("seed")) cfg.seed = j.at("seed");
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir");
  } catch (const json::exception& e) {
    throw SpecError(std::string("config field error: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string canonical_config_json(const ExperimentConfig& cfg) {
  json archs = json::array();
  for (const auto& a : cfg.archs) archs.push_back({a.width, a.depth});
  json j{{"experiment", to_string(cfg.experiment)},
         {"preset", cfg.preset},
         {"dims", cfg.dims},
         {"n_train", cfg.n_train},
         {"n_test", cfg.n_test},
         {"noise", cfg.noise},
         {"archs", archs},
         {"train", train_to_json(cfg.train)},
         {"grid_lr", cfg.grid_lr},
         {"grid_batch", cfg.grid_batch},
         {"grid_wd", cfg.grid_wd},
         {"grid_momentum", cfg.grid_momentum},
         {"grid_subsample", cfg.grid_subsample},
         {"ensemble_sizes", cfg.ensemble_sizes},
         {"control_n", cfg.control_n},
         {"epsilons", cfg.epsilons},
         {"attack", attack_to_json(cfg.attack)},
         {"alphas", cfg.alphas},
         {"theorem", theorem_to_json(cfg.theorem)},
         {"boundary_resolution", cfg.boundary_resolution},
         {"eval_repeats", cfg.eval_repeats},
         {"repeats", cfg.repeats},
         {"seed", cfg.seed},
         {"out_dir", cfg.out_dir}};
  return j.dump();  // nlohmann objects iterate in sorted key order
}

std::uint32_t config_hash(const ExperimentConfig& cfg) {
  const std::string s = canonical_config_json(cfg);
  return datagen::crc32(s.data(), s.size());
}

std::string format_number(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void Table::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns.size()) {
    throw SpecError("table \"" + name + "\": row arity mismatch");
  }
  rows.push_back(std::move(cells));
}

std::string Table::csv() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    out << (i ? "," : "") << columns[i];
  }
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << row[i];
    }
    out << "\n";
  }
  return out.str();
}

std::uint64_t repeat_seed(const ExperimentConfig& cfg, int repeat) {
  return Rng::mix(cfg.seed, 0x5EED0000ull + static_cast<std::uint64_t>(repeat));
}

namespace {

std::string arch_name(const Arch& a) {
  return std::to_string(a.width) + "x" + std::to_string(a.depth);
}

datagen::Dataset make_data(const ExperimentConfig& cfg, const std::string& preset,
                           int d, long n, std::uint64_t seed) {
  if (preset == "nl-0.5") {
    // one noisy linear coordinate carrying all the signal, rest pure noise
    datagen::DatasetSpec spec;
    datagen::BlockSpec lin;
    lin.kind = datagen::BlockKind::NoisyLinear;
    lin.noise = cfg.noise;
    spec.blocks.push_back(lin);
    for (int i = 1; i < d; ++i) {
      datagen::BlockSpec g;
      g.kind = datagen::BlockKind::Gaussian;
      spec.blocks.push_back(g);
    }
    spec.name = "nl-" + format_number(cfg.noise);
    return datagen::generate_dataset(spec, static_cast<int>(n), seed);
  }
  return datagen::generate_dataset(
      datagen::preset_by_name(preset, d, cfg.noise), static_cast<int>(n), seed);
}

std::pair<mlp::MlpModel, mlp::TrainHistory> fit(
    const ExperimentConfig& cfg, const Arch& arch,
    const datagen::Dataset& data, const mlp::TrainConfig& tc,
    std::uint64_t seed) {
  mlp::MlpModel model =
      mlp::init_model(data.dim(), arch.width, arch.depth,
                      mlp::Activation::ReLU, mlp::InitSpec{}, false,
                      Rng::mix(seed, 0x1717));
  mlp::TrainConfig t = tc;
  t.seed = Rng::mix(seed, 0x2929);
  auto out = mlp::train(model, data, t);
  if (out.second.diverged) throw DivergenceError("training diverged");
  (void)cfg;
  return out;
}

double test_accuracy(const mlp::MlpModel& m, const datagen::Dataset& data) {
  return metrics::accuracy(mlp::forward_batch(m, data.features), data.labels);
}

RunManifest begin(const ExperimentConfig& cfg) {
  cfg.validate();
  RunManifest man;
  man.config = cfg;
  man.hash = config_hash(cfg);
  return man;
}

std::vector<int> all_repeats(const ExperimentConfig& cfg) {
  std::vector<int> r(cfg.repeats);
  std::iota(r.begin(), r.end(), 0);
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// extreme simplicity bias: wide shallow nets keyed on a single simple block
// ---------------------------------------------------------------------------

namespace {

RunManifest run_extreme_sb_impl(const ExperimentConfig& cfg,
                                const std::vector<int>& reps) {
  RunManifest man = begin(cfg);
  Table table{"extreme_sb",
              {"repeat", "dataset", "d", "arch", "sc_size", "test_accuracy",
               "s_auc", "sc_auc", "s_logit_shift", "sc_logit_shift"},
              {}};
  for (int rep : reps) {
    const std::uint64_t rs = repeat_seed(cfg, rep);
    man.seeds.push_back(rs);
    int run = 0;
    for (int d : cfg.dims) {
      for (const auto& arch : cfg.archs) {
        const std::uint64_t s = Rng::mix(rs, 100 + run++);
        const auto train_data = make_data(cfg, cfg.preset, d, cfg.n_train,
                                          Rng::mix(s, 1));
        const auto test_data = make_data(cfg, cfg.preset, d, cfg.n_test,
                                         Rng::mix(s, 2));
        const auto [model, hist] = fit(cfg, arch, train_data, cfg.train, s);
        const auto rm_s = metrics::randomized_metrics(
            model, test_data, "S", cfg.eval_repeats, Rng::mix(s, 3));
        const auto rm_sc = metrics::randomized_metrics(
            model, test_data, "Sc", cfg.eval_repeats, Rng::mix(s, 4));
        table.add_row({std::to_string(rep), train_data.spec.name,
                       std::to_string(d), arch_name(arch),
                       std::to_string(test_data.group("Sc").size()),
                       format_number(test_accuracy(model, test_data)),
                       format_number(rm_s.auc), format_number(rm_sc.auc),
                       format_number(rm_s.logit_shift),
                       format_number(rm_sc.logit_shift)});
        if (cfg.boundary_resolution > 0) {
          const Eigen::MatrixXd grid = metrics::decision_boundary_grid(
              model, test_data, 0, 1, cfg.boundary_resolution);
          Table bt{"boundary_r" + std::to_string(rep) + "_" +
                       train_data.spec.name + "_d" + std::to_string(d) + "_" +
                       arch_name(arch),
                   {"i", "j", "score"},
                   {}};
          for (int i = 0; i < grid.rows(); ++i) {
            for (int jcol = 0; jcol < grid.cols(); ++jcol) {
              bt.add_row({std::to_string(i), std::to_string(jcol),
                          format_number(grid(i, jcol))});
            }
          }
          man.tables.push_back(std::move(bt));
        }
      }
    }
  }
  man.tables.insert(man.tables.begin(), std::move(table));
  return man;
}

}  // namespace

RunManifest run_extreme_sb(const ExperimentConfig& cfg) {
  return run_extreme_sb_impl(cfg, all_repeats(cfg));
}

// ---------------------------------------------------------------------------
// generalization: grid search on the noisy linear + slab dataset
// ---------------------------------------------------------------------------

namespace {

struct GridPoint {
  double lr, wd, momentum;
  int batch;
};

std::vector<GridPoint> build_grid(const ExperimentConfig& cfg) {
  std::vector<GridPoint> full;
  for (double lr : cfg.grid_lr) {
    for (int b : cfg.grid_batch) {
      for (double wd : cfg.grid_wd) {
        for (double mom : cfg.grid_momentum) full.push_back({lr, wd, mom, b});
      }
    }
  }
  const int total = static_cast<int>(full.size());
  if (cfg.grid_subsample <= 0 || cfg.grid_subsample >= total) return full;
  // even stride through the lr-major ordering spreads picks across lr x batch
  std::vector<GridPoint> picked;
  for (int i = 0; i < cfg.grid_subsample; ++i) {
    picked.push_back(full[static_cast<std::size_t>(
        static_cast<long>(i) * total / cfg.grid_subsample)]);
  }
  return picked;
}

datagen::Dataset slice(const datagen::Dataset& data, int start, int count) {
  datagen::Dataset out = data;
  out.features = data.features.middleRows(start, count).eval();
  out.labels = data.labels.segment(start, count).eval();
  return out;
}

RunManifest run_generalization_impl(const ExperimentConfig& cfg,
                                    const std::vector<int>& reps) {
  RunManifest man = begin(cfg);
  Table grid_table{"generalization_grid",
                   {"repeat", "arch", "lr", "batch", "wd", "momentum",
                    "val_accuracy"},
                   {}};
  Table best_table{"generalization",
                   {"repeat", "arch", "best_lr", "best_batch", "best_wd",
                    "best_momentum", "train_accuracy", "test_accuracy",
                    "s_rand_accuracy", "sc_rand_accuracy",
                    "no_linear_test_accuracy"},
                   {}};
  const int d = cfg.dims.front();
  const auto grid = build_grid(cfg);
  for (int rep : reps) {
    const std::uint64_t rs = repeat_seed(cfg, rep);
    man.seeds.push_back(rs);
    const auto data = make_data(cfg, cfg.preset, d, cfg.n_train, Rng::mix(rs, 1));
    const auto test_data = make_data(cfg, cfg.preset, d, cfg.n_test, Rng::mix(rs, 2));
    const int n_val = data.n() / 5;
    const auto train_part = slice(data, 0, data.n() - n_val);
    const auto val_part = slice(data, data.n() - n_val, n_val);

    for (const auto& arch : cfg.archs) {
      int best = -1;
      double best_val = -1.0;
      mlp::MlpModel best_model;
      for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        mlp::TrainConfig tc = cfg.train;
        tc.opt.lr = grid[gi].lr;
        tc.opt.weight_decay = grid[gi].wd;
        tc.opt.momentum = grid[gi].momentum;
        tc.batch_size = grid[gi].batch;
        const std::uint64_t s = Rng::mix(rs, 1000 + gi);
        mlp::MlpModel model;
        double val;
        try {
          model = fit(cfg, arch, train_part, tc, s).first;
          val = test_accuracy(model, val_part);
        } catch (const DivergenceError&) {
          val = 0.0;  // divergent cells lose the grid search
        }
        grid_table.add_row({std::to_string(rep), arch_name(arch),
                            format_number(grid[gi].lr),
                            std::to_string(grid[gi].batch),
                            format_number(grid[gi].wd),
                            format_number(grid[gi].momentum),
                            format_number(val)});
        if (val > best_val) {
          best_val = val;
          best = static_cast<int>(gi);
          best_model = model;
        }
      }
      if (best < 0) throw DivergenceError("every grid cell diverged");
      const auto& bp = grid[best];
      const auto rm_s = metrics::randomized_metrics(
          best_model, test_data, "S", cfg.eval_repeats, Rng::mix(rs, 7));
      const auto rm_sc = metrics::randomized_metrics(
          best_model, test_data, "Sc", cfg.eval_repeats, Rng::mix(rs, 8));

      // same dataset with the simple (first) coordinate removed entirely;
      // gets its own grid selection since the winning cell on the full data
      // only needs to learn the simple coordinate
      datagen::DatasetSpec no_lin = data.spec;
      no_lin.blocks.erase(no_lin.blocks.begin());
      no_lin.name = data.spec.name + "-nolinear";
      const auto nl_data = datagen::generate_dataset(
          no_lin, static_cast<int>(cfg.n_train), Rng::mix(rs, 9));
      const auto nl_test = datagen::generate_dataset(
          no_lin, static_cast<int>(cfg.n_test), Rng::mix(rs, 10));
      const auto nl_train = slice(nl_data, 0, nl_data.n() - n_val);
      const auto nl_val = slice(nl_data, nl_data.n() - n_val, n_val);
      double nl_best_val = -1.0;
      mlp::MlpModel nl_model;
      for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        mlp::TrainConfig tc = cfg.train;
        tc.opt.lr = grid[gi].lr;
        tc.opt.weight_decay = grid[gi].wd;
        tc.opt.momentum = grid[gi].momentum;
        tc.batch_size = grid[gi].batch;
        try {
          auto model =
              fit(cfg, arch, nl_train, tc, Rng::mix(rs, 2000 + gi)).first;
          const double val = test_accuracy(model, nl_val);
          if (val > nl_best_val) {
            nl_best_val = val;
            nl_model = std::move(model);
          }
        } catch (const DivergenceError&) {
        }
      }
      if (nl_best_val < 0) {
        throw DivergenceError("every grid cell diverged on the reduced data");
      }

      best_table.add_row(
          {std::to_string(rep), arch_name(arch), format_number(bp.lr),
           std::to_string(bp.batch), format_number(bp.wd),
           format_number(bp.momentum),
           format_number(test_accuracy(best_model, train_part)),
           format_number(test_accuracy(best_model, test_data)),
           format_number(rm_s.accuracy), format_number(rm_sc.accuracy),
           format_number(test_accuracy(nl_model, nl_test))});
    }
  }
  man.tables.push_back(std::move(best_table));
  man.tables.push_back(std::move(grid_table));
  return man;
}

}  // namespace

RunManifest run_generalization(const ExperimentConfig& cfg) {
  return run_generalization_impl(cfg, all_repeats(cfg));
}

// ---------------------------------------------------------------------------
// ensembles: averaging independently trained models
// ---------------------------------------------------------------------------

namespace {

RunManifest run_ensemble_impl(const ExperimentConfig& cfg,
                              const std::vector<int>& reps) {
  RunManifest man = begin(cfg);
  Table table{"ensemble",
              {"repeat", "dataset", "size", "accuracy", "mean_single",
               "gain_over_single"},
              {}};
  const int d = cfg.dims.front();
  const int members =
      *std::max_element(cfg.ensemble_sizes.begin(), cfg.ensemble_sizes.end());
  // the overfitting slab dataset and the pure noisy-linear control
  const std::vector<std::string> presets = {cfg.preset, "nl-0.5"};
  for (int rep : reps) {
    const std::uint64_t rs = repeat_seed(cfg, rep);
    man.seeds.push_back(rs);
    for (std::size_t pi = 0; pi < presets.size(); ++pi) {
      const std::uint64_t ps = Rng::mix(rs, 50 + pi);
      const long n_i =
          (pi == 1 && cfg.control_n > 0) ? cfg.control_n : cfg.n_train;
      const auto train_data =
          make_data(cfg, presets[pi], d, n_i, Rng::mix(ps, 1));
      const auto test_data =
          make_data(cfg, presets[pi], d, cfg.n_test, Rng::mix(ps, 2));
      std::vector<mlp::MlpModel> models;
      for (int mi = 0; mi < members; ++mi) {
        models.push_back(fit(cfg, cfg.archs.front(), train_data, cfg.train,
                             Rng::mix(ps, 100 + mi)).first);
      }
      // baseline: mean accuracy of the individual members, so the gain is
      // not hostage to which member happens to come first
      double mean_single = 0.0;
      for (const auto& mi : models) {
        mean_single += metrics::accuracy(
            mlp::forward_batch(mi, test_data.features), test_data.labels);
      }
      mean_single /= static_cast<double>(models.size());
      for (int size : cfg.ensemble_sizes) {
        const std::vector<mlp::MlpModel> sub(models.begin(),
                                             models.begin() + size);
        const double acc = metrics::accuracy(
            mlp::ensemble_score_batch(sub, test_data.features),
            test_data.labels);
        table.add_row({std::to_string(rep), train_data.spec.name,
                       std::to_string(size), format_number(acc),
                       format_number(mean_single),
                       format_number(acc - mean_single)});
      }
    }
  }
  man.tables.push_back(std::move(table));
  return man;
}

}  // namespace

RunManifest run_ensemble(const ExperimentConfig& cfg) {
  return run_ensemble_impl(cfg, all_repeats(cfg));
}

// ---------------------------------------------------------------------------
// adversarial-training sweep over the perturbation budget
// ---------------------------------------------------------------------------

namespace {

RunManifest run_adv_sweep_impl(const ExperimentConfig& cfg,
                               const std::vector<int>& reps) {
  RunManifest man = begin(cfg);
  Table table{"adv_sweep",
              {"repeat", "epsilon", "standard_accuracy", "robust_accuracy",
               "s_rand_accuracy", "sc_rand_accuracy"},
              {}};
  const int d = cfg.dims.front();

  // reference margins of the simple half and of the full dataset
  const auto margin_spec = datagen::preset_by_name(cfg.preset, d, cfg.noise);
  const auto probe = datagen::generate_dataset(margin_spec, 64, 1);
  Table margins{"adv_margins", {"gamma_s", "gamma_data"}, {}};
  margins.add_row(
      {format_number(datagen::estimate_margin(margin_spec, 4000, cfg.seed,
                                              probe.group("S"))),
       format_number(datagen::estimate_margin(margin_spec, 4000, cfg.seed))});

  for (int rep : reps) {
    const std::uint64_t rs = repeat_seed(cfg, rep);
    man.seeds.push_back(rs);
    const auto train_data = make_data(cfg, cfg.preset, d, cfg.n_train, Rng::mix(rs, 1));
    const auto test_data = make_data(cfg, cfg.preset, d, cfg.n_test, Rng::mix(rs, 2));
    for (std::size_t ei = 0; ei < cfg.epsilons.size(); ++ei) {
      const double eps = cfg.epsilons[ei];
      const std::uint64_t s = Rng::mix(rs, 200 + ei);
      attacks::AttackConfig atk = cfg.attack;
      atk.budget = eps;
      atk.seed = Rng::mix(s, 1);
      mlp::MlpModel model =
          mlp::init_model(d, cfg.archs.front().width, cfg.archs.front().depth,
                          mlp::Activation::ReLU, mlp::InitSpec{}, false,
                          Rng::mix(s, 0x1717));
      mlp::TrainConfig tc = cfg.train;
      tc.seed = Rng::mix(s, 0x2929);
      auto [trained, hist] = attacks::adversarial_train(model, train_data, atk, tc);
      if (hist.diverged) throw DivergenceError("adversarial training diverged");

      attacks::AttackConfig eval_atk = atk;
      eval_atk.seed = Rng::mix(s, 2);
      const double robust =
          metrics::robust_accuracy(trained, test_data, eval_atk);
      const auto rm_s = metrics::randomized_metrics(
          trained, test_data, "S", cfg.eval_repeats, Rng::mix(s, 3));
      const auto rm_sc = metrics::randomized_metrics(
          trained, test_data, "Sc", cfg.eval_repeats, Rng::mix(s, 4));
      table.add_row({std::to_string(rep), format_number(eps),
                     format_number(test_accuracy(trained, test_data)),
                     format_number(robust), format_number(rm_s.accuracy),
                     format_number(rm_sc.accuracy)});
    }
  }
  man.tables.push_back(std::move(table));
  man.tables.push_back(std::move(margins));
  return man;
}

}  // namespace

RunManifest run_adv_sweep(const ExperimentConfig& cfg) {
  return run_adv_sweep_impl(cfg, all_repeats(cfg));
}

// ---------------------------------------------------------------------------
// initialization interpolation between a trained slab model and random init
// ---------------------------------------------------------------------------

namespace {

RunManifest run_interpolation_impl(const ExperimentConfig& cfg,
                                   const std::vector<int>& reps) {
  RunManifest man = begin(cfg);
  Table table{"interpolation",
              {"repeat", "alpha", "pre_accuracy", "s_rand_auc", "sc_auc_drop"},
              {}};
  const int d = cfg.dims.front();
  for (int rep : reps) {
    const std::uint64_t rs = repeat_seed(cfg, rep);
    man.seeds.push_back(rs);
    const auto ms_train = make_data(cfg, "ms-7", d, cfg.n_train, Rng::mix(rs, 1));
    const auto ms_test = make_data(cfg, "ms-7", d, cfg.n_test, Rng::mix(rs, 2));
    const auto lms_train = make_data(cfg, "lms-7", d, cfg.n_train, Rng::mix(rs, 3));
    const auto lms_test = make_data(cfg, "lms-7", d, cfg.n_test, Rng::mix(rs, 4));

    const auto slab_model =
        fit(cfg, cfg.archs.front(), ms_train, cfg.train, Rng::mix(rs, 5)).first;
    const mlp::MlpModel random_model = mlp::init_model(
        d, cfg.archs.front().width, cfg.archs.front().depth,
        mlp::Activation::ReLU, mlp::InitSpec{}, false, Rng::mix(rs, 6));

    for (std::size_t ai = 0; ai < cfg.alphas.size(); ++ai) {
      const double alpha = cfg.alphas[ai];
      const mlp::MlpModel start =
          mlp::interpolate(slab_model, random_model, alpha);
      const double pre_acc = test_accuracy(start, ms_test);

      mlp::TrainConfig tc = cfg.train;
      tc.seed = Rng::mix(rs, 700 + ai);
      auto [trained, hist] = mlp::train(start, lms_train, tc);
      if (hist.diverged) throw DivergenceError("interpolation training diverged");
      const double base_auc =
          metrics::auc(mlp::forward_batch(trained, lms_test.features),
                       lms_test.labels);
      const auto rm_s = metrics::randomized_metrics(
          trained, lms_test, "S", cfg.eval_repeats, Rng::mix(rs, 800 + ai));
      const auto rm_sc = metrics::randomized_metrics(
          trained, lms_test, "Sc", cfg.eval_repeats, Rng::mix(rs, 900 + ai));
      table.add_row({std::to_string(rep), format_number(alpha),
                     format_number(pre_acc), format_number(rm_s.auc),
                     format_number(base_auc - rm_sc.auc)});
    }
  }
  man.tables.push_back(std::move(table));
  return man;
}

}  // namespace

RunManifest run_interpolation(const ExperimentConfig& cfg) {
  return run_interpolation_impl(cfg, all_repeats(cfg));
}

// ---------------------------------------------------------------------------
// closed-form trajectory verification
// ---------------------------------------------------------------------------

namespace {

RunManifest run_theory_impl(const ExperimentConfig& cfg,
                            const std::vector<int>& reps) {
  RunManifest man = begin(cfg);
  Table steps{"theory_steps",
              {"repeat", "t", "max_w1_dev", "w1_band", "w1_ok", "max_w2",
               "w2_bound", "w2_ok", "max_noise_norm", "noise_bound",
               "noise_ok", "active_fraction"},
              {}};
  Table summary{"theory_summary",
                {"repeat", "test_error", "all_bands_ok", "all_active"},
                {}};
  for (int rep : reps) {
    const std::uint64_t rs = repeat_seed(cfg, rep);
    man.seeds.push_back(rs);
    lsn::TheoremParams p = cfg.theorem;
    p.seed = rs;
    const auto report = lsn::verify_theorem(p);
    for (const auto& r : report.steps) {
      steps.add_row({std::to_string(rep), std::to_string(r.t),
                     format_number(r.max_w1_dev), format_number(r.w1_band),
                     r.w1_ok ? "1" : "0", format_number(r.max_w2),
                     format_number(r.w2_bound), r.w2_ok ? "1" : "0",
                     format_number(r.max_noise_norm),
                     format_number(r.noise_bound), r.noise_ok ? "1" : "0",
                     format_number(r.active_fraction)});
    }
    summary.add_row({std::to_string(rep), format_number(report.test_error),
                     report.all_bands_ok ? "1" : "0",
                     report.all_active ? "1" : "0"});
  }
  man.tables.push_back(std::move(summary));
  man.tables.push_back(std::move(steps));
  return man;
}

}  // namespace

RunManifest run_theory(const ExperimentConfig& cfg) {
  return run_theory_impl(cfg, all_repeats(cfg));
}

// ---------------------------------------------------------------------------
// universal perturbations: energy concentration and cross-model transfer
// ---------------------------------------------------------------------------

namespace {

RunManifest run_uap_impl(const ExperimentConfig& cfg,
                         const std::vector<int>& reps) {
  RunManifest man = begin(cfg);
  Table table{"uap",
              {"repeat", "dataset", "norm", "budget", "fooled_fraction",
               "energy_s", "energy_sc", "transfer_error"},
              {}};
  const int d = cfg.dims.front();
  for (int rep : reps) {
    const std::uint64_t rs = repeat_seed(cfg, rep);
    man.seeds.push_back(rs);
    const auto train_a = make_data(cfg, cfg.preset, d, cfg.n_train, Rng::mix(rs, 1));
    const auto train_b = make_data(cfg, cfg.preset, d, cfg.n_train, Rng::mix(rs, 2));
    const auto test_data = make_data(cfg, cfg.preset, d, cfg.n_test, Rng::mix(rs, 3));
    const auto model_a =
        fit(cfg, cfg.archs.front(), train_a, cfg.train, Rng::mix(rs, 4)).first;
    const auto model_b =
        fit(cfg, cfg.archs.front(), train_b, cfg.train, Rng::mix(rs, 5)).first;

    attacks::AttackConfig atk = cfg.attack;
    atk.seed = Rng::mix(rs, 6);
    const auto result = attacks::uap(model_a, test_data, atk);
    const double transfer =
        attacks::uap_transfer(result.delta, model_b, test_data);
    const auto s_it = result.energy_by_group.find("S");
    const auto sc_it = result.energy_by_group.find("Sc");
    table.add_row(
        {std::to_string(rep), test_data.spec.name,
         attacks::to_string(atk.norm), format_number(atk.budget),
         format_number(result.fooled_fraction),
         format_number(s_it == result.energy_by_group.end() ? 0.0 : s_it->second),
         format_number(sc_it == result.energy_by_group.end() ? 0.0
                                                             : sc_it->second),
         format_number(transfer)});
  }
  man.tables.push_back(std::move(table));
  return man;
}

}  // namespace

RunManifest run_uap(const ExperimentConfig& cfg) {
  return run_uap_impl(cfg, all_repeats(cfg));
}

// ---------------------------------------------------------------------------
// dispatch, persistence
// ---------------------------------------------------------------------------

RunManifest run_experiment(const ExperimentConfig& cfg,
                           const std::vector<int>& repeat_indices) {
  std::vector<int> reps = repeat_indices;
  if (reps.empty()) reps = all_repeats(cfg);
  for (int r : reps) {
    if (r < 0 || r >= cfg.repeats) throw SpecError("repeat index out of range");
  }
  const auto start = std::chrono::steady_clock::now();
  RunManifest man;
  switch (cfg.experiment) {
    case ExperimentKind::ExtremeSB: man = run_extreme_sb_impl(cfg, reps); break;
    case ExperimentKind::Generalization: man = run_generalization_impl(cfg, reps); break;
    case ExperimentKind::Ensemble: man = run_ensemble_impl(cfg, reps); break;
    case ExperimentKind::AdvSweep: man = run_adv_sweep_impl(cfg, reps); break;
    case ExperimentKind::Interpolation: man = run_interpolation_impl(cfg, reps); break;
    case ExperimentKind::Theory: man = run_theory_impl(cfg, reps); break;
    case ExperimentKind::Uap: man = run_uap_impl(cfg, reps); break;
  }
  man.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return man;
}

RunManifest run_experiment(const ExperimentConfig& cfg) {
  return run_experiment(cfg, {});
}

void emit_report(const RunManifest& manifest, const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError(IoError::Code::Generic, "cannot create output directory " + out_dir);
  auto write_file = [](const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(IoError::Code::Generic, "cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw IoError(IoError::Code::Generic, "write failed for " + path.string());
  };
  for (const auto& table : manifest.tables) {
    write_file(fs::path(out_dir) / (table.name + ".csv"), table.csv());
  }
  json tables = json::array();
  for (const auto& table : manifest.tables) {
    tables.push_back({{"name", table.name},
                      {"columns", table.columns},
                      {"rows", table.rows}});
  }
  json j{{"artifact_version", manifest.artifact_version},
         {"config", json::parse(canonical_config_json(manifest.config))},
         {"config_hash", manifest.hash},
         {"seeds", manifest.seeds},
         {"wall_clock_seconds", manifest.wall_clock_seconds},
         {"tables", tables}};
  write_file(fs::path(out_dir) / "manifest.json", j.dump(2) + "\n");
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoError::Code::Generic, "cannot open manifest " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError(IoError::Code::Generic, std::string("manifest parse error: ") + e.what());
  }
  RunManifest man;
  try {
    man.artifact_version = j.at("artifact_version");
    man.config = parse_experiment_config(j.at("config").dump());
    man.hash = j.at("config_hash");
    man.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    man.wall_clock_seconds = j.at("wall_clock_seconds");
    for (const auto& t : j.at("tables")) {
      Table table;
      table.name = t.at("name");
      table.columns = t.at("columns").get<std::vector<std::string>>();
      for (const auto& row : t.at("rows")) {
        table.add_row(row.get<std::vector<std::string>>());
      }
      man.tables.push_back(std::move(table));
    }
  } catch (const json::exception& e) {
    throw IoError(IoError::Code::Generic, std::string("manifest field error: ") + e.what());
  }
  if (man.hash != config_hash(man.config)) {
    throw IoError(IoError::Code::Checksum,
                  "manifest hash does not match its config");
  }
  return man;
}

}  // namespace sb::harness
