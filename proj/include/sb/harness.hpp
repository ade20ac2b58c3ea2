#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sb/attacks.hpp"
#include "sb/datagen.hpp"
#include "sb/lsn.hpp"
#include "sb/metrics.hpp"
#include "sb/mlp.hpp"

namespace sb::harness {

enum class ExperimentKind {
  ExtremeSB,
  Generalization,
  Ensemble,
  AdvSweep,
  Interpolation,
  Theory,
  Uap,
};

std::string to_string(ExperimentKind k);
ExperimentKind experiment_from_string(const std::string& s);

struct Arch {
  int width = 100;
  int depth = 1;
};

// One experiment description. Every field has a runnable default; JSON
// configs override fields by name and unknown keys are rejected.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::ExtremeSB;
  std::string preset = "lms-5";
  std::vector<int> dims = {50};
  long n_train = 50000;
  long n_test = 10000;
  double noise = 0.1;  // noise fraction for noisy presets
  std::vector<Arch> archs = {{2000, 1}};
  mlp::TrainConfig train;  // base training configuration (seed is derived)

  // hyperparameter grid (generalization)
  std::vector<double> grid_lr = {0.001, 0.01, 0.05, 0.1, 0.3};
  std::vector<int> grid_batch = {4, 16, 64, 256};
  std::vector<double> grid_wd = {0.0, 5e-5, 5e-4};
  std::vector<double> grid_momentum = {0.0, 0.9, 0.95};
  int grid_subsample = 24;  // 0 = full grid

  std::vector<int> ensemble_sizes = {1, 3, 5, 10};
  // sample size for the ensemble control dataset; 0 means n_train. The
  // control is meant to sit at its Bayes accuracy, not in the overfitting
  // regime of the primary dataset.
  long control_n = 0;

  std::vector<double> epsilons = {0.0, 0.25, 0.35};  // adversarial sweep
  attacks::AttackConfig attack;                      // attack template

  std::vector<double> alphas = {0.0, 0.25, 0.5, 0.75, 1.0};  // interpolation

  lsn::TheoremParams theorem;

  int boundary_resolution = 0;  // 0 disables boundary-grid tables
  int eval_repeats = 3;         // randomization repeats per metric
  int repeats = 1;              // independent experiment repeats
  std::uint64_t seed = 1;
  std::string out_dir = ".";

  void validate() const;  // throws SpecError
};

// Strict JSON parse: unknown keys anywhere raise SpecError.
ExperimentConfig parse_experiment_config(const std::string& json_text);
// Stable, key-sorted serialization; parse round-trips every field.
std::string canonical_config_json(const ExperimentConfig& cfg);
std::uint32_t config_hash(const ExperimentConfig& cfg);

// Every numeric cell is fixed at 6 significant digits so CSV emission is
// idempotent and parse-back reproduces the printed value exactly.
std::string format_number(double v);

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> cells);  // throws on arity mismatch
  std::string csv() const;
};

struct RunManifest {
  ExperimentConfig config;
  std::uint32_t hash = 0;
  std::vector<std::uint64_t> seeds;  // one derived stream per repeat
  std::vector<Table> tables;
  double wall_clock_seconds = 0.0;
  int artifact_version = 1;
};

// Derived, non-overlapping seed stream for a repeat index.
std::uint64_t repeat_seed(const ExperimentConfig& cfg, int repeat);

// The runners. Each produces one row per condition and repeat; rows are
// keyed by their leading columns and independent across repeats.
RunManifest run_extreme_sb(const ExperimentConfig& cfg);
RunManifest run_generalization(const ExperimentConfig& cfg);
RunManifest run_ensemble(const ExperimentConfig& cfg);
RunManifest run_adv_sweep(const ExperimentConfig& cfg);
RunManifest run_interpolation(const ExperimentConfig& cfg);
RunManifest run_theory(const ExperimentConfig& cfg);
RunManifest run_uap(const ExperimentConfig& cfg);

// Dispatch on cfg.experiment; the overload restricts which repeat indices
// run (empty = all), leaving per-repeat rows unchanged.
RunManifest run_experiment(const ExperimentConfig& cfg);
RunManifest run_experiment(const ExperimentConfig& cfg,
                           const std::vector<int>& repeat_indices);

// Writes <out_dir>/<table>.csv per table plus manifest.json; idempotent
// (byte-identical on re-emission). Unwritable paths raise IoError.
void emit_report(const RunManifest& manifest, const std::string& out_dir);
RunManifest load_manifest(const std::string& path);

}  // namespace sb::harness
