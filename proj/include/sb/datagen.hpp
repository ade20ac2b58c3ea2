#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sb/rng.hpp"

namespace sb::datagen {

enum class BlockKind {
  Linear,
  NoisyLinear,
  Slab,
  NoisySlab,
  Gaussian,
  SingletonLinear,  // x = y
  SingletonSlab3,   // x = ((y+1)/2) * eps, eps = +-1
};

std::string to_string(BlockKind kind);
BlockKind block_kind_from_string(const std::string& s);

struct BlockSpec {
  BlockKind kind = BlockKind::Linear;
  double gamma = 0.1;    // effective margin, in (0,1)
  double width = 1.0;    // half-support B
  int slabs = 5;         // odd >= 3, slab kinds only
  double noise = 0.0;    // noise fraction p, noisy kinds only

  void validate() const;  // throws SpecError
};

// Closed-form geometry of a k-slab block. Slabs are grouped by distance
// from the origin: group 0 is the center slab (label -1), group g >= 1 is
// the mirrored pair at distance g, label (-1)^(g+1). Pair masses are fixed
// by the outermost-pair rule plus class-conditional variance matching.
struct SlabLayout {
  double slab_width = 0.0;            // w_k = 2B(1-(k-1)gamma)/k
  double pitch = 0.0;                 // center-to-center distance w_k + 2B*gamma
  std::vector<double> group_mass;     // index g, sums to 1 within each class
  std::vector<int> group_label;       // +-1 per group
  int groups = 0;                     // (k+1)/2

  static SlabLayout make(double gamma, double width, int k);
  // [lo, hi) of group g on the positive side (group 0 spans [-hi, hi)).
  std::pair<double, double> interval(int g) const;
  double sample(int label, Rng& rng) const;
};

struct DatasetSpec {
  std::vector<BlockSpec> blocks;  // one per coordinate
  std::optional<std::uint64_t> rotation_seed;
  std::string name = "custom";

  int dim() const { return static_cast<int>(blocks.size()); }
  void validate() const;
};

// Canonical presets from the experiment suite. d is the total dimension.
DatasetSpec preset_lms(int k, int d);                    // linear + (d-1) k-slabs
DatasetSpec preset_lms_hat(int k, int d, double p);      // noisy linear + k-slabs
DatasetSpec preset_ms57(int d);                          // 5-slab + (d-1) 7-slabs
DatasetSpec preset_ms(int k, int d);                     // all k-slabs
DatasetSpec preset_advms57(int d = 20);                  // d/2 5-slabs(g=.05) + d/2 7-slabs(g=.15)
DatasetSpec preset_lsn(int d);                           // singleton linear + 3-slab + noise
// Lookup by name ("lms-5", "lms^7"/"nlms-7", "ms-(5,7)", "ms-5", "advms-(5,7)", "lsn").
DatasetSpec preset_by_name(const std::string& name, int d, double p = 0.1);

struct Dataset {
  Eigen::MatrixXd features;  // n x d, post-rotation when rotation is set
  Eigen::VectorXi labels;    // entries in {-1, +1}
  std::map<std::string, std::vector<int>> groups;  // pre-rotation coordinate sets
  std::optional<Eigen::MatrixXd> rotation;         // orthogonal, x_stored = R x
  DatasetSpec spec;
  std::uint64_t seed = 0;

  int n() const { return static_cast<int>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }
  const std::vector<int>& group(const std::string& name) const;  // throws SpecError
  // Features mapped back to the pre-rotation basis (copy).
  Eigen::MatrixXd pre_rotation_features() const;
};

double sample_block(const BlockSpec& spec, int label, Rng& rng);

Dataset generate_dataset(const DatasetSpec& spec, int n, std::uint64_t seed);

// Replaces the S-block of each row with the S-block of a uniformly permuted
// row (one joint permutation, applied pre-rotation). Labels unchanged.
Dataset randomize_group(const Dataset& data, const std::vector<int>& coords,
                        std::uint64_t seed);
Dataset randomize_group(const Dataset& data, const std::string& group_name,
                        std::uint64_t seed);

// Half the minimum l2 distance between opposite-label samples, optionally
// restricted to a coordinate subset (pre-rotation basis).
double estimate_margin(const DatasetSpec& spec, int n, std::uint64_t seed);
double estimate_margin(const DatasetSpec& spec, int n, std::uint64_t seed,
                       const std::vector<int>& coords);

// File pair <base>.bin / <base>.json; round-trip is bit-exact.
void save_dataset(const Dataset& data, const std::string& base_path);
Dataset load_dataset(const std::string& base_path);

// CRC-32 (IEEE), used by the dataset and checkpoint formats.
std::uint32_t crc32(const void* bytes, std::size_t len,
                    std::uint32_t seed = 0);

}  // namespace sb::datagen
