#include "sb/datagen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "sb/errors.hpp"

namespace sb::datagen {

using nlohmann::json;

std::string to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::Linear: return "linear";
    case BlockKind::NoisyLinear: return "noisy_linear";
    case BlockKind::Slab: return "slab";
    case BlockKind::NoisySlab: return "noisy_slab";
    case BlockKind::Gaussian: return "gaussian";
    case BlockKind::SingletonLinear: return "singleton_linear";
    case BlockKind::SingletonSlab3: return "singleton_slab3";
  }
  throw SpecError("unknown block kind");
}

BlockKind block_kind_from_string(const std::string& s) {
  if (s == "linear") return BlockKind::Linear;
  if (s == "noisy_linear") return BlockKind::NoisyLinear;
  if (s == "slab") return BlockKind::Slab;
  if (s == "noisy_slab") return BlockKind::NoisySlab;
  if (s == "gaussian") return BlockKind::Gaussian;
  if (s == "singleton_linear") return BlockKind::SingletonLinear;
  if (s == "singleton_slab3") return BlockKind::SingletonSlab3;
  throw SpecError("unknown block kind: " + s);
}

static bool is_slab_kind(BlockKind k) {
  return k == BlockKind::Slab || k == BlockKind::NoisySlab;
}
static bool is_noisy_kind(BlockKind k) {
  return k == BlockKind::NoisyLinear || k == BlockKind::NoisySlab;
}

void BlockSpec::validate() const {
  if (kind == BlockKind::Gaussian || kind == BlockKind::SingletonLinear ||
      kind == BlockKind::SingletonSlab3) {
    return;  // parameter-free
  }
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw SpecError("block gamma must be in (0,1)");
  }
  if (!(width > 0.0)) throw SpecError("block width must be positive");
  if (is_slab_kind(kind)) {
    if (slabs < 3 || slabs % 2 == 0) {
      throw SpecError("slab count must be odd and >= 3");
    }
    const double w = 2.0 * width * (1.0 - (slabs - 1) * gamma) / slabs;
    if (!(w > 0.0)) {
      throw SpecError("slab width nonpositive: gamma must be < 1/(k-1)");
    }
    SlabLayout::make(gamma, width, slabs);  // throws if masses are infeasible
  }
  if (is_noisy_kind(kind)) {
    if (noise < 0.0 || noise > 1.0) throw SpecError("noise p must be in [0,1]");
  }
}

SlabLayout SlabLayout::make(double gamma, double width, int k) {
  if (k < 3 || k % 2 == 0) throw SpecError("slab count must be odd and >= 3");
  SlabLayout lay;
  lay.groups = (k + 1) / 2;
  lay.slab_width = 2.0 * width * (1.0 - (k - 1) * gamma) / k;
  lay.pitch = lay.slab_width + 2.0 * width * gamma;
  lay.group_label.resize(lay.groups);
  lay.group_mass.assign(lay.groups, 0.0);
  for (int g = 0; g < lay.groups; ++g) lay.group_label[g] = (g % 2 == 0) ? -1 : 1;

  const int outer = lay.groups - 1;
  if (k == 3) {
    lay.group_mass = {1.0, 1.0};
    return lay;
  }
  // Outermost pair mass 2^-(k-1)/2 (1/4 for k=5, 1/8 for k=7); the rest of
  // its class shares the remainder equally. The other class's masses solve
  // the class-conditional second-moment matching equation, one free
  // parameter interpolating between a uniform split and all mass on that
  // class's outermost pair.
  const double outer_mass = std::pow(2.0, -(k - 1) / 2);
  std::vector<int> outer_class, other_class;
  for (int g = 0; g < lay.groups; ++g) {
    (lay.group_label[g] == lay.group_label[outer] ? outer_class : other_class)
        .push_back(g);
  }
  double remain = 1.0 - outer_mass;
  for (int g : outer_class) {
    lay.group_mass[g] =
        (g == outer) ? outer_mass
                     : remain / static_cast<double>(outer_class.size() - 1);
  }
  // Second moments about the centers; the in-slab w^2/12 term is common to
  // all groups and cancels in the matching equation.
  auto moment = [&](const std::vector<int>& gs,
                    const std::vector<double>& mass) {
    double m = 0.0;
    for (int g : gs) m += mass[g] * (g * lay.pitch) * (g * lay.pitch);
    return m;
  };
  const double target = moment(outer_class, lay.group_mass);
  std::vector<double> uni(lay.groups, 0.0), conc(lay.groups, 0.0);
  for (int g : other_class) uni[g] = 1.0 / static_cast<double>(other_class.size());
  const double mu = moment(other_class, uni);
  // move mass toward whichever extreme pair the target lies beyond
  conc[target >= mu ? other_class.back() : other_class.front()] = 1.0;
  const double mc = moment(other_class, conc);
  double theta = 0.0;
  if (std::abs(mc - mu) > 1e-15) theta = (target - mu) / (mc - mu);
  if (theta < -1e-12 || theta > 1.0 + 1e-12) {
    throw SpecError("slab layout: variance-matching mass is infeasible");
  }
  theta = std::clamp(theta, 0.0, 1.0);
  for (int g : other_class) {
    lay.group_mass[g] = (1.0 - theta) * uni[g] + theta * conc[g];
  }
  return lay;
}

std::pair<double, double> SlabLayout::interval(int g) const {
  if (g == 0) return {-0.5 * slab_width, 0.5 * slab_width};
  const double lo = 0.5 * slab_width + (g - 1) * slab_width +
                    g * (pitch - slab_width);
  return {lo, lo + slab_width};
}

double SlabLayout::sample(int label, Rng& rng) const {
  // pick a group of this label by mass, then a side, then a position
  double u = rng.uniform();
  int g = -1;
  for (int i = 0; i < groups; ++i) {
    if (group_label[i] != label) continue;
    if (u < group_mass[i]) { g = i; break; }
    u -= group_mass[i];
  }
  if (g < 0) {  // guard against accumulated rounding
    for (int i = groups - 1; i >= 0; --i) {
      if (group_label[i] == label) { g = i; break; }
    }
  }
  auto [lo, hi] = interval(g);
  const double x = rng.uniform(lo, hi);
  if (g == 0) return x;
  return rng.sign() * x;
}

void DatasetSpec::validate() const {
  if (blocks.empty()) throw SpecError("dataset spec has no blocks");
  for (const auto& b : blocks) b.validate();
}

double sample_block(const BlockSpec& spec, int label, Rng& rng) {
  spec.validate();
  if (label != 1 && label != -1) throw SpecError("label must be +-1");
  const double y = static_cast<double>(label);
  switch (spec.kind) {
    case BlockKind::Linear:
      return y * (spec.width * spec.gamma +
                  (spec.width - spec.width * spec.gamma) * rng.uniform());
    case BlockKind::NoisyLinear: {
      if (rng.uniform() < spec.noise) {
        return rng.uniform(-spec.width * spec.gamma, spec.width * spec.gamma);
      }
      return y * (spec.width * spec.gamma +
                  (spec.width - spec.width * spec.gamma) * rng.uniform());
    }
    case BlockKind::Slab: {
      const auto lay = SlabLayout::make(spec.gamma, spec.width, spec.slabs);
      return lay.sample(label, rng);
    }
    case BlockKind::NoisySlab: {
      const auto lay = SlabLayout::make(spec.gamma, spec.width, spec.slabs);
      if (rng.uniform() < spec.noise) {
        // noise lands uniformly in the innermost gap, either side
        const double lo = 0.5 * lay.slab_width;
        const double hi = lo + 2.0 * spec.width * spec.gamma;
        return rng.sign() * rng.uniform(lo, hi);
      }
      return lay.sample(label, rng);
    }
    case BlockKind::Gaussian:
      return rng.normal();
    case BlockKind::SingletonLinear:
      return y;
    case BlockKind::SingletonSlab3:
      return (label == 1) ? static_cast<double>(rng.sign()) : 0.0;
  }
  throw SpecError("unreachable block kind");
}

DatasetSpec preset_lms(int k, int d) {
  DatasetSpec spec;
  spec.name = "lms-" + std::to_string(k);
  spec.blocks.push_back({BlockKind::Linear, 0.1, 1.0, 0, 0.0});
  for (int i = 1; i < d; ++i) {
    spec.blocks.push_back({BlockKind::Slab, 0.1, 1.0, k, 0.0});
  }
  return spec;
}

DatasetSpec preset_lms_hat(int k, int d, double p) {
  DatasetSpec spec;
  spec.name = "lms^" + std::to_string(k);
  spec.blocks.push_back({BlockKind::NoisyLinear, 0.1, 1.0, 0, p});
  for (int i = 1; i < d; ++i) {
    spec.blocks.push_back({BlockKind::Slab, 0.1, 1.0, k, 0.0});
  }
  return spec;
}

DatasetSpec preset_ms57(int d) {
  DatasetSpec spec;
  spec.name = "ms-(5,7)";
  spec.blocks.push_back({BlockKind::Slab, 0.1, 1.0, 5, 0.0});
  for (int i = 1; i < d; ++i) {
    spec.blocks.push_back({BlockKind::Slab, 0.1, 1.0, 7, 0.0});
  }
  return spec;
}

DatasetSpec preset_ms(int k, int d) {
  DatasetSpec spec;
  spec.name = "ms-" + std::to_string(k);
  for (int i = 0; i < d; ++i) {
    spec.blocks.push_back({BlockKind::Slab, 0.1, 1.0, k, 0.0});
  }
  return spec;
}

DatasetSpec preset_advms57(int d) {
  if (d % 2 != 0) throw SpecError("advms-(5,7) needs an even dimension");
  DatasetSpec spec;
  spec.name = "advms-(5,7)";
  for (int i = 0; i < d / 2; ++i) {
    spec.blocks.push_back({BlockKind::Slab, 0.05, 1.0, 5, 0.0});
  }
  for (int i = 0; i < d / 2; ++i) {
    spec.blocks.push_back({BlockKind::Slab, 0.15, 1.0, 7, 0.0});
  }
  return spec;
}

DatasetSpec preset_lsn(int d) {
  if (d < 3) throw SpecError("lsn needs d >= 3");
  DatasetSpec spec;
  spec.name = "lsn";
  spec.blocks.push_back({BlockKind::SingletonLinear, 0.1, 1.0, 0, 0.0});
  spec.blocks.push_back({BlockKind::SingletonSlab3, 0.1, 1.0, 0, 0.0});
  for (int i = 2; i < d; ++i) {
    spec.blocks.push_back({BlockKind::Gaussian, 0.1, 1.0, 0, 0.0});
  }
  return spec;
}

DatasetSpec preset_by_name(const std::string& name, int d, double p) {
  auto starts = [&](const std::string& pre) {
    return name.rfind(pre, 0) == 0;
  };
  if (name == "lms-5") return preset_lms(5, d);
  if (name == "lms-7") return preset_lms(7, d);
  if (name == "lms^5" || name == "nlms-5") return preset_lms_hat(5, d, p);
  if (name == "lms^7" || name == "nlms-7") return preset_lms_hat(7, d, p);
  if (name == "ms-(5,7)" || name == "ms57") return preset_ms57(d);
  if (name == "ms-5") return preset_ms(5, d);
  if (name == "ms-7") return preset_ms(7, d);
  if (name == "advms-(5,7)" || name == "advms57") return preset_advms57(d);
  if (name == "lsn") return preset_lsn(d);
  (void)starts;
  throw SpecError("unknown preset: " + name);
}

const std::vector<int>& Dataset::group(const std::string& name) const {
  auto it = groups.find(name);
  if (it == groups.end()) throw SpecError("unknown feature group: " + name);
  return it->second;
}

Eigen::MatrixXd Dataset::pre_rotation_features() const {
  if (!rotation) return features;
  // rows are x' = R x, so x = R^T x'  =>  X_pre = X * R
  return features * (*rotation);
}

static Eigen::MatrixXd random_rotation(int d, std::uint64_t seed) {
  Rng rng = Rng::derived(seed, 0xA11);
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  return q;
}

// Assigns the canonical S / S^c groups for the known presets.
static std::map<std::string, std::vector<int>> make_groups(
    const DatasetSpec& spec) {
  const int d = spec.dim();
  std::map<std::string, std::vector<int>> groups;
  std::vector<int> all(d);
  std::iota(all.begin(), all.end(), 0);
  groups["all"] = all;

  auto range = [](int lo, int hi) {
    std::vector<int> v;
    for (int i = lo; i < hi; ++i) v.push_back(i);
    return v;
  };
  const BlockKind first = spec.blocks.front().kind;
  if (spec.name == "advms-(5,7)") {
    groups["S"] = range(0, d / 2);
    groups["Sc"] = range(d / 2, d);
  } else if (spec.name == "lsn") {
    groups["S"] = {0};
    groups["slab"] = {1};
    groups["Sc"] = range(1, d);
    groups["noise"] = range(2, d);
  } else if (first == BlockKind::Linear || first == BlockKind::NoisyLinear ||
             spec.name == "ms-(5,7)") {
    groups["S"] = {0};
    groups["Sc"] = range(1, d);
  }
  return groups;
}

Dataset generate_dataset(const DatasetSpec& spec, int n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw SpecError("need n >= 1");
  const int d = spec.dim();

  Dataset data;
  data.spec = spec;
  data.seed = seed;
  data.features.resize(n, d);
  data.labels.resize(n);
  data.groups = make_groups(spec);

  Rng rng = Rng::derived(seed, 1);
  for (int i = 0; i < n; ++i) {
    const int y = rng.sign();
    data.labels(i) = y;
    for (int j = 0; j < d; ++j) {
      data.features(i, j) = sample_block(spec.blocks[j], y, rng);
    }
  }
  if (spec.rotation_seed) {
    data.rotation = random_rotation(d, *spec.rotation_seed);
    data.features = data.features * data.rotation->transpose();
  }
  return data;
}

Dataset randomize_group(const Dataset& data, const std::vector<int>& coords,
                        std::uint64_t seed) {
  if (data.n() < 1) throw SpecError("randomize_group: empty dataset");
  Dataset out = data;
  if (coords.empty()) return out;  // bit-identical copy
  if (data.n() < 2) throw SpecError("randomize_group: need n >= 2");
  for (int c : coords) {
    if (c < 0 || c >= data.dim()) {
      throw SpecError("randomize_group: coordinate out of range");
    }
  }
  Eigen::MatrixXd pre = data.pre_rotation_features();
  std::vector<int> perm(data.n());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = Rng::derived(seed, 2);
  for (int i = data.n() - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[i], perm[j]);
  }
  Eigen::MatrixXd shuffled = pre;
  for (int i = 0; i < data.n(); ++i) {
    for (int c : coords) shuffled(i, c) = pre(perm[i], c);
  }
  out.features =
      data.rotation ? Eigen::MatrixXd(shuffled * data.rotation->transpose())
                    : shuffled;
  return out;
}

Dataset randomize_group(const Dataset& data, const std::string& group_name,
                        std::uint64_t seed) {
  return randomize_group(data, data.group(group_name), seed);
}

// ---- bichromatic closest pair (small KD-tree, global-best pruning) ----

namespace {

struct KdTree {
  const Eigen::MatrixXd& pts;  // rows
  std::vector<int> idx;
  struct Node {
    int lo, hi, dim = -1;
    double split = 0.0;
    int left = -1, right = -1;
  };
  std::vector<Node> nodes;

  explicit KdTree(const Eigen::MatrixXd& p) : pts(p) {
    idx.resize(p.rows());
    std::iota(idx.begin(), idx.end(), 0);
    if (!idx.empty()) build(0, static_cast<int>(idx.size()));
  }

  int build(int lo, int hi) {
    const int me = static_cast<int>(nodes.size());
    nodes.push_back({lo, hi});
    if (hi - lo <= 16) return me;
    // split on the widest dimension of this subset
    int dim = 0;
    double best_spread = -1.0;
    for (int d = 0; d < pts.cols(); ++d) {
      double mn = std::numeric_limits<double>::infinity(), mx = -mn;
      for (int i = lo; i < hi; ++i) {
        const double v = pts(idx[i], d);
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
      if (mx - mn > best_spread) { best_spread = mx - mn; dim = d; }
    }
    const int mid = (lo + hi) / 2;
    std::nth_element(idx.begin() + lo, idx.begin() + mid, idx.begin() + hi,
                     [&](int a, int b) { return pts(a, dim) < pts(b, dim); });
    nodes[me].dim = dim;
    nodes[me].split = pts(idx[mid], dim);
    nodes[me].left = build(lo, mid);
    nodes[me].right = build(mid, hi);
    return me;
  }

  void nearest(const Eigen::RowVectorXd& q, int node, double& best2) const {
    const Node& nd = nodes[node];
    if (nd.dim < 0) {
      for (int i = nd.lo; i < nd.hi; ++i) {
        const double d2 = (pts.row(idx[i]) - q).squaredNorm();
        best2 = std::min(best2, d2);
      }
      return;
    }
    const double diff = q(nd.dim) - nd.split;
    const int near = diff < 0 ? nd.left : nd.right;
    const int far = diff < 0 ? nd.right : nd.left;
    nearest(q, near, best2);
    if (diff * diff < best2) nearest(q, far, best2);
  }
};

}  // namespace

double estimate_margin(const DatasetSpec& spec, int n, std::uint64_t seed) {
  std::vector<int> coords(spec.dim());
  std::iota(coords.begin(), coords.end(), 0);
  return estimate_margin(spec, n, seed, coords);
}

double estimate_margin(const DatasetSpec& spec, int n, std::uint64_t seed,
                       const std::vector<int>& coords) {
  if (n < 2) throw SpecError("estimate_margin: need n >= 2");
  DatasetSpec flat = spec;
  flat.rotation_seed.reset();  // l2 distances are rotation invariant
  const Dataset data = generate_dataset(flat, n, seed);

  int npos = 0;
  for (int i = 0; i < n; ++i) npos += data.labels(i) == 1;
  if (npos == 0 || npos == n) {
    throw SpecError("estimate_margin: sample contains a single class");
  }
  Eigen::MatrixXd pos(npos, static_cast<int>(coords.size()));
  Eigen::MatrixXd neg(n - npos, static_cast<int>(coords.size()));
  int ip = 0, in = 0;
  for (int i = 0; i < n; ++i) {
    auto& dst = data.labels(i) == 1 ? pos : neg;
    int& row = data.labels(i) == 1 ? ip : in;
    for (std::size_t c = 0; c < coords.size(); ++c) {
      dst(row, static_cast<int>(c)) = data.features(i, coords[c]);
    }
    ++row;
  }
  KdTree tree(pos);
  double best2 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < neg.rows(); ++i) {
    tree.nearest(neg.row(i), 0, best2);
  }
  return 0.5 * std::sqrt(best2);
}

// ---- persistence ----

std::uint32_t crc32(const void* bytes, std::size_t len, std::uint32_t seed) {
  static std::array<std::uint32_t, 256> table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) {
        c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      }
      t[i] = c;
    }
    return t;
  }();
  const auto* p = static_cast<const unsigned char*>(bytes);
  std::uint32_t c = seed ^ 0xFFFFFFFFu;
  for (std::size_t i = 0; i < len; ++i) {
    c = table[(c ^ p[i]) & 0xFF] ^ (c >> 8);
  }
  return c ^ 0xFFFFFFFFu;
}

static constexpr int kDatasetFormatVersion = 1;

static json spec_to_json(const DatasetSpec& spec) {
  json blocks = json::array();
  for (const auto& b : spec.blocks) {
    blocks.push_back({{"kind", to_string(b.kind)},
                      {"gamma", b.gamma},
                      {"width", b.width},
                      {"slabs", b.slabs},
                      {"noise", b.noise}});
  }
  json j = {{"name", spec.name}, {"blocks", blocks}};
  if (spec.rotation_seed) j["rotation_seed"] = *spec.rotation_seed;
  return j;
}

static DatasetSpec spec_from_json(const json& j) {
  DatasetSpec spec;
  spec.name = j.at("name").get<std::string>();
  for (const auto& b : j.at("blocks")) {
    BlockSpec bs;
    bs.kind = block_kind_from_string(b.at("kind").get<std::string>());
    bs.gamma = b.at("gamma").get<double>();
    bs.width = b.at("width").get<double>();
    bs.slabs = b.at("slabs").get<int>();
    bs.noise = b.at("noise").get<double>();
    spec.blocks.push_back(bs);
  }
  if (j.contains("rotation_seed")) {
    spec.rotation_seed = j.at("rotation_seed").get<std::uint64_t>();
  }
  return spec;
}

void save_dataset(const Dataset& data, const std::string& base) {
  const int n = data.n(), d = data.dim();
  std::string bin;
  bin.reserve(sizeof(double) * static_cast<std::size_t>(n) * d + n);
  auto append_doubles = [&](const Eigen::MatrixXd& m) {
    for (int i = 0; i < m.rows(); ++i) {
      for (int j = 0; j < m.cols(); ++j) {
        double v = m(i, j);
        bin.append(reinterpret_cast<const char*>(&v), sizeof(double));
      }
    }
  };
  append_doubles(data.features);
  for (int i = 0; i < n; ++i) {
    const char y = static_cast<char>(data.labels(i));
    bin.push_back(y);
  }
  if (data.rotation) append_doubles(*data.rotation);

  json groups;
  for (const auto& [name, coords] : data.groups) groups[name] = coords;
  json header = {{"format_version", kDatasetFormatVersion},
                 {"n", n},
                 {"d", d},
                 {"seed", data.seed},
                 {"has_rotation", data.rotation.has_value()},
                 {"spec", spec_to_json(data.spec)},
                 {"groups", groups},
                 {"checksum", crc32(bin.data(), bin.size())}};

  std::ofstream fb(base + ".bin", std::ios::binary);
  if (!fb) throw IoError(IoError::Code::Generic, "cannot write " + base + ".bin");
  fb.write(bin.data(), static_cast<std::streamsize>(bin.size()));
  if (!fb) throw IoError(IoError::Code::Generic, "short write to " + base + ".bin");
  std::ofstream fj(base + ".json");
  if (!fj) throw IoError(IoError::Code::Generic, "cannot write " + base + ".json");
  fj << header.dump(2) << "\n";
}

Dataset load_dataset(const std::string& base) {
  std::ifstream fj(base + ".json");
  if (!fj) throw IoError(IoError::Code::Generic, "cannot read " + base + ".json");
  json header;
  try {
    fj >> header;
  } catch (const json::exception& e) {
    throw IoError(IoError::Code::Generic,
                  std::string("bad dataset header: ") + e.what());
  }
  const int version = header.at("format_version").get<int>();
  if (version != kDatasetFormatVersion) {
    throw IoError(IoError::Code::Version,
                  "dataset format version " + std::to_string(version) +
                      ", this build reads version " +
                      std::to_string(kDatasetFormatVersion));
  }
  const int n = header.at("n").get<int>();
  const int d = header.at("d").get<int>();
  const bool has_rotation = header.at("has_rotation").get<bool>();

  std::ifstream fb(base + ".bin", std::ios::binary);
  if (!fb) throw IoError(IoError::Code::Generic, "cannot read " + base + ".bin");
  std::string bin((std::istreambuf_iterator<char>(fb)),
                  std::istreambuf_iterator<char>());
  const std::size_t expect = sizeof(double) * static_cast<std::size_t>(n) * d +
                             static_cast<std::size_t>(n) +
                             (has_rotation ? sizeof(double) * d * d : 0u);
  if (bin.size() != expect) {
    throw IoError(IoError::Code::Truncated,
                  base + ".bin: expected " + std::to_string(expect) +
                      " bytes, got " + std::to_string(bin.size()));
  }
  const std::uint32_t stored = header.at("checksum").get<std::uint32_t>();
  const std::uint32_t actual = crc32(bin.data(), bin.size());
  if (stored != actual) {
    throw IoError(IoError::Code::Checksum, base + ".bin: checksum mismatch");
  }

  Dataset data;
  data.spec = spec_from_json(header.at("spec"));
  data.seed = header.at("seed").get<std::uint64_t>();
  data.features.resize(n, d);
  data.labels.resize(n);
  const char* p = bin.data();
  auto read_doubles = [&](Eigen::MatrixXd& m) {
    for (int i = 0; i < m.rows(); ++i) {
      for (int j = 0; j < m.cols(); ++j) {
        double v;
        std::memcpy(&v, p, sizeof(double));
        p += sizeof(double);
        m(i, j) = v;
      }
    }
  };
  read_doubles(data.features);
  for (int i = 0; i < n; ++i) data.labels(i) = static_cast<signed char>(*p++);
  if (has_rotation) {
    data.rotation.emplace(d, d);
    read_doubles(*data.rotation);
  }
  for (const auto& [name, coords] : header.at("groups").items()) {
    data.groups[name] = coords.get<std::vector<int>>();
  }
  return data;
}

}  // namespace sb::datagen
