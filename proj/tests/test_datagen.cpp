#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "doctest.h"
#include "sb/datagen.hpp"
#include "sb/errors.hpp"

using namespace sb;
using namespace sb::datagen;

namespace {

double second_moment(const SlabLayout& lay, int label) {
  // E[x^2 | y] in closed form: group centers plus the in-slab uniform term
  double m = 0.0;
  for (int g = 0; g < lay.groups; ++g) {
    if (lay.group_label[g] != label) continue;
    const double c = g * lay.pitch;
    m += lay.group_mass[g] * (c * c + lay.slab_width * lay.slab_width / 12.0);
  }
  return m;
}

}  // namespace

TEST_CASE("slab layout geometry, k=5 gamma=0.1") {
  const auto lay = SlabLayout::make(0.1, 1.0, 5);
  CHECK(lay.groups == 3);
  CHECK(lay.slab_width == doctest::Approx(0.24).epsilon(1e-12));
  CHECK(lay.pitch == doctest::Approx(0.44).epsilon(1e-12));
  auto [lo0, hi0] = lay.interval(0);
  CHECK(lo0 == doctest::Approx(-0.12));
  CHECK(hi0 == doctest::Approx(0.12));
  auto [lo1, hi1] = lay.interval(1);
  CHECK(lo1 == doctest::Approx(0.32));
  CHECK(hi1 == doctest::Approx(0.56));
  auto [lo2, hi2] = lay.interval(2);
  CHECK(lo2 == doctest::Approx(0.76));
  CHECK(hi2 == doctest::Approx(1.0));  // outermost slab ends at B
  CHECK(lay.group_label[0] == -1);
  CHECK(lay.group_label[1] == 1);
  CHECK(lay.group_label[2] == -1);
}

TEST_CASE("outermost slab ends at B for several k and gamma") {
  for (int k : {3, 5, 7, 9, 11}) {
    for (double gamma : {0.05, 0.1, 0.15 / (k > 7 ? 2.0 : 1.0)}) {
      const double B = 1.7;
      const auto lay = SlabLayout::make(gamma, B, k);
      auto [lo, hi] = lay.interval(lay.groups - 1);
      CHECK(hi == doctest::Approx(B).epsilon(1e-12));
      (void)lo;
    }
  }
}

TEST_CASE("slab pair masses: k=5 and k=7 closed forms") {
  const auto l5 = SlabLayout::make(0.1, 1.0, 5);
  CHECK(l5.group_mass[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(l5.group_mass[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(l5.group_mass[2] == doctest::Approx(0.25).epsilon(1e-12));

  const auto l7 = SlabLayout::make(0.1, 1.0, 7);
  CHECK(l7.group_mass[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(l7.group_mass[1] == doctest::Approx(7.0 / 8.0).epsilon(1e-12));
  CHECK(l7.group_mass[2] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(l7.group_mass[3] == doctest::Approx(1.0 / 8.0).epsilon(1e-12));
}

TEST_CASE("slab class-conditional variances match exactly") {
  for (int k : {5, 7, 9, 11}) {
    const auto lay = SlabLayout::make(0.05, 1.0, k);
    CHECK(second_moment(lay, -1) ==
          doctest::Approx(second_moment(lay, 1)).epsilon(1e-12));
    for (int sgn : {-1, 1}) {
      double total = 0.0;
      for (int g = 0; g < lay.groups; ++g) {
        if (lay.group_label[g] == sgn) total += lay.group_mass[g];
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("slab samples land in a slab of the right label") {
  const auto lay = SlabLayout::make(0.1, 1.0, 5);
  Rng rng(42);
  for (int label : {-1, 1}) {
    for (int i = 0; i < 2000; ++i) {
      const double x = lay.sample(label, rng);
      bool found = false;
      for (int g = 0; g < lay.groups; ++g) {
        auto [lo, hi] = lay.interval(g);
        const double a = std::abs(x);
        const bool inside = (g == 0) ? a < hi : (a >= lo && a < hi);
        if (inside) {
          CHECK(lay.group_label[g] == label);
          found = true;
        }
      }
      CHECK(found);
    }
  }
}

TEST_CASE("slab class variances agree empirically (k=5)") {
  const BlockSpec spec{BlockKind::Slab, 0.1, 1.0, 5, 0.0};
  Rng rng(7);
  const int n = 200000;
  double m_pos = 0.0, m_neg = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = sample_block(spec, 1, rng);
    const double b = sample_block(spec, -1, rng);
    m_pos += a * a;
    m_neg += b * b;
  }
  m_pos /= n;
  m_neg /= n;
  CHECK(std::abs(m_pos - m_neg) / m_pos < 0.02);
  const auto lay = SlabLayout::make(0.1, 1.0, 5);
  CHECK(m_pos == doctest::Approx(second_moment(lay, 1)).epsilon(0.02));
}

TEST_CASE("linear block support") {
  const BlockSpec spec{BlockKind::Linear, 0.1, 1.0, 0, 0.0};
  Rng rng(3);
  for (int label : {-1, 1}) {
    for (int i = 0; i < 5000; ++i) {
      const double x = sample_block(spec, label, rng);
      CHECK(label * x >= 0.1);
      CHECK(label * x <= 1.0);
    }
  }
}

TEST_CASE("noisy linear block: noise fraction and sign accuracy") {
  const double p = 0.1;
  const BlockSpec spec{BlockKind::NoisyLinear, 0.1, 1.0, 0, p};
  Rng rng(12);
  const int n = 100000;
  int in_noise_region = 0, sign_correct = 0;
  for (int i = 0; i < n; ++i) {
    const int y = rng.sign();
    const double x = sample_block(spec, y, rng);
    in_noise_region += std::abs(x) < 0.1;
    sign_correct += (x >= 0 ? 1 : -1) == y;
  }
  const double frac = static_cast<double>(in_noise_region) / n;
  const double sigma = std::sqrt(p * (1 - p) / n);
  CHECK(std::abs(frac - p) < 3 * sigma);
  CHECK(static_cast<double>(sign_correct) / n ==
        doctest::Approx(1.0 - p / 2).epsilon(0.01));
}

TEST_CASE("noisy-linear preset: first-coordinate classifier hits 0.95") {
  const auto spec = preset_lms_hat(7, 5, 0.1);
  const auto data = generate_dataset(spec, 100000, 123);
  int correct = 0;
  for (int i = 0; i < data.n(); ++i) {
    const int pred = data.features(i, 0) >= 0 ? 1 : -1;
    correct += pred == data.labels(i);
  }
  const double acc = static_cast<double>(correct) / data.n();
  CHECK(std::abs(acc - 0.95) < 0.005);
}

TEST_CASE("presets have the advertised shape") {
  CHECK(preset_lms(5, 50).dim() == 50);
  CHECK(preset_lms(5, 50).blocks[0].kind == BlockKind::Linear);
  CHECK(preset_lms(5, 50).blocks[1].kind == BlockKind::Slab);
  CHECK(preset_ms57(50).blocks[0].slabs == 5);
  CHECK(preset_ms57(50).blocks[1].slabs == 7);
  const auto adv = preset_advms57(20);
  CHECK(adv.blocks[9].slabs == 5);
  CHECK(adv.blocks[9].gamma == doctest::Approx(0.05));
  CHECK(adv.blocks[10].slabs == 7);
  CHECK(adv.blocks[10].gamma == doctest::Approx(0.15));
  const auto lsn = preset_lsn(20);
  CHECK(lsn.blocks[0].kind == BlockKind::SingletonLinear);
  CHECK(lsn.blocks[1].kind == BlockKind::SingletonSlab3);
  CHECK(lsn.blocks[2].kind == BlockKind::Gaussian);
  CHECK(preset_by_name("lms-5", 50).name == "lms-5");
  CHECK_THROWS_AS(preset_by_name("bogus", 10), SpecError);
}

TEST_CASE("lsn coordinates follow the stated law") {
  const auto data = generate_dataset(preset_lsn(10), 20000, 9);
  int slab_pos = 0, npos = 0;
  for (int i = 0; i < data.n(); ++i) {
    const int y = data.labels(i);
    CHECK(data.features(i, 0) == static_cast<double>(y));
    const double s = data.features(i, 1);
    if (y == -1) {
      CHECK(s == 0.0);
    } else {
      CHECK(std::abs(s) == 1.0);
      ++npos;
      slab_pos += s > 0;
    }
  }
  // epsilon is a fair coin on the positive class
  CHECK(std::abs(static_cast<double>(slab_pos) / npos - 0.5) < 0.02);
  // noise coordinate is standard normal
  const auto col = data.features.col(5);
  CHECK(std::abs(col.mean()) < 0.03);
  CHECK(col.squaredNorm() / data.n() == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("generation is deterministic in the seed") {
  const auto spec = preset_lms(5, 10);
  const auto a = generate_dataset(spec, 500, 77);
  const auto b = generate_dataset(spec, 500, 77);
  const auto c = generate_dataset(spec, 500, 78);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  CHECK(a.features != c.features);
}

TEST_CASE("rotation is orthogonal and invertible") {
  auto spec = preset_lms(5, 12);
  spec.rotation_seed = 5;
  const auto rot = generate_dataset(spec, 400, 77);
  REQUIRE(rot.rotation.has_value());
  const auto& R = *rot.rotation;
  CHECK((R.transpose() * R - Eigen::MatrixXd::Identity(12, 12))
            .cwiseAbs()
            .maxCoeff() < 1e-10);

  auto flat = spec;
  flat.rotation_seed.reset();
  const auto plain = generate_dataset(flat, 400, 77);
  CHECK((rot.pre_rotation_features() - plain.features).cwiseAbs().maxCoeff() <
        1e-12);
  // rotated coordinates genuinely mix the blocks
  CHECK((rot.features - plain.features).cwiseAbs().maxCoeff() > 0.1);
}

TEST_CASE("randomize_group decouples S from the label") {
  const auto data = generate_dataset(preset_lms(5, 10), 8000, 21);
  const auto rnd = randomize_group(data, "S", 99);
  CHECK(rnd.labels == data.labels);
  // untouched coordinates are bit-identical
  for (int j = 1; j < 10; ++j) {
    CHECK(rnd.features.col(j) == data.features.col(j));
  }
  // column 0 is a permutation of the original values
  std::multiset<double> before, after;
  for (int i = 0; i < data.n(); ++i) {
    before.insert(data.features(i, 0));
    after.insert(rnd.features(i, 0));
  }
  CHECK(before == after);
  // and the first-coordinate classifier drops to chance
  int correct = 0;
  for (int i = 0; i < rnd.n(); ++i) {
    correct += (rnd.features(i, 0) >= 0 ? 1 : -1) == rnd.labels(i);
  }
  CHECK(std::abs(static_cast<double>(correct) / rnd.n() - 0.5) < 0.02);
}

TEST_CASE("randomize_group operates in the pre-rotation basis") {
  auto spec = preset_lms(5, 8);
  spec.rotation_seed = 3;
  const auto data = generate_dataset(spec, 1000, 21);
  const auto rnd = randomize_group(data, "S", 99);
  const auto pre_before = data.pre_rotation_features();
  const auto pre_after = rnd.pre_rotation_features();
  for (int j = 1; j < 8; ++j) {
    CHECK((pre_after.col(j) - pre_before.col(j)).cwiseAbs().maxCoeff() < 1e-9);
  }
  std::multiset<double> before, after;
  for (int i = 0; i < data.n(); ++i) {
    before.insert(std::round(pre_before(i, 0) * 1e9));
    after.insert(std::round(pre_after(i, 0) * 1e9));
  }
  CHECK(before == after);
}

TEST_CASE("randomize_group with empty coords is the identity") {
  const auto data = generate_dataset(preset_lms(5, 6), 100, 1);
  const auto same = randomize_group(data, std::vector<int>{}, 5);
  CHECK(same.features == data.features);
  CHECK_THROWS_AS(randomize_group(data, std::vector<int>{7}, 5), SpecError);
  CHECK_THROWS_AS(randomize_group(data, "nope", 5), SpecError);
}

TEST_CASE("estimate_margin matches brute force on a small sample") {
  DatasetSpec spec;
  for (int i = 0; i < 5; ++i) {
    spec.blocks.push_back({BlockKind::Slab, 0.1, 1.0, 5, 0.0});
  }
  const int n = 400;
  const auto data = generate_dataset(spec, n, 31);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (data.labels(i) != 1 || data.labels(j) != -1) continue;
      best = std::min(best,
                      (data.features.row(i) - data.features.row(j)).norm());
    }
  }
  CHECK(estimate_margin(spec, n, 31) == doctest::Approx(0.5 * best).epsilon(1e-12));
}

TEST_CASE("estimate_margin on a single slab approaches the gap half-width") {
  DatasetSpec spec;
  spec.blocks.push_back({BlockKind::Slab, 0.1, 1.0, 5, 0.0});
  const double m = estimate_margin(spec, 20000, 4);
  CHECK(m >= 0.1);   // opposite slabs are separated by a 0.2 gap
  CHECK(m < 0.102);  // and 20k samples approach its edges
}

TEST_CASE("dataset save/load round-trips bit-exactly") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "sb_datagen_test";
  fs::create_directories(dir);
  auto spec = preset_lms(5, 8);
  spec.rotation_seed = 17;
  const auto data = generate_dataset(spec, 300, 55);
  const std::string base = (dir / "roundtrip").string();
  save_dataset(data, base);
  const auto back = load_dataset(base);
  CHECK(back.features == data.features);
  CHECK(back.labels == data.labels);
  REQUIRE(back.rotation.has_value());
  CHECK(*back.rotation == *data.rotation);
  CHECK(back.seed == data.seed);
  CHECK(back.groups == data.groups);
  CHECK(back.spec.name == data.spec.name);
  CHECK(back.spec.blocks.size() == data.spec.blocks.size());
  fs::remove_all(dir);
}

TEST_CASE("dataset loader rejects corruption, truncation, bad version") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "sb_datagen_test2";
  fs::create_directories(dir);
  const auto data = generate_dataset(preset_lms(5, 4), 50, 5);
  const std::string base = (dir / "d").string();
  save_dataset(data, base);

  // flip one payload byte -> checksum failure
  {
    std::fstream f(base + ".bin",
                   std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(100);
    char c;
    f.seekg(100);
    f.get(c);
    f.seekp(100);
    f.put(static_cast<char>(c ^ 0x5A));
  }
  try {
    load_dataset(base);
    FAIL("expected checksum error");
  } catch (const IoError& e) {
    CHECK(e.code() == IoError::Code::Checksum);
  }

  // truncate -> truncation error
  save_dataset(data, base);
  fs::resize_file(base + ".bin", 64);
  try {
    load_dataset(base);
    FAIL("expected truncation error");
  } catch (const IoError& e) {
    CHECK(e.code() == IoError::Code::Truncated);
  }

  // bump the version field -> version error
  save_dataset(data, base);
  {
    std::ifstream in(base + ".json");
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    const auto pos = text.find("\"format_version\": 1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 19, "\"format_version\": 9");
    std::ofstream out(base + ".json");
    out << text;
  }
  try {
    load_dataset(base);
    FAIL("expected version error");
  } catch (const IoError& e) {
    CHECK(e.code() == IoError::Code::Version);
  }
  fs::remove_all(dir);
}

TEST_CASE("invalid block specs are rejected") {
  BlockSpec b{BlockKind::Slab, 0.3, 1.0, 5, 0.0};  // gamma >= 1/(k-1)
  CHECK_THROWS_AS(b.validate(), SpecError);
  BlockSpec even{BlockKind::Slab, 0.1, 1.0, 4, 0.0};
  CHECK_THROWS_AS(even.validate(), SpecError);
  BlockSpec negw{BlockKind::Linear, 0.1, -1.0, 0, 0.0};
  CHECK_THROWS_AS(negw.validate(), SpecError);
  BlockSpec badp{BlockKind::NoisyLinear, 0.1, 1.0, 0, 1.5};
  CHECK_THROWS_AS(badp.validate(), SpecError);
  DatasetSpec empty;
  CHECK_THROWS_AS(empty.validate(), SpecError);
  Rng rng(1);
  CHECK_THROWS_AS(sample_block({BlockKind::Linear, 0.1, 1.0, 0, 0.0}, 2, rng),
                  SpecError);
}
