#include "sb/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "sb/errors.hpp"

namespace sb::mlp {

using nlohmann::json;

namespace {
constexpr double kLeakySlope = 0.01;
constexpr double kPreluInit = 0.25;
constexpr double kDivergenceLoss = 1e6;
}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::LeakyReLU: return "leaky_relu";
    case Activation::PReLU: return "prelu";
    case Activation::Tanh: return "tanh";
  }
  throw SpecError("unknown activation");
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "leaky_relu" || s == "leaky") return Activation::LeakyReLU;
  if (s == "prelu") return Activation::PReLU;
  if (s == "tanh") return Activation::Tanh;
  throw SpecError("unknown activation: " + s);
}

std::string to_string(Loss l) {
  return l == Loss::Hinge ? "hinge" : "logistic";
}

Loss loss_from_string(const std::string& s) {
  if (s == "hinge") return Loss::Hinge;
  if (s == "logistic") return Loss::Logistic;
  throw SpecError("unknown loss: " + s);
}

void InitSpec::validate() const {
  if (!(scale > 0.0)) throw SpecError("init scale must be positive");
  if (scheme == InitScheme::Custom && sigma2 < 0.0) {
    throw SpecError("custom init variance must be nonnegative");
  }
}

void MlpModel::check_shapes() const {
  if (W.empty() || W.size() != b.size()) throw SpecError("malformed model");
  for (std::size_t l = 0; l < W.size(); ++l) {
    if (W[l].rows() != b[l].size()) throw SpecError("bias/weight mismatch");
    if (l + 1 < W.size() && W[l + 1].cols() != W[l].rows()) {
      throw SpecError("layer shapes do not chain");
    }
  }
  if (W.back().rows() != 1) throw SpecError("output must be scalar");
  if (activation == Activation::PReLU &&
      prelu.size() != W.size() - 1) {
    throw SpecError("one prelu slope per hidden layer required");
  }
}

MlpModel init_model(int d, int width, int depth, Activation act,
                    const InitSpec& init, bool freeze_output,
                    std::uint64_t seed) {
  init.validate();
  if (d < 1 || width < 1 || depth < 1) throw SpecError("bad architecture");
  if (freeze_output && width % 2 != 0) {
    throw SpecError("frozen output needs an even width");
  }
  MlpModel m;
  m.activation = act;
  m.v_frozen = freeze_output;
  m.width = width;
  m.depth = depth;

  Rng rng = Rng::derived(seed, 31);
  auto sigma = [&](int fan_in, int fan_out) {
    switch (init.scheme) {
      case InitScheme::Kaiming: return std::sqrt(2.0 / fan_in);
      case InitScheme::Xavier: return std::sqrt(2.0 / (fan_in + fan_out));
      case InitScheme::TheoremGaussian: {
        const double ld = std::log(static_cast<double>(d));
        return std::sqrt(1.0 / (static_cast<double>(d) * width * ld * ld));
      }
      case InitScheme::Custom: return std::sqrt(init.sigma2);
    }
    throw SpecError("unknown init scheme");
  };

  int fan_in = d;
  for (int l = 0; l < depth; ++l) {
    const double s = init.scale * sigma(fan_in, width);
    Eigen::MatrixXd W(width, fan_in);
    for (int i = 0; i < W.rows(); ++i) {
      for (int j = 0; j < W.cols(); ++j) W(i, j) = s * rng.normal();
    }
    m.W.push_back(std::move(W));
    m.b.push_back(Eigen::VectorXd::Zero(width));
    fan_in = width;
  }
  Eigen::MatrixXd v(1, width);
  if (freeze_output) {
    const double a = 1.0 / std::sqrt(static_cast<double>(width));
    std::vector<double> vals(width);
    for (int j = 0; j < width; ++j) vals[j] = (j < width / 2) ? a : -a;
    for (int i = width - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.below(i + 1));
      std::swap(vals[i], vals[j]);
    }
    for (int j = 0; j < width; ++j) v(0, j) = vals[j];
  } else {
    const double s = init.scale * sigma(width, 1);
    for (int j = 0; j < width; ++j) v(0, j) = s * rng.normal();
  }
  m.W.push_back(std::move(v));
  m.b.push_back(Eigen::VectorXd::Zero(1));
  if (act == Activation::PReLU) m.prelu.assign(depth, kPreluInit);
  m.check_shapes();
  return m;
}

namespace {

double act_slope(const MlpModel& m, int layer) {
  switch (m.activation) {
    case Activation::ReLU: return 0.0;
    case Activation::LeakyReLU: return kLeakySlope;
    case Activation::PReLU: return m.prelu[layer];
    case Activation::Tanh: return 0.0;  // unused
  }
  throw SpecError("unknown activation");
}

// pre-activation z -> activation value
Eigen::MatrixXd apply_act(const MlpModel& m, int layer,
                          const Eigen::MatrixXd& z) {
  if (m.activation == Activation::Tanh) return z.array().tanh();
  const double a = act_slope(m, layer);
  return z.unaryExpr([a](double v) { return v >= 0.0 ? v : a * v; });
}

void check_finite(const Eigen::MatrixXd& X) {
  if (!X.allFinite()) throw SpecError("non-finite values in input batch");
}

}  // namespace

Eigen::VectorXd forward_batch(const MlpModel& model, const Eigen::MatrixXd& X) {
  model.check_shapes();
  if (X.cols() != model.input_dim()) {
    throw SpecError("input dimension mismatch");
  }
  Eigen::MatrixXd h = X.transpose();  // columns are examples
  for (int l = 0; l + 1 < model.layers(); ++l) {
    Eigen::MatrixXd z = (model.W[l] * h).colwise() + model.b[l];
    h = apply_act(model, l, z);
  }
  const auto& v = model.W.back();
  return (v * h).transpose().col(0).array() + model.b.back()(0);
}

double forward(const MlpModel& model, const Eigen::VectorXd& x) {
  return forward_batch(model, x.transpose())(0);
}

std::pair<double, Gradients> loss_and_grad(
    const MlpModel& model, const Eigen::MatrixXd& X, const Eigen::VectorXi& y,
    Loss loss, const std::vector<Eigen::MatrixXd>* dropout_masks) {
  model.check_shapes();
  if (X.rows() == 0) throw SpecError("empty batch");
  if (X.rows() != y.size()) throw SpecError("feature/label count mismatch");
  if (X.cols() != model.input_dim()) throw SpecError("input dimension mismatch");
  check_finite(X);
  const int n = static_cast<int>(X.rows());
  const int L = model.layers();

  // forward pass keeping pre-activations and activations (columns = examples)
  std::vector<Eigen::MatrixXd> zs(L - 1), hs(L);
  hs[0] = X.transpose();
  for (int l = 0; l + 1 < L; ++l) {
    zs[l] = (model.W[l] * hs[l]).colwise() + model.b[l];
    Eigen::MatrixXd h = apply_act(model, l, zs[l]);
    if (dropout_masks) h = h.cwiseProduct((*dropout_masks)[l]);
    hs[l + 1] = std::move(h);
  }
  Eigen::RowVectorXd s =
      (model.W.back() * hs[L - 1]).row(0).array() + model.b.back()(0);

  double total = 0.0;
  Eigen::RowVectorXd dscore(n);  // dL/ds per example, already divided by n
  for (int i = 0; i < n; ++i) {
    const double yi = y(i);
    const double m = yi * s(i);
    if (loss == Loss::Hinge) {
      total += std::max(0.0, 1.0 - m);
      dscore(i) = (m <= 1.0) ? -yi / n : 0.0;
    } else {
      // stable log(1 + exp(-m))
      total += m > 0 ? std::log1p(std::exp(-m))
                     : -m + std::log1p(std::exp(m));
      const double sig = 1.0 / (1.0 + std::exp(m));
      dscore(i) = -yi * sig / n;
    }
  }
  const double loss_value = total / n;

  Gradients g;
  g.W.resize(L);
  g.b.resize(L);
  g.prelu.assign(model.prelu.size(), 0.0);

  Eigen::MatrixXd delta = dscore;  // dL/dz for the current layer, rows = units
  if (model.v_frozen) {
    g.W[L - 1] = Eigen::MatrixXd::Zero(1, model.W[L - 1].cols());
    g.b[L - 1] = Eigen::VectorXd::Zero(1);
  } else {
    g.W[L - 1] = delta * hs[L - 1].transpose();
    g.b[L - 1] = delta.rowwise().sum();
  }
  for (int l = L - 2; l >= 0; --l) {
    Eigen::MatrixXd dh = model.W[l + 1].transpose() * delta;
    if (dropout_masks) dh = dh.cwiseProduct((*dropout_masks)[l]);
    Eigen::MatrixXd dz;
    if (model.activation == Activation::Tanh) {
      const Eigen::MatrixXd t = zs[l].array().tanh();
      dz = dh.cwiseProduct((1.0 - t.array().square()).matrix());
    } else {
      const double a = act_slope(model, l);
      dz = dh.cwiseProduct(zs[l].unaryExpr(
          [a](double v) { return v >= 0.0 ? 1.0 : a; }));
      if (model.activation == Activation::PReLU) {
        // slope gradient collects z over the negative side
        g.prelu[l] = (dh.array() * zs[l].array() *
                      (zs[l].array() < 0.0).cast<double>())
                         .sum();
      }
    }
    g.W[l] = dz * hs[l].transpose();
    g.b[l] = dz.rowwise().sum();
    delta = std::move(dz);
  }
  return {loss_value, std::move(g)};
}

void OptimizerSpec::validate() const {
  if (!(lr > 0.0)) throw SpecError("learning rate must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw SpecError("bad momentum");
  if (weight_decay < 0.0) throw SpecError("bad weight decay");
}

void TrainConfig::validate() const {
  opt.validate();
  if (batch_size < 1) throw SpecError("batch size must be >= 1");
  if (epochs < 0) throw SpecError("bad epoch count");
  if (dropout_p < 0.0 || dropout_p >= 1.0) {
    throw SpecError("dropout probability must be in [0,1)");
  }
}

namespace {

// Flat per-parameter optimizer state mirroring the model's shapes.
struct OptState {
  std::vector<Eigen::MatrixXd> mW, vW;
  std::vector<Eigen::VectorXd> mb, vb;
  std::vector<double> mp, vp;
  int t = 0;

  explicit OptState(const MlpModel& m) {
    for (const auto& W : m.W) {
      mW.push_back(Eigen::MatrixXd::Zero(W.rows(), W.cols()));
      vW.push_back(Eigen::MatrixXd::Zero(W.rows(), W.cols()));
    }
    for (const auto& b : m.b) {
      mb.push_back(Eigen::VectorXd::Zero(b.size()));
      vb.push_back(Eigen::VectorXd::Zero(b.size()));
    }
    mp.assign(m.prelu.size(), 0.0);
    vp.assign(m.prelu.size(), 0.0);
  }
};

template <typename P, typename G, typename M, typename V>
void step_param(const OptimizerSpec& o, int t, P&& p, const G& grad, M&& m,
                V&& v, bool decay) {
  G g = grad;
  if (decay && o.weight_decay > 0.0) g += o.weight_decay * p;
  switch (o.kind) {
    case OptimizerKind::SGD:
      if (o.momentum > 0.0) {
        m = o.momentum * m + g;
        p -= o.lr * m;
      } else {
        p -= o.lr * g;
      }
      break;
    case OptimizerKind::Adam: {
      m = o.beta1 * m + (1.0 - o.beta1) * g;
      v = o.beta2 * v + (1.0 - o.beta2) * g.cwiseProduct(g);
      const double bc1 = 1.0 - std::pow(o.beta1, t);
      const double bc2 = 1.0 - std::pow(o.beta2, t);
      p -= (o.lr / bc1) * m.cwiseQuotient(
               ((v / bc2).cwiseSqrt().array() + o.eps).matrix());
      break;
    }
    case OptimizerKind::RMSProp:
      v = o.alpha * v + (1.0 - o.alpha) * g.cwiseProduct(g);
      p -= o.lr * g.cwiseQuotient((v.cwiseSqrt().array() + o.eps).matrix());
      break;
  }
}

void step_scalar(const OptimizerSpec& o, int t, double& p, double grad,
                 double& m, double& v) {
  switch (o.kind) {
    case OptimizerKind::SGD:
      if (o.momentum > 0.0) {
        m = o.momentum * m + grad;
        p -= o.lr * m;
      } else {
        p -= o.lr * grad;
      }
      break;
    case OptimizerKind::Adam: {
      m = o.beta1 * m + (1.0 - o.beta1) * grad;
      v = o.beta2 * v + (1.0 - o.beta2) * grad * grad;
      const double bc1 = 1.0 - std::pow(o.beta1, t);
      const double bc2 = 1.0 - std::pow(o.beta2, t);
      p -= (o.lr / bc1) * m / (std::sqrt(v / bc2) + o.eps);
      break;
    }
    case OptimizerKind::RMSProp:
      v = o.alpha * v + (1.0 - o.alpha) * grad * grad;
      p -= o.lr * grad / (std::sqrt(v) + o.eps);
      break;
  }
}

}  // namespace

Eigen::MatrixXd input_gradient(const MlpModel& model, const Eigen::MatrixXd& X,
                               const Eigen::VectorXi& y, Loss loss) {
  model.check_shapes();
  if (X.rows() == 0) throw SpecError("empty batch");
  if (X.rows() != y.size()) throw SpecError("feature/label count mismatch");
  if (X.cols() != model.input_dim()) throw SpecError("input dimension mismatch");
  check_finite(X);
  const int n = static_cast<int>(X.rows());
  const int L = model.layers();

  std::vector<Eigen::MatrixXd> zs(L - 1), hs(L);
  hs[0] = X.transpose();
  for (int l = 0; l + 1 < L; ++l) {
    zs[l] = (model.W[l] * hs[l]).colwise() + model.b[l];
    hs[l + 1] = apply_act(model, l, zs[l]);
  }
  Eigen::RowVectorXd s =
      (model.W.back() * hs[L - 1]).row(0).array() + model.b.back()(0);
  if (!s.allFinite()) throw SpecError("non-finite model output");

  Eigen::RowVectorXd dscore(n);
  for (int i = 0; i < n; ++i) {
    const double yi = y(i);
    const double m = yi * s(i);
    if (loss == Loss::Hinge) {
      dscore(i) = (m <= 1.0) ? -yi : 0.0;
    } else {
      dscore(i) = -yi / (1.0 + std::exp(m));
    }
  }
  Eigen::MatrixXd delta = dscore;
  for (int l = L - 2; l >= 0; --l) {
    Eigen::MatrixXd dh = model.W[l + 1].transpose() * delta;
    if (model.activation == Activation::Tanh) {
      const Eigen::MatrixXd t = zs[l].array().tanh();
      delta = dh.cwiseProduct((1.0 - t.array().square()).matrix());
    } else {
      const double a = act_slope(model, l);
      delta = dh.cwiseProduct(
          zs[l].unaryExpr([a](double v) { return v >= 0.0 ? 1.0 : a; }));
    }
  }
  return (model.W[0].transpose() * delta).transpose();
}

std::pair<MlpModel, TrainHistory> train(const MlpModel& start,
                                        const datagen::Dataset& data,
                                        const TrainConfig& cfg) {
  return train_transformed(start, data, cfg, nullptr);
}

std::pair<MlpModel, TrainHistory> train_transformed(
    const MlpModel& start, const datagen::Dataset& data,
    const TrainConfig& cfg, const BatchTransform& transform) {
  cfg.validate();
  start.check_shapes();
  if (data.n() < 1) throw SpecError("empty training set");
  if (data.dim() != start.input_dim()) {
    throw SpecError("model/data dimension mismatch");
  }
  MlpModel model = start;
  TrainHistory hist;
  OptState state(model);
  Rng rng = Rng::derived(cfg.seed, 47);

  const int n = data.n();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  const bool track = model.depth == 1 && !cfg.track_groups.empty();
  auto record_norms = [&] {
    if (!track) return;
    for (const auto& [name, coords] : cfg.track_groups) {
      double sq = 0.0;
      for (int c : coords) sq += model.W[0].col(c).squaredNorm();
      hist.group_norms[name].push_back(std::sqrt(sq));
    }
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.below(i + 1));
      std::swap(order[i], order[j]);
    }
    double epoch_total = 0.0;
    int epoch_batches = 0;
    for (int lo = 0; lo < n; lo += cfg.batch_size) {
      if (cfg.max_steps && hist.steps >= *cfg.max_steps) break;
      const int bs = std::min(cfg.batch_size, n - lo);
      Eigen::MatrixXd X(bs, data.dim());
      Eigen::VectorXi y(bs);
      for (int i = 0; i < bs; ++i) {
        X.row(i) = data.features.row(order[lo + i]);
        y(i) = data.labels(order[lo + i]);
      }
      if (transform) transform(model, X, y);

      std::vector<Eigen::MatrixXd> masks;
      if (cfg.dropout_p > 0.0) {
        const double keep = 1.0 - cfg.dropout_p;
        for (int l = 0; l < model.depth; ++l) {
          Eigen::MatrixXd mask(model.width, bs);
          for (int r = 0; r < mask.rows(); ++r) {
            for (int c = 0; c < mask.cols(); ++c) {
              mask(r, c) = rng.uniform() < keep ? 1.0 / keep : 0.0;
            }
          }
          masks.push_back(std::move(mask));
        }
      }
      auto [loss, grad] = loss_and_grad(model, X, y, cfg.loss,
                                        masks.empty() ? nullptr : &masks);
      if (!std::isfinite(loss) || loss > kDivergenceLoss) {
        hist.diverged = true;
        hist.step_loss.push_back(loss);
        return {std::move(model), std::move(hist)};
      }
      ++state.t;
      const int last = model.layers() - 1;
      for (int l = 0; l < model.layers(); ++l) {
        if (l == last && model.v_frozen) continue;
        step_param(cfg.opt, state.t, model.W[l], grad.W[l], state.mW[l],
                   state.vW[l], true);
        step_param(cfg.opt, state.t, model.b[l], grad.b[l], state.mb[l],
                   state.vb[l], false);
      }
      for (std::size_t l = 0; l < model.prelu.size(); ++l) {
        step_scalar(cfg.opt, state.t, model.prelu[l], grad.prelu[l],
                    state.mp[l], state.vp[l]);
      }
      hist.step_loss.push_back(loss);
      record_norms();
      epoch_total += loss;
      ++epoch_batches;
      ++hist.steps;
    }
    if (epoch_batches == 0) break;
    const double epoch_mean = epoch_total / epoch_batches;
    hist.epoch_loss.push_back(epoch_mean);
    ++hist.epochs;
    if (cfg.early_stop_loss > 0.0 && epoch_mean < cfg.early_stop_loss) {
      hist.stopped_early = true;
      break;
    }
    if (cfg.max_steps && hist.steps >= *cfg.max_steps) break;
  }
  return {std::move(model), std::move(hist)};
}

Eigen::VectorXd ensemble_score_batch(const std::vector<MlpModel>& models,
                                     const Eigen::MatrixXd& X) {
  if (models.empty()) throw SpecError("empty ensemble");
  Eigen::VectorXd total = Eigen::VectorXd::Zero(X.rows());
  for (const auto& m : models) {
    if (m.input_dim() != models.front().input_dim()) {
      throw SpecError("ensemble members disagree on input dimension");
    }
    total += forward_batch(m, X);
  }
  return total / static_cast<double>(models.size());
}

double ensemble_score(const std::vector<MlpModel>& models,
                      const Eigen::VectorXd& x) {
  return ensemble_score_batch(models, x.transpose())(0);
}

MlpModel interpolate(const MlpModel& a, const MlpModel& b, double alpha) {
  a.check_shapes();
  b.check_shapes();
  if (a.layers() != b.layers() || a.activation != b.activation) {
    throw SpecError("interpolate: architecture mismatch");
  }
  MlpModel out = a;
  for (int l = 0; l < a.layers(); ++l) {
    if (a.W[l].rows() != b.W[l].rows() || a.W[l].cols() != b.W[l].cols()) {
      throw SpecError("interpolate: shape mismatch");
    }
    out.W[l] = alpha * a.W[l] + (1.0 - alpha) * b.W[l];
    out.b[l] = alpha * a.b[l] + (1.0 - alpha) * b.b[l];
  }
  for (std::size_t l = 0; l < a.prelu.size(); ++l) {
    out.prelu[l] = alpha * a.prelu[l] + (1.0 - alpha) * b.prelu[l];
  }
  return out;
}

static constexpr int kModelFormatVersion = 1;

void save_model(const MlpModel& model, const std::string& path) {
  model.check_shapes();
  std::string payload;
  auto push = [&](const double* p, std::size_t count) {
    payload.append(reinterpret_cast<const char*>(p), count * sizeof(double));
  };
  for (int l = 0; l < model.layers(); ++l) {
    for (int i = 0; i < model.W[l].rows(); ++i) {
      for (int j = 0; j < model.W[l].cols(); ++j) {
        const double v = model.W[l](i, j);
        push(&v, 1);
      }
    }
    push(model.b[l].data(), model.b[l].size());
  }
  for (double s : model.prelu) push(&s, 1);

  json shapes = json::array();
  for (int l = 0; l < model.layers(); ++l) {
    shapes.push_back({model.W[l].rows(), model.W[l].cols()});
  }
  json header = {{"format_version", kModelFormatVersion},
                 {"activation", to_string(model.activation)},
                 {"v_frozen", model.v_frozen},
                 {"width", model.width},
                 {"depth", model.depth},
                 {"shapes", shapes},
                 {"prelu_count", model.prelu.size()},
                 {"checksum", datagen::crc32(payload.data(), payload.size())}};
  const std::string head = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError(IoError::Code::Generic, "cannot write " + path);
  const char magic[8] = {'S', 'B', 'C', 'K', 'P', 'T', '0', '1'};
  f.write(magic, 8);
  const std::uint64_t hlen = head.size();
  f.write(reinterpret_cast<const char*>(&hlen), 8);
  f.write(head.data(), static_cast<std::streamsize>(head.size()));
  f.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!f) throw IoError(IoError::Code::Generic, "short write to " + path);
}

MlpModel load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(IoError::Code::Generic, "cannot read " + path);
  char magic[8];
  if (!f.read(magic, 8) || std::memcmp(magic, "SBCKPT01", 8) != 0) {
    throw IoError(IoError::Code::Version, path + ": not a model checkpoint");
  }
  std::uint64_t hlen = 0;
  if (!f.read(reinterpret_cast<char*>(&hlen), 8) || hlen > (1u << 20)) {
    throw IoError(IoError::Code::Truncated, path + ": bad header length");
  }
  std::string head(hlen, '\0');
  if (!f.read(head.data(), static_cast<std::streamsize>(hlen))) {
    throw IoError(IoError::Code::Truncated, path + ": truncated header");
  }
  json header;
  try {
    header = json::parse(head);
  } catch (const json::exception& e) {
    throw IoError(IoError::Code::Generic,
                  std::string("bad checkpoint header: ") + e.what());
  }
  if (header.at("format_version").get<int>() != kModelFormatVersion) {
    throw IoError(IoError::Code::Version, path + ": unsupported version");
  }

  MlpModel m;
  m.activation = activation_from_string(header.at("activation"));
  m.v_frozen = header.at("v_frozen").get<bool>();
  m.width = header.at("width").get<int>();
  m.depth = header.at("depth").get<int>();
  std::size_t doubles = header.at("prelu_count").get<std::size_t>();
  for (const auto& sh : header.at("shapes")) {
    const long r = sh[0].get<long>(), c = sh[1].get<long>();
    m.W.emplace_back(r, c);
    m.b.emplace_back(r);
    doubles += static_cast<std::size_t>(r) * c + r;
  }
  std::string payload(doubles * sizeof(double), '\0');
  if (!f.read(payload.data(), static_cast<std::streamsize>(payload.size()))) {
    throw IoError(IoError::Code::Truncated, path + ": truncated parameters");
  }
  const auto stored = header.at("checksum").get<std::uint32_t>();
  if (stored != datagen::crc32(payload.data(), payload.size())) {
    throw IoError(IoError::Code::Checksum, path + ": checksum mismatch");
  }
  const char* p = payload.data();
  auto pull = [&] {
    double v;
    std::memcpy(&v, p, sizeof(double));
    p += sizeof(double);
    return v;
  };
  for (std::size_t l = 0; l < m.W.size(); ++l) {
    for (int i = 0; i < m.W[l].rows(); ++i) {
      for (int j = 0; j < m.W[l].cols(); ++j) m.W[l](i, j) = pull();
    }
    for (int i = 0; i < m.b[l].size(); ++i) m.b[l](i) = pull();
  }
  m.prelu.resize(header.at("prelu_count").get<std::size_t>());
  for (auto& s : m.prelu) s = pull();
  m.check_shapes();
  return m;
}

}  // namespace sb::mlp
