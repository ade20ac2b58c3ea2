#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sb/datagen.hpp"
#include "sb/rng.hpp"

namespace sb::mlp {

enum class Activation { ReLU, LeakyReLU, PReLU, Tanh };
enum class Loss { Hinge, Logistic };
enum class InitScheme { Kaiming, Xavier, TheoremGaussian, Custom };
enum class OptimizerKind { SGD, Adam, RMSProp };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);
std::string to_string(Loss l);
Loss loss_from_string(const std::string& s);

struct InitSpec {
  InitScheme scheme = InitScheme::Kaiming;
  double sigma2 = 1.0;   // Custom only
  double scale = 1.0;    // multiplier on the scheme's std dev

  void validate() const;
};

// Fully-connected scorer: `depth` hidden layers of `width` units feeding a
// single linear output. When v_frozen, the output layer is exactly half
// +1/sqrt(width) and half -1/sqrt(width) with zero bias, and is never updated.
struct MlpModel {
  std::vector<Eigen::MatrixXd> W;  // layer l maps W[l] * h + b[l]
  std::vector<Eigen::VectorXd> b;
  std::vector<double> prelu;       // one learned slope per hidden layer
  Activation activation = Activation::ReLU;
  bool v_frozen = false;
  int width = 0, depth = 0;

  int input_dim() const { return static_cast<int>(W.front().cols()); }
  int layers() const { return static_cast<int>(W.size()); }
  void check_shapes() const;  // throws SpecError
};

MlpModel init_model(int d, int width, int depth, Activation act,
                    const InitSpec& init, bool freeze_output,
                    std::uint64_t seed);

double forward(const MlpModel& model, const Eigen::VectorXd& x);
// One score per row of X.
Eigen::VectorXd forward_batch(const MlpModel& model, const Eigen::MatrixXd& X);
inline int predict(double score) { return score >= 0.0 ? 1 : -1; }

struct Gradients {
  std::vector<Eigen::MatrixXd> W;
  std::vector<Eigen::VectorXd> b;
  std::vector<double> prelu;
};

// Mean loss over the batch plus gradients for every parameter. Frozen output
// parameters get zero gradient. Dropout masks (one column per hidden layer,
// entries 0 or 1/(1-p)) are applied to hidden activations when provided.
std::pair<double, Gradients> loss_and_grad(
    const MlpModel& model, const Eigen::MatrixXd& X, const Eigen::VectorXi& y,
    Loss loss, const std::vector<Eigen::MatrixXd>* dropout_masks = nullptr);

// Per-example gradient of the loss with respect to the inputs: row i holds
// d loss(y_i, s(x_i)) / d x_i (no mean reduction).
Eigen::MatrixXd input_gradient(const MlpModel& model, const Eigen::MatrixXd& X,
                               const Eigen::VectorXi& y, Loss loss);

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::SGD;
  double lr = 0.1;
  double momentum = 0.0;
  double weight_decay = 0.0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;  // Adam
  double alpha = 0.99;                            // RMSProp

  void validate() const;
};

struct TrainConfig {
  Loss loss = Loss::Logistic;
  OptimizerSpec opt;
  int batch_size = 256;
  int epochs = 500;
  std::optional<int> max_steps;  // cap on optimizer steps, if set
  double dropout_p = 0.0;
  double early_stop_loss = 1e-2;  // epoch mean; <= 0 disables
  std::uint64_t seed = 0;
  // When the model has one hidden layer, record per-step Frobenius norms of
  // the first-layer columns in each named coordinate group.
  std::map<std::string, std::vector<int>> track_groups;

  void validate() const;
};

struct TrainHistory {
  std::vector<double> step_loss;
  std::vector<double> epoch_loss;
  std::map<std::string, std::vector<double>> group_norms;  // per step
  bool diverged = false;
  bool stopped_early = false;
  int steps = 0;
  int epochs = 0;
};

// Mini-batch training; deterministic given cfg.seed. Divergence (NaN or loss
// above 1e6) sets history.diverged and halts. The input model is not modified.
std::pair<MlpModel, TrainHistory> train(const MlpModel& model,
                                        const datagen::Dataset& data,
                                        const TrainConfig& cfg);

// As train, but each batch passes through `transform` (e.g. an adversarial
// perturbation) before the gradient step. The identity transform reproduces
// train bit-for-bit. The transform sees the current model.
using BatchTransform = std::function<void(
    const MlpModel& model, Eigen::MatrixXd& X, const Eigen::VectorXi& y)>;
std::pair<MlpModel, TrainHistory> train_transformed(const MlpModel& model,
                                                    const datagen::Dataset& data,
                                                    const TrainConfig& cfg,
                                                    const BatchTransform& transform);

double ensemble_score(const std::vector<MlpModel>& models,
                      const Eigen::VectorXd& x);
Eigen::VectorXd ensemble_score_batch(const std::vector<MlpModel>& models,
                                     const Eigen::MatrixXd& X);

// Parameter-wise alpha * a + (1 - alpha) * b.
MlpModel interpolate(const MlpModel& a, const MlpModel& b, double alpha);

// Single-file checkpoint: JSON header plus float64 parameter payload with a
// trailing checksum; round-trip is bit-exact.
void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);

}  // namespace sb::mlp
