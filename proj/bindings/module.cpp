// Python bindings for the core operations: dataset generation, training,
// metrics, attacks, and the closed-form gradient/trajectory checks.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sb/attacks.hpp"
#include "sb/datagen.hpp"
#include "sb/errors.hpp"
#include "sb/harness.hpp"
#include "sb/lsn.hpp"
#include "sb/metrics.hpp"
#include "sb/mlp.hpp"

namespace py = pybind11;
using namespace sb;

namespace {

mlp::TrainConfig make_train_config(const std::string& loss,
                                   const std::string& optimizer, double lr,
                                   double momentum, double weight_decay,
                                   int batch_size, int epochs, double dropout,
                                   double early_stop_loss, std::uint64_t seed) {
  mlp::TrainConfig tc;
  tc.loss = mlp::loss_from_string(loss);
  if (optimizer == "sgd") tc.opt.kind = mlp::OptimizerKind::SGD;
  else if (optimizer == "adam") tc.opt.kind = mlp::OptimizerKind::Adam;
  else if (optimizer == "rmsprop") tc.opt.kind = mlp::OptimizerKind::RMSProp;
  else throw SpecError("unknown optimizer: " + optimizer);
  tc.opt.lr = lr;
  tc.opt.momentum = momentum;
  tc.opt.weight_decay = weight_decay;
  tc.batch_size = batch_size;
  tc.epochs = epochs;
  tc.dropout_p = dropout;
  tc.early_stop_loss = early_stop_loss;
  tc.seed = seed;
  return tc;
}

attacks::AttackConfig make_attack_config(const std::string& norm, double budget,
                                         int steps, double step_size,
                                         int restarts, std::uint64_t seed,
                                         const std::string& loss) {
  attacks::AttackConfig cfg;
  cfg.norm = attacks::norm_from_string(norm);
  cfg.budget = budget;
  cfg.steps = steps;
  cfg.step_size = step_size;
  cfg.restarts = restarts;
  cfg.seed = seed;
  cfg.loss = mlp::loss_from_string(loss);
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_sb, m) {
  m.doc() = "simplicity-bias testbed core";

  py::register_exception<SpecError>(m, "SpecError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_IOError);
  py::register_exception<DivergenceError>(m, "DivergenceError",
                                          PyExc_RuntimeError);

  py::class_<datagen::Dataset>(m, "Dataset")
      .def_readonly("features", &datagen::Dataset::features)
      .def_readonly("labels", &datagen::Dataset::labels)
      .def_readonly("groups", &datagen::Dataset::groups)
      .def_readonly("seed", &datagen::Dataset::seed)
      .def_property_readonly("name", [](const datagen::Dataset& d) {
        return d.spec.name;
      })
      .def_property_readonly("n", &datagen::Dataset::n)
      .def_property_readonly("dim", &datagen::Dataset::dim)
      .def("pre_rotation_features", &datagen::Dataset::pre_rotation_features);

  m.def(
      "generate_dataset",
      [](const std::string& preset, int d, int n, std::uint64_t seed, double p,
         bool rotate) {
        auto spec = datagen::preset_by_name(preset, d, p);
        if (rotate) spec.rotation_seed = Rng::mix(seed, 0xF0F0);
        return datagen::generate_dataset(spec, n, seed);
      },
      py::arg("preset"), py::arg("d"), py::arg("n"), py::arg("seed") = 0,
      py::arg("p") = 0.1, py::arg("rotate") = false);
  m.def("randomize_group",
        py::overload_cast<const datagen::Dataset&, const std::string&,
                          std::uint64_t>(&datagen::randomize_group),
        py::arg("dataset"), py::arg("group"), py::arg("seed") = 0);
  m.def("save_dataset", &datagen::save_dataset);
  m.def("load_dataset", &datagen::load_dataset);

  py::class_<mlp::MlpModel>(m, "Model")
      .def_property_readonly("width",
                             [](const mlp::MlpModel& mm) { return mm.width; })
      .def_property_readonly("depth",
                             [](const mlp::MlpModel& mm) { return mm.depth; })
      .def_property_readonly("input_dim", &mlp::MlpModel::input_dim);

  m.def(
      "init_model",
      [](int d, int width, int depth, std::uint64_t seed, bool freeze_output) {
        return mlp::init_model(d, width, depth, mlp::Activation::ReLU,
                               mlp::InitSpec{}, freeze_output, seed);
      },
      py::arg("d"), py::arg("width"), py::arg("depth"), py::arg("seed") = 0,
      py::arg("freeze_output") = false);
  m.def(
      "train",
      [](const mlp::MlpModel& model, const datagen::Dataset& data,
         const std::string& loss, const std::string& optimizer, double lr,
         double momentum, double weight_decay, int batch_size, int epochs,
         double dropout, double early_stop_loss, std::uint64_t seed) {
        auto [trained, hist] = mlp::train(
            model, data,
            make_train_config(loss, optimizer, lr, momentum, weight_decay,
                              batch_size, epochs, dropout, early_stop_loss,
                              seed));
        if (hist.diverged) throw DivergenceError("training diverged");
        return py::make_tuple(trained,
                              py::dict(py::arg("epochs") = hist.epochs,
                                       py::arg("steps") = hist.steps,
                                       py::arg("stopped_early") = hist.stopped_early,
                                       py::arg("epoch_loss") = hist.epoch_loss));
      },
      py::arg("model"), py::arg("dataset"), py::arg("loss") = "logistic",
      py::arg("optimizer") = "sgd", py::arg("lr") = 0.1,
      py::arg("momentum") = 0.0, py::arg("weight_decay") = 0.0,
      py::arg("batch_size") = 256, py::arg("epochs") = 500,
      py::arg("dropout") = 0.0, py::arg("early_stop_loss") = 1e-2,
      py::arg("seed") = 0);
  m.def("forward", [](const mlp::MlpModel& model, const Eigen::MatrixXd& X) {
    return mlp::forward_batch(model, X);
  });
  m.def("save_model", &mlp::save_model);
  m.def("load_model", &mlp::load_model);

  m.def("accuracy", &metrics::accuracy);
  m.def("auc", &metrics::auc);
  m.def("ks_distance", &metrics::ks_distance);
  m.def(
      "randomized_metrics",
      [](const mlp::MlpModel& model, const datagen::Dataset& data,
         const std::string& group, int repeats, std::uint64_t seed) {
        const auto r = metrics::randomized_metrics(model, data, group, repeats, seed);
        return py::dict(py::arg("accuracy") = r.accuracy, py::arg("auc") = r.auc,
                        py::arg("logit_shift") = r.logit_shift);
      },
      py::arg("model"), py::arg("dataset"), py::arg("group"),
      py::arg("repeats") = 5, py::arg("seed") = 0);

  m.def(
      "pgd",
      [](const mlp::MlpModel& model, const Eigen::MatrixXd& X,
         const Eigen::VectorXi& y, const std::string& norm, double budget,
         int steps, double step_size, int restarts, std::uint64_t seed,
         const std::string& loss) {
        return attacks::pgd_batch(
            model, X, y,
            make_attack_config(norm, budget, steps, step_size, restarts, seed,
                               loss));
      },
      py::arg("model"), py::arg("X"), py::arg("y"), py::arg("norm") = "l2",
      py::arg("budget") = 0.1, py::arg("steps") = 40,
      py::arg("step_size") = 0.1, py::arg("restarts") = 1, py::arg("seed") = 0,
      py::arg("loss") = "logistic");
  m.def(
      "uap",
      [](const mlp::MlpModel& model, const datagen::Dataset& data,
         const std::string& norm, double budget, int steps, double step_size,
         std::uint64_t seed, const std::string& loss) {
        const auto r = attacks::uap(
            model, data,
            make_attack_config(norm, budget, steps, step_size, 1, seed, loss));
        return py::dict(py::arg("delta") = r.delta,
                        py::arg("norm_used") = r.norm_used,
                        py::arg("fooled_fraction") = r.fooled_fraction,
                        py::arg("energy_by_group") = r.energy_by_group);
      },
      py::arg("model"), py::arg("dataset"), py::arg("norm") = "l2",
      py::arg("budget") = 1.0, py::arg("steps") = 400,
      py::arg("step_size") = 0.05, py::arg("seed") = 0,
      py::arg("loss") = "logistic");

  m.def("pop_grad_linear", &lsn::pop_grad_linear, py::arg("w1"), py::arg("w2"),
        py::arg("noise_norm"), py::arg("v"), py::arg("limit") = false);
  m.def("pop_grad_slab", &lsn::pop_grad_slab, py::arg("w1"), py::arg("w2"),
        py::arg("noise_norm"), py::arg("v"), py::arg("limit") = false);
  m.def("pop_grad_noise_coeff", &lsn::pop_grad_noise_coeff, py::arg("w1"),
        py::arg("w2"), py::arg("noise_norm"), py::arg("v"),
        py::arg("limit") = false);
  m.def(
      "verify_theorem",
      [](int d, int k, double eta, double c, int t_steps, std::uint64_t seed) {
        lsn::TheoremParams p;
        p.d = d;
        p.k = k;
        p.eta = eta;
        p.c = c;
        p.t_steps = t_steps;
        p.seed = seed;
        const auto r = lsn::verify_theorem(p);
        return py::dict(py::arg("test_error") = r.test_error,
                        py::arg("all_bands_ok") = r.all_bands_ok,
                        py::arg("all_active") = r.all_active,
                        py::arg("steps") = r.steps.size());
      },
      py::arg("d") = 400, py::arg("k") = 16, py::arg("eta") = 0.4,
      py::arg("c") = 2.0, py::arg("t_steps") = 4, py::arg("seed") = 1);

  m.def("run_experiment", [](const std::string& config_json,
                             const std::string& out_dir) {
    auto cfg = harness::parse_experiment_config(config_json);
    const auto man = harness::run_experiment(cfg);
    harness::emit_report(man, out_dir);
    return man.tables.size();
  });
}
