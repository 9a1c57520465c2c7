#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <string>

#include "emlp/dataset.hpp"
#include "emlp/error.hpp"
#include "emlp/experiment.hpp"
#include "emlp/loss.hpp"
#include "emlp/matrix.hpp"
#include "emlp/network.hpp"
#include "emlp/pca.hpp"
#include "emlp/rng.hpp"
#include "emlp/sample_reduction.hpp"

namespace py = pybind11;
using namespace emlp;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using LabelArray = py::array_t<Label, py::array::c_style | py::array::forcecast>;

DenseMatrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-D array, got " + std::to_string(a.ndim()) + "-D");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  std::vector<double> data(a.data(), a.data() + rows * cols);
  return DenseMatrix(rows, cols, std::move(data));
}

Array to_array(const DenseMatrix& m) {
  Array out({m.rows(), m.cols()});
  if (m.size() > 0) std::memcpy(out.mutable_data(), m.values().data(), m.size() * sizeof(double));
  return out;
}

std::vector<Label> to_labels(const LabelArray& y) {
  if (y.ndim() != 1) throw ShapeError("labels must be 1-D");
  return std::vector<Label>(y.data(), y.data() + y.shape(0));
}

py::array_t<Label> labels_array(const std::vector<Label>& y) {
  return py::array_t<Label>(static_cast<py::ssize_t>(y.size()), y.data());
}

Dataset make_dataset(const Array& x, const LabelArray& y, const std::string& name) {
  Dataset ds{to_matrix(x), to_labels(y), name, true};
  ds.validate();
  return ds;
}

py::dict run_dict(const RunResult& r) {
  py::dict d;
  d["status"] = std::string(to_string(r.status));
  d["message"] = r.message;
  d["best_valid_acc"] = r.best_valid_acc;
  d["best_epoch"] = r.best_epoch;
  d["test_acc"] = r.test_acc ? py::cast(*r.test_acc) : py::none();
  d["test_loss"] = r.test_loss ? py::cast(*r.test_loss) : py::none();
  py::list hist;
  for (const auto& m : r.history) {
    py::dict e;
    e["epoch"] = m.epoch;
    e["train_loss"] = m.train_loss;
    e["train_acc"] = m.train_acc;
    e["valid_loss"] = m.valid_loss;
    e["valid_acc"] = m.valid_acc;
    e["epoch_seconds"] = m.epoch_seconds;
    hist.append(e);
  }
  d["history"] = hist;
  d["model"] = r.model;
  return d;
}

ExperimentConfig make_config(const py::dict& settings) {
  ExperimentConfig cfg;
  for (const auto& [k, v] : settings) {
    apply_setting(cfg, py::str(k).cast<std::string>(), py::str(v).cast<std::string>());
  }
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_emlp, m) {
  m.doc() = "MLP training, PCA and sample pruning (C++ core)";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<StateError>(m, "StateError", base.ptr());
  py::register_exception<LabelError>(m, "LabelError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  auto fmt = py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<CorruptionError>(m, "CorruptionError", fmt.ptr());
  py::register_exception<ConsistencyError>(m, "ConsistencyError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  m.attr("NUM_CLASSES") = kNumClasses;

  m.def("matmul", [](const Array& a, const Array& b) { return to_array(matmul(to_matrix(a), to_matrix(b))); });
  m.def("softmax", [](const Array& z) { return to_array(softmax(to_matrix(z))); });
  m.def("cross_entropy", [](const Array& z, const LabelArray& y) {
    const auto ce = cross_entropy_softmax(to_matrix(z), to_labels(y));
    return py::make_tuple(ce.loss, to_array(ce.grad));
  });

  py::class_<Network>(m, "Network")
      .def_static(
          "mlp",
          [](const std::vector<std::size_t>& widths, const std::vector<double>& keep, std::uint64_t seed) {
            RngState rng(seed);
            return Network::mlp(widths, keep, rng);
          },
          py::arg("widths"), py::arg("dropout_keep") = std::vector<double>{}, py::arg("seed") = 1)
      .def("infer", [](const Network& n, const Array& x) { return to_array(n.infer(to_matrix(x))); })
      .def_property_readonly("architecture", &Network::architecture)
      .def_property_readonly("parameter_count", &Network::parameter_count)
      .def("weights", [](const Network& n, std::size_t i) { return to_array(n.affine(i).weights); })
      .def("biases", [](const Network& n, std::size_t i) { return n.affine(i).biases; })
      .def("save", [](const Network& n, const std::filesystem::path& p) { save_model(n, p); })
      .def_static("load", &load_model)
      .def("__eq__", &Network::operator==);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("features"), py::arg("labels"), py::arg("name") = "")
      .def_property_readonly("features", [](const Dataset& d) { return to_array(d.features); })
      .def_property_readonly("labels", [](const Dataset& d) { return labels_array(d.labels); })
      .def_readwrite("name", &Dataset::name)
      .def_readonly("normalized", &Dataset::normalized)
      .def("__len__", &Dataset::size)
      .def_property_readonly("dim", &Dataset::dim);

  m.def("load_idx", [](const std::filesystem::path& images, const std::filesystem::path& labels, bool transpose) {
    return load_idx(images, labels, transpose ? IdxOrientation::Transposed : IdxOrientation::AsStored);
  }, py::arg("images"), py::arg("labels"), py::arg("transpose") = true);
  m.def("normalize", &normalize);
  m.def("save_bin", &save_bin);
  m.def("load_bin", &load_bin);
  m.def("shuffle", &shuffle);
  m.def("stratified_split", [](const Dataset& d, std::size_t tr, std::size_t va, std::size_t te, std::uint64_t seed) {
    Splits s = stratified_split(d, {tr, va, te, seed});
    return py::make_tuple(std::move(s.train), std::move(s.valid), std::move(s.test));
  }, py::arg("dataset"), py::arg("train"), py::arg("valid"), py::arg("test"), py::arg("seed") = 1);

  py::class_<PcaModel>(m, "PcaModel")
      .def_readonly("mean", &PcaModel::mean)
      .def_property_readonly("components", [](const PcaModel& p) { return to_array(p.components); })
      .def_readonly("explained_variance", &PcaModel::explained_variance)
      .def_readonly("total_variance", &PcaModel::total_variance)
      .def_property_readonly("k", &PcaModel::k)
      .def("transform", [](const PcaModel& p, const Array& x) { return to_array(transform(p, to_matrix(x))); })
      .def("inverse_transform",
           [](const PcaModel& p, const Array& z) { return to_array(inverse_transform(p, to_matrix(z))); })
      .def("cumulative_evr", [](const PcaModel& p) { return cumulative_evr(p); })
      .def("save", [](const PcaModel& p, const std::filesystem::path& path) { save_pca(p, path); })
      .def_static("load", &load_pca);
  m.def("pca_fit", [](const Array& x, std::size_t k) { return pca_fit(to_matrix(x), k); });
  m.def("pca_spectrum", [](const Array& x) { return pca_decompose(to_matrix(x)).spectrum; });

  m.def("prune_mean_distance", [](const Array& x, const LabelArray& y, std::size_t keep, std::size_t classes) {
    return prune_by_mean_distance(to_matrix(x), to_labels(y), keep, classes).kept_indices();
  }, py::arg("features"), py::arg("labels"), py::arg("keep"), py::arg("num_classes") = kNumClasses);
  m.def("prune_reconstruction_rmse", [](const Array& x, const LabelArray& y, const PcaModel& model, std::size_t keep) {
    return prune_by_reconstruction_rmse(to_matrix(x), to_labels(y), model, keep).kept_indices();
  });

  m.def("flop_count", [](const std::vector<std::size_t>& w) { return flop_count(w); });
  m.def("conv_out_dim", &conv_out_dim);
  m.def("conv_multiplications", &conv_multiplications, py::arg("input"), py::arg("filter"),
        py::arg("padding"), py::arg("stride"), py::arg("kernels"), py::arg("channels") = 1);

  m.def("evaluate", [](const Network& n, const Dataset& d) {
    const EvalResult r = evaluate(n, d);
    return py::make_tuple(r.loss, r.accuracy);
  });
  m.def("train", [](const py::dict& settings, const Dataset& tr, const Dataset& va) {
    const ExperimentConfig cfg = make_config(settings);
    RunResult r;
    {
      py::gil_scoped_release release;
      r = train(cfg, tr, va);
    }
    return run_dict(r);
  }, py::arg("config"), py::arg("train"), py::arg("valid"),
     "Train with config fields given as a dict of strings or numbers, e.g. {'epochs': 5}.");
}
