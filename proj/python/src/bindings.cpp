// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "cbtail/checkpoint.hpp"
#include "cbtail/dataio.hpp"
#include "cbtail/errors.hpp"
#include "cbtail/inference.hpp"
#include "cbtail/losses.hpp"
#include "cbtail/metrics.hpp"
#include "cbtail/sampling.hpp"
#include "cbtail/stain_norm.hpp"
#include "cbtail/synthgen.hpp"

namespace py = pybind11;
using namespace cbtail;

namespace {

using ImageArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Image to_image(const ImageArray& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw InvalidArgument("expected an (height, width, 3) uint8 array");
  Image im(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::memcpy(im.data().data(), a.data(), im.data().size());
  return im;
}

ImageArray to_array(const Image& im) {
  ImageArray a({im.height(), im.width(), 3});
  std::memcpy(a.mutable_data(), im.data().data(), im.data().size());
  return a;
}

Eigen::Matrix<double, 3, 2> stain_columns(const StainMatrix& s) { return s.matrix(); }

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core: stain normalization, long-tail losses, sampling, inference and metrics.";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<DegenerateStains>(m, "DegenerateStains", base.ptr());
  py::register_exception<TooFewPixels>(m, "TooFewPixels", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<MissingFile>(m, "MissingFile", base.ptr());

  // Stain normalization. Images are (height, width, 3) uint8 arrays.
  m.def("rgb_to_od", [](const ImageArray& a, int background) {
        const ODImage od = rgb_to_od(to_image(a), background);
        py::array_t<double> out({od.height, od.width, 3});
        std::memcpy(out.mutable_data(), od.values.data(), od.values.size() * sizeof(double));
        return out;
      }, py::arg("image"), py::arg("background_intensity") = 255);
  m.def("estimate_stain_matrix", [](const ImageArray& a, double alpha, double od_threshold) {
        return stain_columns(estimate_stain_matrix(rgb_to_od(to_image(a)), alpha, od_threshold));
      }, py::arg("image"), py::arg("alpha") = 1.0, py::arg("od_threshold") = 0.15,
      "Columns are the unit OD vectors of the two stains, first column hematoxylin.");
  m.def("normalize_image", [](const ImageArray& a, std::optional<Eigen::Matrix<double, 3, 2>> stains,
                              std::optional<std::array<double, 2>> max_concentrations, double alpha,
                              double od_threshold) {
        StainReference ref = StainReference::standard();
        if (stains) ref.stains = StainMatrix::from_unnormalized(*stains);
        if (max_concentrations) ref.max_concentrations = *max_concentrations;
        MacenkoParams params;
        params.alpha_percentile = alpha;
        params.od_threshold = od_threshold;
        return to_array(normalize_image(to_image(a), ref, params));
      }, py::arg("image"), py::arg("stains") = py::none(), py::arg("max_concentrations") = py::none(),
      py::arg("alpha") = 1.0, py::arg("od_threshold") = 0.15);
  m.def("standard_reference", [] {
    const StainReference ref = StainReference::standard();
    return py::make_tuple(stain_columns(ref.stains), ref.max_concentrations);
  });
  m.def("angle_degrees", [](const Eigen::Vector3d& a, const Eigen::Vector3d& b) { return angle_degrees(a, b); });

  // Losses.
  m.def("effective_number_weights", [](std::vector<std::int64_t> counts, double beta, bool renormalize) {
        return effective_number_weights(ClassCounts(std::move(counts)), beta, renormalize).alpha;
      }, py::arg("counts"), py::arg("beta"), py::arg("renormalize") = false);
  m.def("hybrid_loss", [](const Eigen::VectorXd& logits, int y, std::vector<double> alpha, double beta,
                          double gamma, double lam) {
        ClassWeights w = ClassWeights::uniform(static_cast<int>(alpha.size()));
        w.alpha = std::move(alpha);
        const Eigen::VectorXd p = softmax(logits);
        return hybrid_loss(std::span<const double>(p.data(), p.size()), y, LossConfig{beta, gamma, lam}, w);
      }, py::arg("logits"), py::arg("y"), py::arg("alpha"), py::arg("beta") = 0.9999, py::arg("gamma") = 2.0,
      py::arg("lam") = 0.5);
  m.def("hybrid_loss_grad", [](const Eigen::VectorXd& logits, int y, std::vector<double> alpha, double beta,
                               double gamma, double lam) {
        ClassWeights w = ClassWeights::uniform(static_cast<int>(alpha.size()));
        w.alpha = std::move(alpha);
        return hybrid_loss_grad(logits, y, LossConfig{beta, gamma, lam}, w);
      }, py::arg("logits"), py::arg("y"), py::arg("alpha"), py::arg("beta") = 0.9999, py::arg("gamma") = 2.0,
      py::arg("lam") = 0.5);
  m.def("softmax", [](const Eigen::VectorXd& z) { return softmax(z); });

  // Sampling.
  m.def("instance_balanced_plan", [](const std::vector<int>& labels, std::uint64_t seed) {
    return instance_balanced_plan(labels, seed).indices;
  }, py::arg("labels"), py::arg("seed"));
  m.def("class_balanced_plan", [](const std::vector<int>& labels, std::size_t n_draws, std::uint64_t seed) {
    return class_balanced_plan(labels, n_draws, seed).indices;
  }, py::arg("labels"), py::arg("n_draws"), py::arg("seed"));

  // Metrics.
  m.def("compute_metrics", [](const std::vector<int>& preds, const std::vector<int>& truths, int num_classes) {
        const ConfusionMatrix cm = confusion(preds, truths, num_classes);
        const MetricsReport r = compute_metrics(cm);
        Eigen::MatrixXi matrix(num_classes, num_classes);
        for (int t = 0; t < num_classes; ++t)
          for (int p = 0; p < num_classes; ++p) matrix(t, p) = static_cast<int>(cm(t, p));
        py::dict d;
        d["macro_f1"] = r.macro_f1;
        d["balanced_accuracy"] = r.balanced_accuracy;
        d["macro_precision"] = r.macro_precision;
        d["macro_specificity"] = r.macro_specificity;
        d["accuracy"] = r.accuracy;
        d["precision"] = r.precision;
        d["recall"] = r.recall;
        d["specificity"] = r.specificity;
        d["f1"] = r.f1;
        d["confusion"] = matrix;
        return d;
      }, py::arg("preds"), py::arg("truths"), py::arg("num_classes"));

  // Inference.
  py::class_<Model>(m, "Model")
      .def_property_readonly("input_dim", &Model::input_dim)
      .def_property_readonly("num_classes", &Model::num_classes)
      .def_readonly("trained_stage", &Model::trained_stage)
      .def("predict_proba", [](const Model& model, const Eigen::MatrixXd& inputs) {
        return forward_batch(model, inputs.transpose()).probabilities.transpose().eval();
      }, py::arg("inputs"), "Rows of `inputs` are samples; returns one probability row per sample.");
  m.def("load_model", [](const std::filesystem::path& path) {
    const Checkpoint ck = load_checkpoint(path);
    return py::make_tuple(ck.model, ck.labels.names());
  }, py::arg("path"), "Returns (model, label names).");
  m.def("ensemble_predict", [](const std::vector<Model>& models, const std::vector<Eigen::VectorXd>& views) {
    return to_vector(ensemble_predict(models, views));
  }, py::arg("models"), py::arg("views"));
  m.def("tta_views", [](const ImageArray& a, int k) {
    std::vector<ImageArray> out;
    for (const Image& v : tta_views(to_image(a), k)) out.push_back(to_array(v));
    return out;
  }, py::arg("image"), py::arg("k"));

  // Synthetic data.
  m.def("synth_stained_image", [](std::uint64_t seed, int size, std::optional<Eigen::Matrix<double, 3, 2>> stains) {
        SynthStainSpec spec;
        spec.seed = seed;
        spec.width = spec.height = size;
        if (stains) spec.stains = StainMatrix::from_unnormalized(*stains);
        return to_array(synth_stained_image(spec).image);
      }, py::arg("seed"), py::arg("size") = 64, py::arg("stains") = py::none());
  m.def("long_tail_benchmark", [](std::uint64_t seed) {
    const SynthBlobs b = synth_blobs(SynthBlobSpec::long_tail_benchmark(seed));
    return py::make_tuple(Eigen::MatrixXd(b.features.transpose()), b.labels);
  }, py::arg("seed"), "Returns (features with one row per sample, labels).");
}
