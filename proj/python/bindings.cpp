// Python bindings for the otikit core: measures, texture maps, ranking and
// selection, evaluation metrics, band energies, and the toy classifier/attack
// loop. Images cross the boundary as numpy arrays of shape (H, W) or (C, H, W).

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "oti/error.hpp"
#include "oti/eval.hpp"
#include "oti/frequency.hpp"
#include "oti/image_io.hpp"
#include "oti/measures.hpp"
#include "oti/ranking.hpp"
#include "oti/texture.hpp"
#include "oti/toy.hpp"
#include "oti/version.hpp"

namespace py = pybind11;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using MaskArray = py::array_t<uint8_t, py::array::c_style | py::array::forcecast>;

oti::ImageTensor image_from_array(const DoubleArray& array) {
  const auto buffer = array.request();
  oti::ImageTensor tensor;
  if (buffer.ndim == 2) {
    tensor.channels = 1;
    tensor.height = static_cast<int>(buffer.shape[0]);
    tensor.width = static_cast<int>(buffer.shape[1]);
  } else if (buffer.ndim == 3) {
    tensor.channels = static_cast<int>(buffer.shape[0]);
    tensor.height = static_cast<int>(buffer.shape[1]);
    tensor.width = static_cast<int>(buffer.shape[2]);
  } else {
    throw oti::Error(oti::ErrorKind::InvalidArgument,
                     "image array must have shape (H, W) or (C, H, W)");
  }
  const auto* data = static_cast<const double*>(buffer.ptr);
  tensor.data.assign(data, data + buffer.size);
  oti::validate_image(tensor);
  return tensor;
}

oti::ObjectMask mask_from_array(const MaskArray& array) {
  const auto buffer = array.request();
  if (buffer.ndim != 2) {
    throw oti::Error(oti::ErrorKind::InvalidArgument, "mask array must have shape (H, W)");
  }
  oti::ObjectMask mask;
  mask.height = static_cast<int>(buffer.shape[0]);
  mask.width = static_cast<int>(buffer.shape[1]);
  const auto* data = static_cast<const uint8_t*>(buffer.ptr);
  mask.data.assign(data, data + buffer.size);
  oti::validate_mask(mask);
  return mask;
}

// The (shape, pointer) constructors copy the buffer into a fresh owning array.
py::array_t<double> array_from_planar(const std::vector<double>& data, int channels,
                                      int height, int width) {
  return py::array_t<double>(
      std::vector<py::ssize_t>{channels, height, width}, data.data());
}

py::array_t<double> array_from_image(const oti::ImageTensor& tensor) {
  return array_from_planar(tensor.data, tensor.channels, tensor.height, tensor.width);
}

py::array_t<double> array_from_vector(const std::vector<double>& data) {
  return py::array_t<double>(
      std::vector<py::ssize_t>{static_cast<py::ssize_t>(data.size())}, data.data());
}

py::array_t<uint8_t> array_from_mask(const oti::ObjectMask& mask) {
  return py::array_t<uint8_t>(std::vector<py::ssize_t>{mask.height, mask.width},
                              mask.data.data());
}

oti::TextureOperator make_operator(const std::string& name, const std::string& combine) {
  return oti::TextureOperator::by_name(name, oti::combine_from_string(combine));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Object texture intensity toolkit";
  m.attr("__version__") = oti::kVersion;

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const oti::Error& e) {
      if (e.is_io()) {
        PyErr_SetString(PyExc_OSError, e.what());
      } else {
        PyErr_SetString(PyExc_ValueError, e.what());
      }
    }
  });

  // --- io ---
  m.def(
      "load_image",
      [](const std::string& path) { return array_from_image(oti::load_image(path)); },
      py::arg("path"), "Load a PGM/PPM/planar-raw image as a (C, H, W) float array.");
  m.def(
      "load_mask",
      [](const std::string& path, double threshold) {
        return array_from_mask(oti::load_mask(path, threshold));
      },
      py::arg("path"), py::arg("threshold") = 0.5);
  m.def(
      "save_planar_raw",
      [](const DoubleArray& image, const std::string& path) {
        oti::save_planar_raw(image_from_array(image), path);
      },
      py::arg("image"), py::arg("path"));

  // --- texture and measures ---
  m.def(
      "texture_map",
      [](const DoubleArray& image, const std::string& op, const std::string& combine) {
        const auto tensor = image_from_array(image);
        const auto map = oti::convolve_texture(tensor, make_operator(op, combine));
        return array_from_planar(map.data, map.channels, map.height, map.width);
      },
      py::arg("image"), py::arg("op") = "sobel", py::arg("combine") = "l2");
  m.def(
      "iti",
      [](const DoubleArray& image, const std::string& op, const std::string& combine) {
        return oti::iti(image_from_array(image), make_operator(op, combine));
      },
      py::arg("image"), py::arg("op") = "sobel", py::arg("combine") = "l2");
  m.def(
      "oar",
      [](const DoubleArray& image, const MaskArray& mask) {
        return oti::oar(image_from_array(image), mask_from_array(mask));
      },
      py::arg("image"), py::arg("mask"));
  m.def(
      "oti",
      [](const DoubleArray& image, const MaskArray& mask, const std::string& op,
         const std::string& combine) {
        return oti::oti(image_from_array(image), mask_from_array(mask),
                        make_operator(op, combine));
      },
      py::arg("image"), py::arg("mask"), py::arg("op") = "sobel", py::arg("combine") = "l2");

  // --- ranking and selection ---
  m.def(
      "rank",
      [](const std::vector<std::pair<std::string, double>>& values) {
        std::vector<oti::MeasureRecord> records;
        for (const auto& [id, value] : values) {
          oti::MeasureRecord r;
          r.image_id = id;
          r.oti = value;
          records.push_back(std::move(r));
        }
        return oti::rank(records, oti::MeasureKind::oti).entries;
      },
      py::arg("values"),
      "Sort (image_id, value) pairs ascending by value with id tie-breaks.");
  m.def(
      "select_top_alpha",
      [](const std::vector<std::pair<std::string, double>>& ranked_entries, double alpha,
         const std::string& strategy, uint64_t seed) {
        oti::RankedCorpus ranked;
        ranked.entries = ranked_entries;
        ranked.measure_name = "oti";
        oti::SelectionSpec spec;
        spec.alpha = alpha;
        spec.strategy = oti::strategy_from_string(strategy);
        spec.seed = seed;
        return oti::select_top_alpha(ranked, spec);
      },
      py::arg("ranked"), py::arg("alpha"), py::arg("strategy") = "measure",
      py::arg("seed") = 0);

  // --- evaluation ---
  m.def(
      "seg_metrics",
      [](const MaskArray& pred, const MaskArray& truth) {
        const auto s = oti::seg_metrics(mask_from_array(pred), mask_from_array(truth));
        return py::make_tuple(s.precision, s.f1, s.iou);
      },
      py::arg("pred"), py::arg("truth"), "Returns (precision, f1, iou).");
  m.def(
      "spearman",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        return oti::spearman_rho(x, y);
      },
      py::arg("x"), py::arg("y"));

  // --- frequency ---
  m.def(
      "band_energy",
      [](const DoubleArray& image, double r_low, double r_high) {
        const auto buffer = image.request();
        oti::BandCutoffs cutoffs{r_low, r_high};
        oti::BandEnergy e;
        if (buffer.ndim == 2) {
          e = oti::band_energy_raw(static_cast<const double*>(buffer.ptr), 1,
                                   static_cast<int>(buffer.shape[0]),
                                   static_cast<int>(buffer.shape[1]), cutoffs);
        } else if (buffer.ndim == 3) {
          e = oti::band_energy_raw(static_cast<const double*>(buffer.ptr),
                                   static_cast<int>(buffer.shape[0]),
                                   static_cast<int>(buffer.shape[1]),
                                   static_cast<int>(buffer.shape[2]), cutoffs);
        } else {
          throw oti::Error(oti::ErrorKind::InvalidArgument,
                           "array must have shape (H, W) or (C, H, W)");
        }
        py::dict out;
        out["low"] = e.low;
        out["mid"] = e.mid;
        out["high"] = e.high;
        out["total"] = e.total;
        return out;
      },
      py::arg("image"), py::arg("r_low") = 0.125, py::arg("r_high") = 0.5,
      "Radial band energies of the mean-subtracted input (DC excluded).");

  // --- toy oracle ---
  py::class_<oti::ToyClassifier>(m, "ToyClassifier")
      .def_property_readonly("kind",
                             [](const oti::ToyClassifier& c) { return std::string(to_string(c.kind)); })
      .def_readonly("input_dim", &oti::ToyClassifier::input_dim)
      .def_readonly("hidden_dim", &oti::ToyClassifier::hidden_dim)
      .def_property_readonly(
          "params", [](const oti::ToyClassifier& c) { return array_from_vector(c.params); })
      .def("logit",
           [](const oti::ToyClassifier& c, const DoubleArray& x) {
             const auto tensor = image_from_array(x);
             return c.logit(tensor.data);
           })
      .def("predict",
           [](const oti::ToyClassifier& c, const DoubleArray& x) {
             const auto tensor = image_from_array(x);
             return c.predict(tensor.data);
           })
      .def("loss",
           [](const oti::ToyClassifier& c, const DoubleArray& x, int label) {
             const auto tensor = image_from_array(x);
             return c.loss(tensor.data, label);
           })
      .def("input_gradient", [](const oti::ToyClassifier& c, const DoubleArray& x, int label) {
        const auto tensor = image_from_array(x);
        return array_from_planar(c.input_gradient(tensor.data, label), tensor.channels,
                                 tensor.height, tensor.width);
      });

  m.def(
      "generate_corpus",
      [](std::size_t count, int side, uint64_t seed, double radius_min, double radius_max,
         double amplitude_min, double amplitude_max) {
        oti::SynthSpec spec;
        spec.count = count;
        spec.side = side;
        spec.seed = seed;
        spec.radius_min = radius_min;
        spec.radius_max = radius_max;
        spec.amplitude_min = amplitude_min;
        spec.amplitude_max = amplitude_max;
        py::list out;
        for (const auto& item : oti::generate_corpus(spec)) {
          py::dict d;
          d["image_id"] = item.image_id;
          d["image"] = array_from_image(item.image);
          d["mask"] = array_from_mask(item.mask);
          d["label"] = item.label;
          d["radius"] = item.radius;
          d["amplitude"] = item.amplitude;
          out.append(d);
        }
        return out;
      },
      py::arg("count") = 500, py::arg("side") = 16, py::arg("seed") = 1,
      py::arg("radius_min") = 2.0, py::arg("radius_max") = 6.0,
      py::arg("amplitude_min") = 0.02, py::arg("amplitude_max") = 0.45);

  m.def(
      "train",
      [](const std::string& kind, const std::vector<DoubleArray>& images,
         const std::vector<int>& labels, double learning_rate, int epochs, uint64_t seed,
         int hidden_dim) {
        if (images.size() != labels.size()) {
          throw oti::Error(oti::ErrorKind::InvalidArgument, "images/labels length mismatch");
        }
        std::vector<oti::TrainExample> corpus;
        for (std::size_t i = 0; i < images.size(); ++i) {
          corpus.push_back({image_from_array(images[i]).data, labels[i]});
        }
        oti::TrainConfig config;
        config.learning_rate = learning_rate;
        config.epochs = epochs;
        config.seed = seed;
        config.hidden_dim = hidden_dim;
        const auto result = oti::train(oti::toy_kind_from_string(kind), corpus, config);
        py::dict out;
        out["model"] = result.model;
        out["epoch_loss"] = result.epoch_loss;
        out["train_accuracy"] = result.train_accuracy;
        return out;
      },
      py::arg("kind"), py::arg("images"), py::arg("labels"), py::arg("learning_rate") = 1.0,
      py::arg("epochs") = 4000, py::arg("seed") = 1, py::arg("hidden_dim") = 32);

  auto attack_to_dict = [](const oti::AttackResult& result, int channels, int height,
                           int width) {
    py::dict out;
    out["success"] = result.success;
    out["epsilon_used"] = result.epsilon_used;
    if (result.minimal_epsilon) {
      out["minimal_epsilon"] = *result.minimal_epsilon;
    } else {
      out["minimal_epsilon"] = py::none();
    }
    if (result.perturbation) {
      out["perturbation"] = array_from_planar(*result.perturbation, channels, height, width);
    } else {
      out["perturbation"] = py::none();
    }
    return out;
  };

  m.def(
      "fgsm",
      [attack_to_dict](const oti::ToyClassifier& model, const DoubleArray& image, int label,
                       double epsilon) {
        const auto tensor = image_from_array(image);
        return attack_to_dict(oti::fgsm(model, tensor, label, epsilon), tensor.channels,
                              tensor.height, tensor.width);
      },
      py::arg("model"), py::arg("image"), py::arg("label"), py::arg("epsilon"));
  m.def(
      "minimal_epsilon",
      [attack_to_dict](const oti::ToyClassifier& model, const DoubleArray& image, int label,
                       double tol) {
        const auto tensor = image_from_array(image);
        return attack_to_dict(oti::minimal_epsilon(model, tensor, label, tol),
                              tensor.channels, tensor.height, tensor.width);
      },
      py::arg("model"), py::arg("image"), py::arg("label"), py::arg("tol") = 1e-4);
  m.def(
      "boundary_distance_linear",
      [](const oti::ToyClassifier& model, const DoubleArray& image) {
        return oti::boundary_distance_linear(model, image_from_array(image));
      },
      py::arg("model"), py::arg("image"));
}
