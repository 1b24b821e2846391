#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <complex>
#include <string>
#include <vector>

#include "sdagan/data_io.hpp"
#include "sdagan/gradcheck_suite.hpp"
#include "sdagan/metrics.hpp"
#include "sdagan/networks.hpp"
#include "sdagan/spectral.hpp"
#include "sdagan/trainer.hpp"

namespace py = pybind11;
using namespace sdagan;

namespace {

using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Grid<double> to_grid(const RealArray& a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-D array");
  const auto rows = static_cast<std::size_t>(a.shape(0)), cols = static_cast<std::size_t>(a.shape(1));
  return {rows, cols, std::vector<double>(a.data(), a.data() + rows * cols)};
}

py::array_t<std::complex<double>> to_complex(const ComplexGrid<double>& z) {
  py::array_t<std::complex<double>> out({z.rows, z.cols});
  auto* p = out.mutable_data();
  for (std::size_t i = 0; i < z.real.size(); ++i) p[i] = {z.real[i], z.imag[i]};
  return out;
}

ImageRecord to_image(const ByteArray& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw DimensionError("expected an H x W x 3 uint8 array");
  ImageRecord img;
  img.height = static_cast<std::size_t>(a.shape(0));
  img.width = static_cast<std::size_t>(a.shape(1));
  img.pixels.assign(a.data(), a.data() + 3 * img.width * img.height);
  return img;
}

py::array_t<std::uint8_t> from_image(const ImageRecord& img) {
  py::array_t<std::uint8_t> out({img.height, img.width, std::size_t{3}});
  std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
  return out;
}

std::vector<std::vector<double>> rows_of(const RealArray& a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-D array");
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(a.shape(0)));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  for (std::size_t r = 0; r < rows.size(); ++r) rows[r].assign(a.data() + r * cols, a.data() + (r + 1) * cols);
  return rows;
}

std::vector<Tensor<float>> tensors_of(const std::vector<ByteArray>& images, std::size_t size) {
  std::vector<Tensor<float>> out;
  for (const auto& a : images) out.push_back(normalize(resize_bilinear(to_image(a), size)));
  return out;
}

// Loads a checkpoint once and translates images with one of its generators.
class Translator {
 public:
  Translator(const std::filesystem::path& checkpoint, const std::string& direction)
      : state_(load_checkpoint(checkpoint)), ab_(direction == "ab") {
    if (direction != "ab" && direction != "ba") throw ArgumentError("direction must be 'ab' or 'ba'");
  }

  py::array_t<std::uint8_t> translate(const ByteArray& image) const {
    const Tensor<float> x = normalize(resize_bilinear(to_image(image), state_.image_size));
    return from_image(denormalize(generator_forward(ab_ ? state_.gen_ab : state_.gen_ba, x).image));
  }

  std::size_t image_size() const { return state_.image_size; }
  std::uint64_t iteration() const { return state_.iteration; }

 private:
  TrainState state_;
  bool ab_;
};

}  // namespace

PYBIND11_MODULE(_sdagan, m) {
  m.doc() = "sdagan C++ core";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<CheckpointError>(m, "CheckpointError", base.ptr());

  m.def("fft2d", [](const RealArray& a) { return to_complex(fft2d(to_grid(a))); }, py::arg("grid"),
        "Unnormalised 2-D DFT of a real power-of-two grid.");
  m.def(
      "ifft2d",
      [](const py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>& a) {
        if (a.ndim() != 2) throw DimensionError("expected a 2-D array");
        auto z = ComplexGrid<double>::zeros(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
        for (std::size_t i = 0; i < z.real.size(); ++i) {
          z.real[i] = a.data()[i].real();
          z.imag[i] = a.data()[i].imag();
        }
        return to_complex(ifft2d(z));
      },
      py::arg("spectrum"), "Inverse 2-D DFT including the 1/(HW) factor.");
  m.def(
      "spectral_profile",
      [](const RealArray& a) {
        const SpectralProfile p = spectral_profile(to_grid(a));
        py::dict d;
        d["radial_energy"] = p.radial_energy;
        d["high_freq_ratio"] = p.high_freq_ratio;
        return d;
      },
      py::arg("grid"));
  m.def("high_freq_ratio", [](const ByteArray& image) { return high_freq_ratio(normalize(to_image(image))); },
        py::arg("image"), "high_freq_ratio of the luminance of an H x W x 3 uint8 image.");

  m.def("read_ppm", [](const std::filesystem::path& p) { return from_image(read_ppm(p)); }, py::arg("path"));
  m.def("write_ppm", [](const std::filesystem::path& p, const ByteArray& a) { write_ppm(p, to_image(a)); },
        py::arg("path"), py::arg("image"));

  m.def(
      "fid", [](const RealArray& a, const RealArray& b) { return fid(compute_stats(rows_of(a)), compute_stats(rows_of(b))); },
      py::arg("features_a"), py::arg("features_b"), "FID between two N x D feature matrices.");
  m.def("inception_score", [](const RealArray& p) { return inception_score(rows_of(p)); }, py::arg("probs"));
  m.def(
      "matrix_sqrt",
      [](const RealArray& a) {
        const Grid<double> g = to_grid(a);
        if (g.rows != g.cols) throw DimensionError("expected a square matrix");
        const Matrix r = matrix_sqrt_psd(Matrix{g.rows, g.values});
        py::array_t<double> out({r.n, r.n});
        std::copy(r.values.begin(), r.values.end(), out.mutable_data());
        return out;
      },
      py::arg("matrix"));
  m.def(
      "evaluate",
      [](const std::vector<ByteArray>& real, const std::vector<ByteArray>& fake, std::size_t size) {
        const EvaluationReport r = evaluate_sets(tensors_of(real, size), tensors_of(fake, size));
        py::dict d;
        d["fid"] = r.fid;
        d["inception_score"] = r.inception_score;
        d["backend"] = std::string(kMetricsBackend);
        return d;
      },
      py::arg("real"), py::arg("fake"), py::arg("size") = 64);
  m.attr("metrics_backend") = std::string(kMetricsBackend);

  m.def(
      "gradcheck",
      [](std::uint64_t seed) {
        py::list out;
        for (const auto& r : run_gradcheck_suite(seed)) {
          py::dict d;
          d["name"] = r.name;
          d["max_rel_error"] = r.max_rel_error;
          d["tolerance"] = r.tolerance;
          d["passed"] = r.passed;
          out.append(d);
        }
        return out;
      },
      py::arg("seed") = 7);

  py::class_<Translator>(m, "Translator")
      .def(py::init<const std::filesystem::path&, const std::string&>(), py::arg("checkpoint"),
           py::arg("direction") = "ab")
      .def("translate", &Translator::translate, py::arg("image"))
      .def_property_readonly("image_size", &Translator::image_size)
      .def_property_readonly("iteration", &Translator::iteration);
}
