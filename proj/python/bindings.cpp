#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <stdexcept>

#include "twvae/alignment.hpp"
#include "twvae/checkpoint.hpp"
#include "twvae/csv_io.hpp"
#include "twvae/evaluate.hpp"
#include "twvae/models.hpp"
#include "twvae/rng.hpp"
#include "twvae/synth.hpp"
#include "twvae/timewarp.hpp"
#include "twvae/trajectory.hpp"

namespace py = pybind11;
using namespace twvae;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// A 1-D array is read as a single channel.
Trajectory to_trajectory(const Array& a) {
  if (a.ndim() != 1 && a.ndim() != 2) throw std::invalid_argument("expected a [T] or [T x n] array");
  const std::size_t rows = static_cast<std::size_t>(a.shape(0));
  const std::size_t cols = a.ndim() == 2 ? static_cast<std::size_t>(a.shape(1)) : 1;
  return Trajectory(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

Array to_array(const Trajectory& t) {
  Array out({t.length(), t.dims()});
  std::copy(t.samples().begin(), t.samples().end(), out.mutable_data());
  return out;
}

Array to_array(std::span<const double> v) {
  Array out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::vector<double> to_vector(const Array& a) { return {a.data(), a.data() + a.size()}; }

// A trained model together with its preprocessing. Inputs are raw
// trajectories of any length; outputs are returned in raw units.
class Model {
 public:
  explicit Model(const std::filesystem::path& path) : ck_(load_checkpoint(path)) {}

  std::string variant() const { return to_string(ck_.config.model.variant); }
  std::size_t latent_dim() const { return ck_.config.model.latent_dim; }
  std::size_t length() const { return ck_.config.model.length; }
  std::size_t epoch() const { return ck_.epoch; }

  py::tuple encode(const Array& x) const {
    const LatentCode c = encode_spatial(ck_.bundle, input(x));
    return py::make_tuple(to_array(c.mean), to_array(c.log_var));
  }

  Array warp_slopes(const Array& x) const {
    if (!has_temporal_encoder(ck_.config.model.variant)) throw std::invalid_argument(variant() + " has no temporal encoder");
    return to_array(encode_temporal(ck_.bundle, input(x)).slopes());
  }

  Array reconstruct(const Array& x) const { return to_array(ck_.preprocess.invert(twvae::reconstruct(ck_.bundle, input(x)))); }

  Array decode(const Array& z) const {
    return to_array(ck_.preprocess.invert(decode_canonical(ck_.bundle, to_vector(z))));
  }

  Array interpolate(const Array& a, const Array& b, double alpha) const {
    return to_array(ck_.preprocess.invert(interpolate_latent(ck_.bundle, input(a), input(b), alpha)));
  }

 private:
  Trajectory input(const Array& x) const {
    const Trajectory raw = to_trajectory(x);
    if (raw.dims() != ck_.config.model.channels)
      throw std::invalid_argument("model expects " + std::to_string(ck_.config.model.channels) + " channels");
    return resample(ck_.preprocess.apply(raw), ck_.config.model.length);
  }

  Checkpoint ck_;
};

}  // namespace

PYBIND11_MODULE(_twvae, m) {
  m.doc() = "Time-warping autoencoder core";

  m.def(
      "dtw",
      [](const Array& a, const Array& b) {
        const Alignment al = dtw_align(to_trajectory(a), to_trajectory(b));
        return py::make_tuple(al.cost, al.path.pairs);
      },
      py::arg("a"), py::arg("b"), "Alignment cost and index pairs between two [T x n] series.");
  m.def(
      "aligned_rmse",
      [](const Array& original, const Array& recon) { return aligned_rmse(to_trajectory(original), to_trajectory(recon)); },
      py::arg("original"), py::arg("reconstruction"));

  m.def(
      "slopes_from_logits", [](const Array& logits) { return to_array(coefficients_from_logits(to_vector(logits)).slopes()); },
      py::arg("logits"));
  m.def(
      "warp", [](const Array& slopes, double t) { return warp_eval(WarpCoefficients(to_vector(slopes)), t); },
      py::arg("slopes"), py::arg("t"));
  m.def(
      "warp_inverse", [](const Array& slopes, double s) { return warp_inverse(WarpCoefficients(to_vector(slopes)), s); },
      py::arg("slopes"), py::arg("s"));
  m.def(
      "warp_regularizer", [](const Array& slopes) { return warp_regularizer(WarpCoefficients(to_vector(slopes))); },
      py::arg("slopes"));

  m.def(
      "render_glyph",
      [](const Array& latents, const Array& slopes, std::size_t length) {
        return to_array(render_glyph(to_vector(latents), WarpCoefficients(to_vector(slopes)), length));
      },
      py::arg("latents"), py::arg("slopes"), py::arg("length") = 200);
  m.def(
      "synth",
      [](std::size_t count, std::uint64_t seed, std::size_t length, std::size_t latent_dims, double timing_spread) {
        Rng rng(seed);
        SynthOptions o;
        o.count = count;
        o.length = length;
        o.latent_dims = latent_dims;
        o.timing_spread = timing_spread;
        const SynthDataset ds = synth_dataset(rng, o);
        py::list trajs, latents, slopes;
        for (std::size_t i = 0; i < ds.data.trajectories.size(); ++i) {
          trajs.append(to_array(ds.data.trajectories[i]));
          latents.append(to_array(ds.latents[i]));
          slopes.append(to_array(ds.warps[i].slopes()));
        }
        return py::make_tuple(trajs, latents, slopes);
      },
      py::arg("count"), py::arg("seed") = 0, py::arg("length") = 200, py::arg("latent_dims") = 2,
      py::arg("timing_spread") = 0.5, "Synthetic glyph trajectories with their ground-truth latents and warp slopes.");

  m.def("load_csv", [](const std::filesystem::path& p) { return to_array(load_csv(p)); }, py::arg("path"));
  m.def(
      "save_csv", [](const std::filesystem::path& p, const Array& x) { save_csv(p, to_trajectory(x)); }, py::arg("path"),
      py::arg("trajectory"));

  py::class_<Model>(m, "Model")
      .def(py::init<const std::filesystem::path&>(), py::arg("checkpoint"))
      .def_property_readonly("variant", &Model::variant)
      .def_property_readonly("latent_dim", &Model::latent_dim)
      .def_property_readonly("length", &Model::length)
      .def_property_readonly("epoch", &Model::epoch)
      .def("encode", &Model::encode, py::arg("x"), "Posterior mean and log-variance.")
      .def("warp_slopes", &Model::warp_slopes, py::arg("x"))
      .def("reconstruct", &Model::reconstruct, py::arg("x"))
      .def("decode", &Model::decode, py::arg("z"))
      .def("interpolate", &Model::interpolate, py::arg("a"), py::arg("b"), py::arg("alpha"));
}
