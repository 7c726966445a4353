#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "../support/tiny.hpp"
#include "twvae/evaluate.hpp"
#include "twvae/training.hpp"

using namespace twvae;
using twvae::testing::smooth_batch;
using twvae::testing::tiny_config;

namespace {

std::vector<Trajectory> curves(std::size_t count, std::size_t length, Rng& rng) {
  const Tensor x = smooth_batch(count, length, 2, rng);
  std::vector<Trajectory> out;
  const std::size_t block = length * 2;
  for (std::size_t i = 0; i < count; ++i) {
    out.emplace_back(length, 2, std::vector<double>(x.values().begin() + i * block, x.values().begin() + (i + 1) * block));
  }
  return out;
}

std::vector<double> flat_params(const ModelBundle& b) {
  std::vector<double> v;
  for (const auto& [name, t] : b.params()) v.insert(v.end(), t.values().begin(), t.values().end());
  return v;
}

}  // namespace

TEST_CASE("zero learning rate leaves parameters unchanged") {
  Rng rng(100);
  ModelBundle b(tiny_config(Variant::timewarp_vae), rng);
  const auto before = flat_params(b);
  TrainOptions o;
  o.epochs = 3;
  o.batch_size = 4;
  o.learning_rate = 0.0;
  train(b, curves(10, 16, rng), o, rng);
  CHECK(flat_params(b) == before);
}

TEST_CASE("training is deterministic for a given seed") {
  Rng data_rng(101);
  const auto data = curves(9, 16, data_rng);
  auto run = [&] {
    Rng rng(5);
    ModelBundle b(tiny_config(Variant::timewarp_vae), rng);
    TrainOptions o;
    o.epochs = 4;
    o.batch_size = 4;
    o.learning_rate = 1e-3;
    const auto metrics = train(b, data, o, rng);
    return std::make_pair(flat_params(b), metrics.back().loss.total);
  };
  const auto a = run(), b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("training reduces the loss and reports every epoch") {
  for (Variant v : twvae::testing::all_variants()) {
    CAPTURE(to_string(v));
    Rng rng(102);
    ModelBundle b(tiny_config(v), rng);
    const auto data = curves(12, 16, rng);
    TrainOptions o;
    o.epochs = 200;
    o.batch_size = 5;  // last batch is short
    o.learning_rate = 3e-3;
    std::size_t seen = 0, checkpoints = 0;
    o.on_epoch = [&](const EpochMetrics& m) { CHECK(m.epoch == ++seen); };
    o.checkpoint_every = 50;
    o.on_checkpoint = [&](std::size_t epoch, const ModelBundle&) { CHECK(epoch % 50 == 0); ++checkpoints; };
    const auto metrics = train(b, data, o, rng);
    CHECK(metrics.size() == 200);
    CHECK(seen == 200);
    CHECK(checkpoints == 4);
    CHECK(metrics.back().loss.total < 0.5 * metrics.front().loss.total);
    for (const auto& m : metrics) {
      CHECK(m.loss.total == doctest::Approx(m.loss.reconstruction + m.loss.kl + m.loss.warp_reg).epsilon(1e-12));
    }
  }
}

TEST_CASE("non-finite loss stops training with the epoch named") {
  Rng rng(103);
  ModelBundle b(tiny_config(Variant::no_timewarp), rng);
  for (double& v : b.param("decoder.latent.out.bias").mutable_values()) v = 1e200;
  TrainOptions o;
  o.epochs = 2;
  try {
    train(b, curves(3, 16, rng), o, rng);
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
  }
}

TEST_CASE("loss evaluation is reproducible bit for bit") {
  Rng rng(104);
  const ModelBundle b(tiny_config(Variant::timewarp_vae), rng);
  const auto data = curves(5, 16, rng);
  const LossBreakdown a = evaluate_loss(b, data), c = evaluate_loss(b, data);
  CHECK(a.total == c.total);
  const Tensor x = batch_tensor(data);
  const ForwardResult r = forward(b, x, uniform_grid(16), nullptr, false);
  CHECK(compute_loss(b, r, x).breakdown.total == a.total);
}

TEST_CASE("rate accounting") {
  CHECK(rate_bits({LatentCode{{0.0, 0.0}, {0.0, 0.0}}}) == 0.0);
  // KL = m^2 / 2 = ln 2 is exactly one bit.
  const double m = std::sqrt(2.0 * std::log(2.0));
  CHECK(std::abs(rate_bits({LatentCode{{m, 0.0}, {0.0, 0.0}}}) - 1.0) < 1e-12);
  CHECK(std::abs(rate_bits({LatentCode{{m}, {0.0}}, LatentCode{{0.0}, {0.0}}}) - 0.5) < 1e-12);
  CHECK(rate_bits({}) == 0.0);
}

TEST_CASE("a model that outputs zero scores the data's RMS norm") {
  Rng rng(105);
  ModelBundle b(tiny_config(Variant::timewarp_vae), rng);
  for (const char* name : {"decoder.latent.out.weight", "decoder.latent.out.bias"}) {
    for (double& v : b.param(name).mutable_values()) v = 0.0;
  }
  const auto train_set = curves(4, 16, rng), test_set = curves(3, 16, rng);
  const EvalReport r = evaluate(b, train_set, test_set);
  auto rms_norm = [](const std::vector<Trajectory>& set) {
    double total = 0.0;
    for (const auto& t : set) {
      double s = 0.0;
      for (double v : t.samples()) s += v * v;
      total += std::sqrt(s / static_cast<double>(t.length()));
    }
    return total / static_cast<double>(set.size());
  };
  CHECK(r.train_aligned_rmse == doctest::Approx(rms_norm(train_set)).epsilon(1e-12));
  CHECK(r.test_aligned_rmse == doctest::Approx(rms_norm(test_set)).epsilon(1e-12));
  CHECK(r.train_errors.size() == 4);
  CHECK(r.test_errors.size() == 3);
  REQUIRE(r.rate_bits.has_value());
  CHECK(*r.rate_bits >= 0.0);
  CHECK(evaluate(b, train_set, {}).test_aligned_rmse == 0.0);
}

TEST_CASE("PCA baseline") {
  Rng rng(106);
  const auto train_set = curves(6, 8, rng), test_set = curves(4, 8, rng);
  // Six centered samples span at most five directions.
  CHECK(pca_baseline(train_set, test_set, 5, 8).train_aligned_rmse < 1e-9);
  double prev = INFINITY;
  for (std::size_t k = 1; k <= 5; ++k) {
    const EvalReport r = pca_baseline(train_set, test_set, k, 8);
    CHECK_FALSE(r.rate_bits.has_value());
    CHECK(r.train_aligned_rmse <= prev + 1e-12);
    prev = r.train_aligned_rmse;
  }
  CHECK_THROWS(pca_baseline(train_set, test_set, 0, 8));
  CHECK_THROWS(pca_baseline(train_set, test_set, 7, 8));

  // Data on a line in trajectory space is recovered by one component,
  // including held-out points on the same line.
  const Trajectory base = curves(1, 8, rng)[0], offset = curves(1, 8, rng)[0];
  auto on_line = [&](double c) {
    std::vector<double> v(16);
    for (std::size_t i = 0; i < 16; ++i) v[i] = offset.samples()[i] + c * base.samples()[i];
    return Trajectory(8, 2, v);
  };
  const EvalReport line = pca_baseline({on_line(-1), on_line(0.3), on_line(2)}, {on_line(5), on_line(-0.7)}, 1, 8);
  CHECK(line.train_aligned_rmse < 1e-9);
  CHECK(line.test_aligned_rmse < 1e-9);
}

TEST_CASE("latent interpolation endpoints") {
  Rng rng(107);
  const ModelBundle b(tiny_config(Variant::timewarp_vae), rng);
  const auto data = curves(2, 16, rng);
  const Trajectory at0 = interpolate_latent(b, data[0], data[1], 0.0);
  const Trajectory want = decode_canonical(b, encode_spatial(b, data[0]).mean);
  CHECK(at0 == want);
}
