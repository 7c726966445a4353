#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "../support/gradcheck.hpp"
#include "../support/tiny.hpp"
#include "twvae/layers.hpp"
#include "twvae/models.hpp"

using namespace twvae;
using twvae::testing::check_gradients;
using twvae::testing::smooth_batch;
using twvae::testing::tiny_config;

namespace {

Tensor probe(const Tensor& t) {
  std::vector<double> w(t.numel());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::cos(0.9 * static_cast<double>(i) + 0.2);
  return sum(mul(t, Tensor(t.shape(), w)));
}

ModelConfig default_config(Variant v) {
  ModelConfig c;
  c.variant = v;
  return c;
}

void set_all(Tensor& t, double v) {
  for (double& x : t.mutable_values()) x = v;
}

}  // namespace

TEST_CASE("default parameter counts") {
  // spatial convs 112 + 1568 + 6208 + 6176, heads 2 x 2403
  const std::size_t spatial = 14064 + 4806;
  // temporal convs 112 + 1568 + 3104 + 6208 + 12352 + 12352, head 1600 x 50 + 50
  const std::size_t temporal = 35696 + 80050;
  // g(s): 1 -> 500 -> 500 -> 64
  const std::size_t time_net = 1000 + 250500 + 32064;
  // T(z): 3 -> 200 -> 128, or 3 -> 128 directly
  const std::size_t latent_net = 800 + 25728, latent_linear = 512;
  // beta decoder: fc 3 -> 800, convs 32 -> 20 -> 20 -> 2
  const std::size_t beta_decoder = 3200 + 1940 + 1220 + 122;

  Rng rng(70);
  CHECK(ModelBundle(default_config(Variant::timewarp_vae), rng).parameter_count() == spatial + temporal + time_net + latent_net);
  CHECK(ModelBundle(default_config(Variant::no_timewarp), rng).parameter_count() == spatial + time_net + latent_net);
  CHECK(ModelBundle(default_config(Variant::timewarp_vae_dtw), rng).parameter_count() == spatial + time_net + latent_net);
  CHECK(ModelBundle(default_config(Variant::no_nonlinearity), rng).parameter_count() ==
        spatial + temporal + time_net + latent_linear);
  CHECK(ModelBundle(default_config(Variant::beta_vae), rng).parameter_count() == spatial + beta_decoder);
  for (Variant v : twvae::testing::all_variants()) {
    const ModelBundle b(default_config(v), rng);
    const auto shapes = expected_parameter_shapes(b.config());
    REQUIRE(shapes.size() == b.params().size());
    for (const auto& [name, t] : b.params()) CHECK(shapes.at(name) == t.shape());
  }
}

TEST_CASE("default shapes through every stage") {
  CHECK(trunk_output_length(200, 3, {1, 2, 2, 2}) == 25);
  CHECK(trunk_output_length(200, 3, {1, 2, 1, 2, 1, 2}) == 25);
  CHECK(beta_base_length(default_config(Variant::beta_vae)) == 25);
  Rng rng(71);
  const Tensor x = smooth_batch(2, 200, 2, rng);
  const auto grid = uniform_grid(200);

  const ModelBundle tw(default_config(Variant::timewarp_vae), rng);
  const EncodedBatch code = encode_spatial(tw, x);
  CHECK(code.mean.shape() == Shape{2, 3});
  CHECK(code.log_var.shape() == Shape{2, 3});
  const Tensor theta = encode_temporal(tw, x);
  CHECK(theta.shape() == Shape{2, 50});
  // Zero-initialized head: an untrained model does not warp.
  for (double v : theta.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
  const ForwardResult r = forward(tw, x, grid, &rng, true);
  CHECK(r.reconstruction.shape() == Shape{2, 200, 2});
  CHECK(r.z.shape() == Shape{2, 3});

  const ModelBundle beta(default_config(Variant::beta_vae), rng);
  const ForwardResult rb = forward(beta, x, grid, nullptr, false);
  CHECK(rb.reconstruction.shape() == Shape{2, 200, 2});
  CHECK_FALSE(rb.theta.defined());
  CHECK_THROWS_AS(encode_temporal(beta, x), std::invalid_argument);
  CHECK_THROWS_AS(time_features(beta, Tensor({1, 2}, {0.0, 1.0})), std::invalid_argument);
}

TEST_CASE("forward rejects bad inputs") {
  Rng rng(72);
  const ModelBundle b(tiny_config(Variant::timewarp_vae), rng);
  const auto grid = uniform_grid(16);
  CHECK_THROWS(forward(b, smooth_batch(1, 15, 2, rng), uniform_grid(15), nullptr, false));
  CHECK_THROWS(forward(b, smooth_batch(1, 16, 3, rng), grid, nullptr, false));
  CHECK_THROWS(forward(b, smooth_batch(1, 16, 2, rng), grid, nullptr, true));
  CHECK_THROWS(decode(b, 1.5, std::vector<double>{0.0, 0.0}));
  CHECK_THROWS(decode(b, 0.5, std::vector<double>{0.0}));
}

TEST_CASE("bundle construction from parameters checks names and shapes") {
  Rng rng(73);
  const ModelBundle b(tiny_config(Variant::no_timewarp), rng);
  auto params = b.params();
  CHECK_NOTHROW(ModelBundle(b.config(), params));
  params["decoder.time.out.bias"] = Tensor::zeros({4}, true);
  CHECK_THROWS_AS(ModelBundle(b.config(), params), std::invalid_argument);
  params = b.params();
  params["extra.weight"] = Tensor::zeros({1}, true);
  CHECK_THROWS_AS(ModelBundle(b.config(), params), std::invalid_argument);
  params = b.params();
  params.erase("spatial.mean.bias");
  CHECK_THROWS_AS(ModelBundle(b.config(), params), std::invalid_argument);

  ModelBundle copy = b.clone();
  set_all(copy.param("spatial.mean.bias"), 5.0);
  CHECK(b.param("spatial.mean.bias")[0] != 5.0);
}

TEST_CASE("encoders and decoders pass finite-difference checks") {
  for (Variant v : twvae::testing::all_variants()) {
    CAPTURE(to_string(v));
    Rng rng(74);
    ModelBundle b(tiny_config(v), rng);
    if (has_temporal_encoder(v)) {
      // Move the warp head off zero so its gradients are generic.
      for (double& w : b.param("temporal.out.weight").mutable_values()) w = rng.uniform(-0.3, 0.3);
    }
    Tensor x = smooth_batch(3, 16, 2, rng);
    x = Tensor(x.shape(), std::vector<double>(x.values().begin(), x.values().end()), true);
    std::vector<Tensor> leaves = b.parameter_list();
    leaves.push_back(x);

    CHECK(check_gradients([&] { return probe(encode_spatial(b, x).mean); }, leaves).max_relative_error < 1e-6);
    CHECK(check_gradients([&] { return probe(encode_spatial(b, x).log_var); }, leaves).max_relative_error < 1e-6);
    if (has_temporal_encoder(v)) {
      CHECK(check_gradients([&] { return probe(encode_temporal(b, x)); }, leaves).max_relative_error < 1e-6);
    }
    Tensor z = uniform_tensor({3, 2}, -1.0, 1.0, rng, true);
    std::vector<Tensor> dec_leaves = b.parameter_list();
    dec_leaves.push_back(z);
    if (has_factorized_decoder(v)) {
      Tensor s = uniform_tensor({3, 16}, 0.05, 0.95, rng, true);
      dec_leaves.push_back(s);
      CHECK(check_gradients([&] { return probe(decode_factorized(b, s, z)); }, dec_leaves).max_relative_error < 1e-6);
    } else {
      CHECK(check_gradients([&] { return probe(decode_convolutional(b, z)); }, dec_leaves).max_relative_error < 1e-6);
    }
  }
}

TEST_CASE("no_nonlinearity decoder is affine in z") {
  Rng rng(75);
  const ModelBundle b(tiny_config(Variant::no_nonlinearity), rng);
  const std::vector<double> s{0.0, 0.13, 0.5, 0.77, 1.0};
  const std::vector<double> z1{0.4, -1.2}, z2{-0.7, 0.9}, zero{0.0, 0.0};
  const auto f0 = decode(b, s, zero);
  auto centered = [&](std::vector<double> z) {
    auto f = decode(b, s, z);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] -= f0[i];
    return f;
  };
  const auto g1 = centered(z1), g2 = centered(z2);
  const auto g12 = centered({z1[0] + z2[0], z1[1] + z2[1]});
  const auto g3 = centered({-2.5 * z1[0], -2.5 * z1[1]});
  for (std::size_t i = 0; i < g1.size(); ++i) {
    CHECK(std::abs(g12[i] - (g1[i] + g2[i])) < 1e-12);
    CHECK(std::abs(g3[i] + 2.5 * g1[i]) < 1e-12);
  }
  for (double alpha : {0.0, 0.25, 0.5, 0.9}) {
    const auto mix = decode(b, s, std::vector<double>{alpha * z1[0] + (1 - alpha) * z2[0], alpha * z1[1] + (1 - alpha) * z2[1]});
    const auto a = decode(b, s, z1), c = decode(b, s, z2);
    for (std::size_t i = 0; i < mix.size(); ++i) CHECK(std::abs(mix[i] - (alpha * a[i] + (1 - alpha) * c[i])) < 1e-12);
  }
  // With the hidden layer present the same identity fails.
  const ModelBundle nl(tiny_config(Variant::timewarp_vae), rng);
  const auto m = decode(nl, s, std::vector<double>{0.5 * (z1[0] + z2[0]), 0.5 * (z1[1] + z2[1])});
  const auto a = decode(nl, s, z1), c = decode(nl, s, z2);
  double gap = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) gap = std::max(gap, std::abs(m[i] - 0.5 * (a[i] + c[i])));
  CHECK(gap > 1e-6);
}

TEST_CASE("zeroing the last decoder layer gives a zero trajectory") {
  Rng rng(76);
  ModelBundle b(tiny_config(Variant::timewarp_vae), rng);
  set_all(b.param("decoder.latent.out.weight"), 0.0);
  set_all(b.param("decoder.latent.out.bias"), 0.0);
  for (double v : decode(b, uniform_grid(16), std::vector<double>{0.3, -2.0})) CHECK(v == 0.0);
  ModelBundle beta(tiny_config(Variant::beta_vae), rng);
  set_all(beta.param("decoder.conv.conv2.kernels"), 0.0);
  set_all(beta.param("decoder.conv.conv2.bias"), 0.0);
  const Trajectory flat = decode_canonical(beta, std::vector<double>{1.0, 1.0});
  for (double v : flat.samples()) CHECK(v == 0.0);
}

TEST_CASE("reparameterization has the right moments") {
  Rng rng(77);
  const std::size_t n = 100000;
  std::vector<double> mu, lv;
  for (std::size_t i = 0; i < n; ++i) {
    mu.insert(mu.end(), {0.5, -1.0});
    lv.insert(lv.end(), {std::log(0.25), std::log(4.0)});
  }
  const Tensor z = reparameterize(Tensor({n, 2}, mu), Tensor({n, 2}, lv), rng);
  const double want_mean[2] = {0.5, -1.0}, want_var[2] = {0.25, 4.0};
  for (std::size_t d = 0; d < 2; ++d) {
    double m = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += z[i * 2 + d];
    m /= n;
    for (std::size_t i = 0; i < n; ++i) m2 += (z[i * 2 + d] - m) * (z[i * 2 + d] - m);
    m2 /= n - 1;
    CHECK(std::abs(m - want_mean[d]) < 5.0 * std::sqrt(want_var[d] / n));
    // Var of the sample variance is 2 sigma^4 / n for Gaussians.
    CHECK(std::abs(m2 - want_var[d]) < 5.0 * want_var[d] * std::sqrt(2.0 / n));
  }
}

TEST_CASE("log-variance clamp keeps the sample at the mean") {
  Rng rng(78);
  ModelBundle b(tiny_config(Variant::no_timewarp), rng);
  set_all(b.param("spatial.logvar.weight"), 0.0);
  set_all(b.param("spatial.logvar.bias"), -50.0);
  const ForwardResult r = forward(b, smooth_batch(4, 16, 2, rng), uniform_grid(16), &rng, true);
  for (double v : r.log_var.values()) CHECK(v == kLogVarMin);
  for (std::size_t i = 0; i < r.z.numel(); ++i) CHECK(std::abs(r.z[i] - r.mean[i]) < 1e-3);
}

TEST_CASE("identity warp reconstructs on the canonical grid") {
  Rng rng(79);
  const ModelBundle b(tiny_config(Variant::timewarp_vae), rng);
  const Tensor x = smooth_batch(3, 16, 2, rng);
  const auto grid = uniform_grid(16);
  const ForwardResult r = forward(b, x, grid, nullptr, false);
  const Tensor direct = decode_factorized(b, Tensor({1, 16}, grid), r.mean);
  for (std::size_t i = 0; i < direct.numel(); ++i) CHECK(std::abs(direct[i] - r.reconstruction[i]) < 1e-12);
  // Evaluation uses the posterior mean.
  for (std::size_t i = 0; i < r.z.numel(); ++i) CHECK(r.z[i] == r.mean[i]);
}

TEST_CASE("batched decode matches pointwise decode") {
  Rng rng(80);
  const ModelBundle b(tiny_config(Variant::timewarp_vae), rng);
  const std::vector<double> z{0.2, -0.4};
  std::vector<double> s(37);
  for (double& v : s) v = rng.uniform();
  const auto batched = decode(b, s, z);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto one = decode(b, s[i], z);
    CHECK(std::abs(one[0] - batched[2 * i]) < 1e-13);
    CHECK(std::abs(one[1] - batched[2 * i + 1]) < 1e-13);
  }
}

TEST_CASE("single-trajectory helpers resample to the model length") {
  Rng rng(81);
  const ModelBundle b(tiny_config(Variant::timewarp_vae), rng);
  const Tensor x = smooth_batch(1, 16, 2, rng);
  const Trajectory t(16, 2, {x.values().begin(), x.values().end()});
  const LatentCode code = encode_spatial(b, t);
  const EncodedBatch direct = encode_spatial(b, x);
  for (std::size_t d = 0; d < 2; ++d) CHECK(code.mean[d] == direct.mean[d]);
  CHECK(encode_temporal(b, t).segments() == 4);
  CHECK(reconstruct(b, resample(t, 40)).length() == 16);
}
