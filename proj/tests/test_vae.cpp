#include <doctest.h>

#include <cmath>
#include <random>

#include "ecgvae/synth.hpp"
#include "ecgvae/train.hpp"
#include "ecgvae/vae.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace ecgvae;

namespace {

std::vector<CardiacCycle> small_dataset(std::size_t n, std::uint64_t seed) {
  CorpusConfig cfg;
  std::vector<CardiacCycle> out;
  for (std::size_t i = 0; i < n; ++i) {
    MorphologyParams p = sample_morphology(cfg, 70, seed * 1000 + i);
    p.noise_std_mv = 0.02;
    out.push_back(gen_cycle(p).cycle);
  }
  return out;
}

const Model& shared_model() {
  static const Model m = Model::initialized({}, 42);
  return m;
}

}  // namespace

TEST_CASE("architecture shape contract") {
  const auto expected = [] {
    ShapeReport r;
    r.input = {400};
    r.encoder_conv = {25};
    r.encoder_dense = {25};
    r.encoder_concat = {50};
    r.mu = {25};
    r.logvar = {25};
    r.decoder_conv = {400};
    r.decoder_dense = {400};
    r.decoder_concat = {800};
    r.output = {400};
    return r;
  }();
  CHECK(infer_shapes({}) == expected);
  CHECK(shared_model().probe_shapes() == expected);
}

TEST_CASE("manifest lists the layer stack in order") {
  const auto m = shared_model().manifest();
  REQUIRE(!m.empty());
  CHECK(m.front().name == "encoder.conv.0");
  CHECK(m.front().spec == nn::LayerSpec::conv(1, 16, 5));
  std::size_t pools = 0, ups = 0;
  for (const auto& e : m) {
    pools += e.spec.kind == nn::LayerKind::maxpool1d;
    ups += e.spec.kind == nn::LayerKind::upsample_nearest1d;
  }
  CHECK(pools == 4);
  CHECK(ups == 4);
  CHECK(m.back().spec == nn::LayerSpec::dense(800, 400));
}

TEST_CASE("arch validation") {
  ArchConfig a;
  a.kernel = 4;
  CHECK_THROWS_AS(a.validate(), ParameterError);
  a = {};
  a.encoder_conv_channels = {16, 32, 64};
  CHECK_THROWS_AS(a.validate(), ParameterError);
}

TEST_CASE("encode") {
  const Model& model = shared_model();
  const auto cycles = small_dataset(2, 1);
  const auto code = encode(model, cycles[0]);
  CHECK(code.mu.size() == 25);
  CHECK(code.logvar.size() == 25);
  const auto again = encode(model, cycles[0]);
  CHECK(code.mu == again.mu);
  CHECK(code.logvar == again.logvar);

  CardiacCycle flat;
  flat.samples.assign(400, 0.0f);
  const auto zero = encode(model, flat);
  for (float v : zero.mu) CHECK(std::isfinite(v));
  for (float v : zero.logvar) CHECK(std::isfinite(v));

  CardiacCycle bad;
  bad.samples.assign(399, 0.0f);
  CHECK_THROWS_AS(encode(model, bad), DimensionError);
}

TEST_CASE("decode") {
  const Model& model = shared_model();
  std::vector<float> z(25, 0.3f);
  const auto a = decode(model, z);
  CHECK(a.samples.size() == 400);
  CHECK(decode(model, z).samples == a.samples);
  CHECK_THROWS_AS(decode(model, std::vector<float>(24)), DimensionError);
}

TEST_CASE("batched and single-cycle paths agree") {
  const Model& model = shared_model();
  const auto cycles = small_dataset(3, 2);
  const auto x = stack_cycles(cycles);
  const auto [mu, logvar] = model.encode_batch(x);
  for (std::size_t r = 0; r < 3; ++r) {
    const auto code = encode(model, cycles[r]);
    for (std::size_t i = 0; i < 25; ++i) CHECK(mu[r * 25 + i] == code.mu[i]);
  }
}

TEST_CASE("reparameterize") {
  LatentCode<double> code;
  code.mu = {0.5, -1.0};
  code.logvar = {0.3, -0.2};
  CHECK(reparameterize<double>(code, std::vector<double>{0, 0}) == code.mu);

  code.logvar = {0, 0};
  const auto z = reparameterize<double>(code, std::vector<double>{0.25, 2});
  CHECK(z[0] == doctest::Approx(0.75));
  CHECK(z[1] == doctest::Approx(1.0));

  LatentCode<double> four;
  four.mu.assign(25, 0.0);
  four.logvar.assign(25, std::log(4.0));
  for (double v : reparameterize<double>(four, std::vector<double>(25, 1.0)))
    CHECK(v == doctest::Approx(2.0));

  SUBCASE("sample mean converges to mu") {
    LatentCode<double> c;
    c.mu = {1.5};
    c.logvar = {std::log(9.0)};
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    for (std::size_t n : {100, 10000}) {
      double acc = 0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += reparameterize<double>(c, std::vector<double>{normal(rng)})[0];
      }
      // 5 standard errors of a sigma = 3 draw
      CHECK(std::abs(acc / double(n) - 1.5) < 5 * 3 / std::sqrt(double(n)));
    }
  }
}

TEST_CASE("kl_loss closed form") {
  const std::vector<double> zero{0, 0, 0};
  CHECK(kl_loss<double>(zero, zero) == 0.0);
  CHECK(kl_loss<double>(std::vector<double>{1}, std::vector<double>{0}) == doctest::Approx(0.5));
  CHECK(kl_loss<double>(std::vector<double>{0}, std::vector<double>{1}) ==
        doctest::Approx((std::exp(1.0) - 2) / 2).epsilon(1e-12));
  CHECK((std::exp(1.0) - 2) / 2 == doctest::Approx(0.35914).epsilon(1e-5));

  SUBCASE("non-negative and zero only at the prior") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int i = 0; i < 1000; ++i) {
      const std::vector<double> mu{u(rng)}, lv{u(rng)};
      CHECK(kl_loss<double>(mu, lv) > 0.0);
    }
  }
  SUBCASE("matches numerical integration on a 17 x 17 grid") {
    double worst = 0;
    for (int i = 0; i < 17; ++i)
      for (int j = 0; j < 17; ++j) {
        const double mu = -2 + 0.25 * i, lv = -2 + 0.25 * j;
        const double closed = kl_loss<double>(std::vector<double>{mu}, std::vector<double>{lv});
        worst = std::max(worst, std::abs(closed - oracle::kl_by_quadrature(mu, lv)));
      }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("recon_loss") {
  std::vector<double> x(400, 0.0), ones(400, 1.0);
  CHECK(recon_loss<double>(x, x) == 0.0);
  CHECK(recon_loss<double>(x, ones) == 1.0);
  std::vector<double> spike(400, 0.0);
  spike[0] = 2;
  CHECK(recon_loss<double>(x, spike) == doctest::Approx(0.01));
  CHECK_THROWS_AS(recon_loss<double>(x, std::vector<double>(399)), DimensionError);
}

TEST_CASE("end-to-end loss gradient matches finite differences") {
  CHECK(gradcheck::check_vae_loss(0) < 1e-3);
}

TEST_CASE("train") {
  const auto data = small_dataset(12, 3);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 4;
  cfg.seed = 5;
  cfg.eval_fraction = 0.2;
  const auto result = train(data, cfg);
  CHECK(result.history.size() == 1);
  const Model init = Model::initialized({}, result.model.init_seed);
  bool changed = false;
  auto a = result.model.parameters();
  auto b = init.parameters();
  for (std::size_t i = 0; i < a.size(); ++i) changed = changed || !(a[i]->value == b[i]->value);
  CHECK(changed);
  CHECK(result.model.training_config == cfg);

  SUBCASE("same seed reproduces bit-for-bit") {
    const auto again = train(data, cfg);
    CHECK(again.history == result.history);
    auto c = again.model.parameters();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i]->value == c[i]->value);
  }
  SUBCASE("empty dataset and bad config are rejected") {
    CHECK_THROWS_AS(train({}, cfg), ParameterError);
    TrainConfig bad = cfg;
    bad.eval_fraction = 1.0;
    CHECK_THROWS_AS(train(data, bad), ParameterError);
  }
}

TEST_CASE("split_dataset") {
  const auto s = split_dataset(100, 0.1, 7);
  CHECK(s.eval.size() == 10);
  CHECK(s.train.size() == 90);
  std::vector<bool> seen(100, false);
  for (auto i : s.eval) seen[i] = true;
  for (auto i : s.train) {
    CHECK_FALSE(seen[i]);
    seen[i] = true;
  }
  const auto small = split_dataset(3, 0.01, 1);
  CHECK(small.eval.size() == 1);
  CHECK(small.train.size() == 2);
}

TEST_CASE("float model cast to double keeps outputs close") {
  const Model& model = shared_model();
  const auto m64 = model.cast<double>();
  const auto cycles = small_dataset(1, 9);
  const auto c32 = model.encode(std::span<const float>(cycles[0].samples));
  std::vector<double> x(cycles[0].samples.begin(), cycles[0].samples.end());
  const auto c64 = m64.encode(std::span<const double>(x));
  for (std::size_t i = 0; i < 25; ++i) CHECK(c32.mu[i] == doctest::Approx(c64.mu[i]).epsilon(1e-4));
}
