#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ecgvae/config.hpp"
#include "ecgvae/errors.hpp"
#include "ecgvae/synth.hpp"

using namespace ecgvae;

TEST_CASE("gen_cycle") {
  SUBCASE("zero amplitudes and no noise give a flat cycle") {
    MorphologyParams p;
    for (Wave* w : {&p.p, &p.q, &p.r, &p.s, &p.t}) w->amplitude_mv = 0;
    // R must still dominate for validation; zero everywhere is allowed.
    const auto c = gen_cycle(p);
    CHECK(c.cycle.samples.size() == 400);
    for (float v : c.cycle.samples) CHECK(v == 0.0f);
  }
  SUBCASE("default morphology peaks at index 200") {
    const auto c = gen_cycle(MorphologyParams{});
    CHECK(c.r_index == 200);
    const auto& s = c.cycle.samples;
    CHECK(std::max_element(s.begin(), s.end()) - s.begin() == 200);
  }
  SUBCASE("P wave value 80 samples before R") {
    const auto c = gen_cycle(MorphologyParams{});
    CHECK(std::abs(c.cycle.samples[120] - 0.15f) <= 0.02f);
    CHECK(morphology_value(MorphologyParams{}, -0.16) == doctest::Approx(0.15).epsilon(0.1));
  }
  SUBCASE("output bounded by amplitude sum plus six noise sigmas") {
    MorphologyParams p;
    p.noise_std_mv = 0.05;
    double bound = 6 * p.noise_std_mv;
    for (const Wave& w : p.waves()) bound += std::abs(w.amplitude_mv);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      p.seed = seed;
      for (float v : gen_cycle(p).cycle.samples) CHECK(std::abs(v) <= bound);
    }
  }
}

TEST_CASE("morphology validation") {
  MorphologyParams p;
  p.r.width_s = 0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p = {};
  p.heart_rate_bpm = 250;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p = {};
  p.s.amplitude_mv = -2.0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
}

TEST_CASE("gen_record") {
  SUBCASE("60 bpm over 10 s has 10 beats spaced 500 samples") {
    MorphologyParams p;
    p.heart_rate_bpm = 60;
    const auto r = gen_record(p, 10.0);
    CHECK(r.record.length() == 5000);
    REQUIRE(r.r_peaks.size() == 10);
    for (std::size_t i = 1; i < r.r_peaks.size(); ++i) CHECK(r.r_peaks[i] - r.r_peaks[i - 1] == 500);
  }
  SUBCASE("75 bpm over 9 s has 11 beats") {
    MorphologyParams p;
    p.heart_rate_bpm = 75;
    CHECK(gen_record(p, 9.0).r_peaks.size() == 11);
  }
  SUBCASE("seeded jitter is reproducible") {
    MorphologyParams p;
    p.hr_jitter_fraction = 0.05;
    p.noise_std_mv = 0.02;
    p.seed = 77;
    const auto a = gen_record(p, 10.0);
    const auto b = gen_record(p, 10.0);
    CHECK(a.record == b.record);
    CHECK(a.r_peaks == b.r_peaks);
  }
  SUBCASE("true R positions are the per-beat maxima without noise") {
    MorphologyParams p;
    p.heart_rate_bpm = 80;
    const auto r = gen_record(p, 10.0);
    const auto& lead = r.record.leads[0];
    for (std::size_t idx : r.r_peaks) {
      const std::size_t lo = idx - 100, hi = idx + 100;
      const auto it = std::max_element(lead.begin() + long(lo), lead.begin() + long(hi));
      CHECK(std::size_t(it - lead.begin()) == idx);
    }
  }
}

TEST_CASE("gen_corpus") {
  CorpusConfig cfg;
  CHECK(gen_corpus(1, cfg, 3).size() == 1);
  const auto a = gen_corpus(5, cfg, 11);
  const auto b = gen_corpus(5, cfg, 11);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].record == b[i].record);
    CHECK(a[i].r_peaks == b[i].r_peaks);
  }
  CHECK(a[0].record.record_id == "rec00000");
  CHECK_FALSE(gen_corpus(5, cfg, 12)[0].record == a[0].record);

  SUBCASE("beat yield near n * leads * expected beats") {
    // E[floor(D * hr / 60)] for hr ~ U[lo, hi], by midpoint quadrature.
    double expected = 0;
    const int steps = 10000;
    for (int i = 0; i < steps; ++i) {
      const double hr = cfg.heart_rate_bpm.first +
                        (i + 0.5) / steps * (cfg.heart_rate_bpm.second - cfg.heart_rate_bpm.first);
      expected += std::floor(cfg.duration_s * hr / 60.0) / steps;
    }
    cfg.leads = 2;
    const auto corpus = gen_corpus(200, cfg, 5);
    std::size_t beats = 0;
    for (const auto& r : corpus) beats += r.r_peaks.size() * r.record.leads.size();
    CHECK(std::abs(double(beats) / (200.0 * 2 * expected) - 1.0) < 0.10);
  }
}

TEST_CASE("corpus config overrides") {
  CorpusConfig cfg;
  cfg.apply({{"heart_rate_bpm", "60,70"}, {"leads", "3"}});
  CHECK(cfg.heart_rate_bpm == CorpusConfig::Range{60, 70});
  CHECK(cfg.leads == 3);
  CHECK_THROWS_AS(cfg.apply({{"nonsense", "1"}}), ParameterError);
  CHECK_THROWS_AS(cfg.apply({{"heart_rate_bpm", "70,60"}}), ParameterError);
  const auto corpus = gen_corpus(2, cfg, 1);
  CHECK(corpus[0].record.leads.size() == 3);
}

TEST_CASE("shipped corpus config matches the built-in defaults") {
  CorpusConfig cfg;
  cfg.heart_rate_bpm = {100, 110};
  cfg.apply(load_config(std::string(ECGVAE_SOURCE_DIR) + "/configs/corpus_default.cfg"));
  CHECK(cfg == CorpusConfig{});
}
