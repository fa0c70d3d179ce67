#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ecgvae/record.hpp"
#include "ecgvae/vae.hpp"

namespace ecgvae {

/// One Gaussian bump a * exp(-(t - c)^2 / (2 w^2)); c is relative to the R peak.
struct Wave {
  double amplitude_mv = 0;
  double center_s = 0;
  double width_s = 0.01;

  bool operator==(const Wave&) const = default;
};

struct MorphologyParams {
  Wave p{0.15, -0.16, 0.025};
  Wave q{-0.10, -0.025, 0.010};
  Wave r{1.00, 0.0, 0.012};
  Wave s{-0.25, 0.025, 0.010};
  Wave t{0.30, 0.25, 0.050};
  double heart_rate_bpm = 75;
  double hr_jitter_fraction = 0;
  double noise_std_mv = 0;
  std::uint64_t seed = 0;

  std::array<Wave, 5> waves() const { return {p, q, r, s, t}; }
  void validate() const;
  bool operator==(const MorphologyParams&) const = default;
};

/// Noise-free waveform value at `t_s` seconds from the R peak.
double morphology_value(const MorphologyParams& params, double t_s);

struct SynthCycle {
  CardiacCycle cycle;
  std::size_t r_index = 0;
};

/// 400-sample window centred on R (R at index 200) plus white noise.
SynthCycle gen_cycle(const MorphologyParams& params, double fs = 500.0);

struct SynthRecord {
  EcgRecord record;
  std::vector<std::size_t> r_peaks;
};

/// Single-lead record. Beats are laid out in consecutive slots of one
/// (jittered) RR interval with R in the slot centre; a beat is kept only if
/// its whole slot fits, so an unjittered record holds floor(duration * hr / 60)
/// beats.
SynthRecord gen_record(const MorphologyParams& params, double duration_s, double fs = 500.0);

/// Multi-lead record sharing one rhythm (taken from leads[0]); each lead has
/// its own morphology and noise.
SynthRecord gen_record(const std::vector<MorphologyParams>& leads, double duration_s,
                       double fs = 500.0);

/// Closed intervals from which per-record morphology is drawn uniformly.
struct CorpusConfig {
  using Range = std::pair<double, double>;

  std::size_t leads = 1;
  double duration_s = 10.0;
  double fs = 500.0;
  Range heart_rate_bpm{55, 95};
  double hr_jitter_fraction = 0.04;
  Range noise_std_mv{0.01, 0.03};

  Range p_amplitude{0.08, 0.25}, p_center{-0.20, -0.14}, p_width{0.015, 0.030};
  Range q_amplitude{-0.20, -0.03}, q_center{-0.035, -0.020}, q_width{0.006, 0.012};
  Range r_amplitude{0.60, 1.60}, r_center{0.0, 0.0}, r_width{0.008, 0.014};
  Range s_amplitude{-0.45, -0.05}, s_center{0.020, 0.035}, s_width{0.006, 0.012};
  Range t_amplitude{0.10, 0.50}, t_center{0.20, 0.32}, t_width{0.030, 0.060};

  /// Applies `key=value` overrides (ranges written "lo,hi"); unknown keys throw.
  void apply(const std::map<std::string, std::string>& values);
  void validate() const;
  bool operator==(const CorpusConfig&) const = default;

 private:
  void assign(const std::map<std::string, std::string>& values);
};

/// Draws one lead's morphology from the configured ranges.
MorphologyParams sample_morphology(const CorpusConfig& config, double heart_rate_bpm,
                                   std::uint64_t seed);

/// n seeded records with ids "rec00000", "rec00001", ...
std::vector<SynthRecord> gen_corpus(std::size_t n_records, const CorpusConfig& config,
                                    std::uint64_t seed);

}  // namespace ecgvae
