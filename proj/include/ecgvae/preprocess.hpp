#pragma once

#include <span>
#include <string>
#include <vector>

#include "ecgvae/record.hpp"
#include "ecgvae/vae.hpp"

namespace ecgvae {

struct RPeakList {
  std::vector<std::size_t> indices;  // strictly increasing
  std::string detector_name;
  bool no_peaks_warning = false;
};

/// Leading non-overlapping segments of exactly `seconds * fs` samples; the
/// remainder is dropped. A record shorter than one segment yields nothing.
std::vector<EcgRecord> cut_segments(const EcgRecord& record, double seconds = 9.0);

/// Pan-Tompkins style detector: zero-phase 5-15 Hz band-pass, squared
/// derivative, 0.15 s moving-window integration, threshold at half the
/// +-1 s rolling maximum, 0.2 s refractory period, then snapping to the
/// largest raw sample within +-0.05 s.
RPeakList detect_r_peaks(std::span<const float> lead, double fs);

struct ExtractOptions {
  std::size_t half_width = kCycleLength / 2;
  bool remove_baseline = true;
};

struct ExtractResult {
  std::vector<CardiacCycle> cycles;
  std::size_t skipped = 0;  // peaks whose window crossed the record boundary
};

/// Window [r - half_width, r + half_width) around every peak. Baseline
/// removal subtracts the mean of the first and last 10 window samples.
ExtractResult extract_cycles(std::span<const float> lead, const RPeakList& peaks,
                             const ExtractOptions& options = {});

struct PreprocessOptions {
  double segment_seconds = 9.0;
  ExtractOptions extract;
};

struct PreprocessStats {
  std::size_t segments = 0;
  std::size_t peaks = 0;
  std::size_t cycles = 0;
  std::size_t skipped = 0;
  std::size_t leads_without_peaks = 0;
};

/// Full record -> cycles pipeline: cut, then detect and window every lead of
/// every segment independently. Only 500 Hz input is accepted.
std::vector<CardiacCycle> preprocess_record(const EcgRecord& record,
                                            const PreprocessOptions& options = {},
                                            PreprocessStats* stats = nullptr);

}  // namespace ecgvae
