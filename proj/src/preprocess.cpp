#include "ecgvae/preprocess.hpp"

#include <cmath>
#include <deque>
#include <numbers>

namespace ecgvae {

void EcgRecord::validate() const {
  if (!(sampling_rate_hz > 0)) throw ParameterError("sampling rate must be positive");
  if (leads.empty() || leads.size() > 12) throw DimensionError("record must have 1..12 leads");
  for (const auto& l : leads) {
    if (l.size() != leads.front().size()) throw DimensionError("record leads differ in length");
  }
}

std::vector<EcgRecord> cut_segments(const EcgRecord& record, double seconds) {
  record.validate();
  if (!(seconds > 0)) throw ParameterError("segment length must be positive");
  const auto seg = static_cast<std::size_t>(std::llround(seconds * record.sampling_rate_hz));
  std::vector<EcgRecord> out;
  if (seg == 0) return out;
  for (std::size_t start = 0, k = 0; start + seg <= record.length(); start += seg, ++k) {
    EcgRecord part;
    part.sampling_rate_hz = record.sampling_rate_hz;
    part.record_id = record.record_id + "_s" + std::to_string(k);
    for (const auto& lead : record.leads) {
      part.leads.emplace_back(lead.begin() + static_cast<std::ptrdiff_t>(start),
                              lead.begin() + static_cast<std::ptrdiff_t>(start + seg));
    }
    out.push_back(std::move(part));
  }
  return out;
}

namespace {

// Single-pole low-pass and high-pass run forward then backward.
std::vector<double> bandpass(std::span<const float> x, double fs, double lo_hz, double hi_hz) {
  const double dt = 1.0 / fs;
  const double rc_lo = 1.0 / (2.0 * std::numbers::pi * hi_hz);
  const double rc_hi = 1.0 / (2.0 * std::numbers::pi * lo_hz);
  const double alpha = dt / (rc_lo + dt);
  const double a = rc_hi / (rc_hi + dt);

  std::vector<double> y(x.begin(), x.end());
  auto one_pass = [&](std::vector<double>& v) {
    double lp = v.empty() ? 0.0 : v[0];
    double prev_lp = lp, hp = 0.0;
    for (double& s : v) {
      lp += alpha * (s - lp);
      hp = a * (hp + lp - prev_lp);
      prev_lp = lp;
      s = hp;
    }
  };
  one_pass(y);
  std::reverse(y.begin(), y.end());
  one_pass(y);
  std::reverse(y.begin(), y.end());
  return y;
}

// Centred moving average with window `w` via prefix sums.
std::vector<double> moving_average(const std::vector<double>& x, std::size_t w) {
  const std::size_t n = x.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  std::vector<double> out(n);
  const std::size_t half = w / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, i + half + 1);
    out[i] = (prefix[hi] - prefix[lo]) / double(w);
  }
  return out;
}

// Maximum over [i - half, i + half] for every i (monotone deque).
std::vector<double> rolling_max(const std::vector<double>& x, std::size_t half) {
  const std::size_t n = x.size();
  std::vector<double> out(n);
  std::deque<std::size_t> q;
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t hi = std::min(n - 1, i + half);
    for (; next <= hi; ++next) {
      while (!q.empty() && x[q.back()] <= x[next]) q.pop_back();
      q.push_back(next);
    }
    while (q.front() + half < i) q.pop_front();
    out[i] = x[q.front()];
  }
  return out;
}

}  // namespace

RPeakList detect_r_peaks(std::span<const float> lead, double fs) {
  if (!(fs > 0)) throw ParameterError("sampling rate must be positive");
  if (double(lead.size()) < fs) throw DimensionError("R detection needs at least one second of signal");

  RPeakList result;
  result.detector_name = "pan-tompkins-lite";
  const std::size_t n = lead.size();

  const std::vector<double> filtered = bandpass(lead, fs, 5.0, 15.0);
  std::vector<double> energy(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double d = 0.5 * (filtered[i + 1] - filtered[i - 1]) * fs;
    energy[i] = d * d;
  }
  const auto window = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.15 * fs)));
  const std::vector<double> integrated = moving_average(energy, window);
  const std::vector<double> ceiling =
      rolling_max(integrated, static_cast<std::size_t>(std::llround(1.0 * fs)));

  const auto refractory = static_cast<std::size_t>(std::llround(0.2 * fs));
  const auto search = static_cast<std::size_t>(std::llround(0.05 * fs));

  // One candidate per supra-threshold run, at the run's integrated maximum.
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < n;) {
    if (!(integrated[i] > 0.5 * ceiling[i] && integrated[i] > 0.0)) {
      ++i;
      continue;
    }
    std::size_t best = i;
    for (; i < n && integrated[i] > 0.5 * ceiling[i]; ++i) {
      if (integrated[i] > integrated[best]) best = i;
    }
    if (!candidates.empty() && best - candidates.back() < refractory) {
      if (integrated[best] > integrated[candidates.back()]) candidates.back() = best;
    } else {
      candidates.push_back(best);
    }
  }

  for (std::size_t c : candidates) {
    const std::size_t lo = c >= search ? c - search : 0;
    const std::size_t hi = std::min(n - 1, c + search);
    std::size_t peak = lo;
    for (std::size_t j = lo + 1; j <= hi; ++j) {
      if (lead[j] > lead[peak]) peak = j;
    }
    if (!result.indices.empty() && peak - result.indices.back() < refractory) {
      if (lead[peak] > lead[result.indices.back()]) result.indices.back() = peak;
      continue;
    }
    if (!result.indices.empty() && peak <= result.indices.back()) continue;
    result.indices.push_back(peak);
  }
  result.no_peaks_warning = result.indices.empty();
  return result;
}

ExtractResult extract_cycles(std::span<const float> lead, const RPeakList& peaks,
                             const ExtractOptions& options) {
  if (options.half_width < 1) throw ParameterError("half_width must be >= 1");
  const std::size_t hw = options.half_width;
  ExtractResult out;
  for (std::size_t r : peaks.indices) {
    if (r < hw || r + hw > lead.size()) {
      ++out.skipped;
      continue;
    }
    CardiacCycle c;
    c.samples.assign(lead.begin() + static_cast<std::ptrdiff_t>(r - hw),
                     lead.begin() + static_cast<std::ptrdiff_t>(r + hw));
    if (options.remove_baseline) {
      const std::size_t edge = std::min<std::size_t>(10, c.samples.size());
      double acc = 0.0;
      for (std::size_t i = 0; i < edge; ++i) acc += c.samples[i] + c.samples[c.samples.size() - 1 - i];
      const auto offset = static_cast<float>(acc / double(2 * edge));
      for (float& v : c.samples) v -= offset;
    }
    out.cycles.push_back(std::move(c));
  }
  return out;
}

std::vector<CardiacCycle> preprocess_record(const EcgRecord& record,
                                            const PreprocessOptions& options,
                                            PreprocessStats* stats) {
  record.validate();
  if (std::abs(record.sampling_rate_hz - 500.0) > 1e-9) {
    throw ParameterError("only 500 Hz records are supported (got " +
                         std::to_string(record.sampling_rate_hz) + " Hz); resample first");
  }
  PreprocessStats local;
  std::vector<CardiacCycle> out;
  for (const EcgRecord& seg : cut_segments(record, options.segment_seconds)) {
    ++local.segments;
    for (std::size_t li = 0; li < seg.leads.size(); ++li) {
      const RPeakList peaks = detect_r_peaks(seg.leads[li], seg.sampling_rate_hz);
      if (peaks.no_peaks_warning) ++local.leads_without_peaks;
      ExtractResult ex = extract_cycles(seg.leads[li], peaks, options.extract);
      local.peaks += peaks.indices.size();
      local.skipped += ex.skipped;
      for (auto& c : ex.cycles) {
        c.lead_id = static_cast<int>(li);
        c.source_record = record.record_id;
        out.push_back(std::move(c));
      }
    }
  }
  local.cycles = out.size();
  if (stats) *stats = local;
  return out;
}

}  // namespace ecgvae
