#include "ecgvae/synth.hpp"

#include <cmath>
#include <cstdio>
#include <random>

namespace ecgvae {

namespace {

std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
  return std::mt19937_64(seq);
}

double bump(const Wave& w, double t) {
  const double d = (t - w.center_s) / w.width_s;
  return w.amplitude_mv * std::exp(-0.5 * d * d);
}

// Beyond this distance from R every bump is below 1e-9 of its amplitude.
double support_s(const MorphologyParams& p) {
  double s = 0;
  for (const Wave& w : p.waves()) s = std::max(s, std::abs(w.center_s) + 7.0 * w.width_s);
  return s;
}

}  // namespace

void MorphologyParams::validate() const {
  for (const Wave& w : waves()) {
    if (!(w.width_s > 0)) throw ParameterError("wave widths must be positive");
  }
  if (r.amplitude_mv != 0 || q.amplitude_mv != 0 || s.amplitude_mv != 0) {
    if (!(r.amplitude_mv > std::abs(q.amplitude_mv) && r.amplitude_mv > std::abs(s.amplitude_mv))) {
      throw ParameterError("R amplitude must exceed |Q| and |S|");
    }
  }
  if (!(heart_rate_bpm >= 30 && heart_rate_bpm <= 220)) {
    throw ParameterError("heart rate must lie in [30, 220] bpm");
  }
  if (!(hr_jitter_fraction >= 0 && hr_jitter_fraction < 1)) {
    throw ParameterError("hr_jitter_fraction must lie in [0, 1)");
  }
  if (!(noise_std_mv >= 0)) throw ParameterError("noise_std_mv must be >= 0");
}

double morphology_value(const MorphologyParams& params, double t_s) {
  double v = 0;
  for (const Wave& w : params.waves()) v += bump(w, t_s);
  return v;
}

SynthCycle gen_cycle(const MorphologyParams& params, double fs) {
  params.validate();
  if (!(fs > 0)) throw ParameterError("sampling rate must be positive");
  SynthCycle out;
  out.r_index = kCycleLength / 2;
  out.cycle.samples.resize(kCycleLength);
  auto rng = seeded(params.seed, 0);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < kCycleLength; ++i) {
    const double t = (double(i) - double(out.r_index)) / fs;
    double v = morphology_value(params, t);
    if (params.noise_std_mv > 0) v += params.noise_std_mv * noise(rng);
    out.cycle.samples[i] = static_cast<float>(v);
  }
  return out;
}

SynthRecord gen_record(const MorphologyParams& params, double duration_s, double fs) {
  return gen_record(std::vector<MorphologyParams>{params}, duration_s, fs);
}

SynthRecord gen_record(const std::vector<MorphologyParams>& leads, double duration_s, double fs) {
  if (leads.empty()) throw ParameterError("gen_record needs at least one lead");
  for (const auto& p : leads) p.validate();
  if (!(fs > 0)) throw ParameterError("sampling rate must be positive");
  const MorphologyParams& rhythm = leads.front();
  const double base_rr = 60.0 / rhythm.heart_rate_bpm;
  if (duration_s < base_rr) throw ParameterError("record shorter than one beat interval");

  const auto n = static_cast<std::size_t>(std::llround(duration_s * fs));
  SynthRecord out;
  out.record.sampling_rate_hz = fs;

  auto beat_rng = seeded(rhythm.seed, 1);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  std::vector<double> r_times;
  double slot_start = 0;
  while (true) {
    double rr = base_rr;
    if (rhythm.hr_jitter_fraction > 0) rr *= 1.0 + rhythm.hr_jitter_fraction * jitter(beat_rng);
    if (slot_start + rr > duration_s + 1e-12) break;
    const double r_time = slot_start + 0.5 * rr;
    r_times.push_back(r_time);
    out.r_peaks.push_back(static_cast<std::size_t>(std::llround(r_time * fs)));
    slot_start += rr;
  }

  for (std::size_t li = 0; li < leads.size(); ++li) {
    const MorphologyParams& p = leads[li];
    std::vector<double> signal(n, 0.0);
    const double reach = support_s(p);
    for (std::size_t r : out.r_peaks) {
      const auto lo = static_cast<std::ptrdiff_t>(std::floor(double(r) - reach * fs));
      const auto hi = static_cast<std::ptrdiff_t>(std::ceil(double(r) + reach * fs));
      for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(lo, 0);
           i <= std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(n) - 1); ++i) {
        signal[static_cast<std::size_t>(i)] += morphology_value(p, (double(i) - double(r)) / fs);
      }
    }
    auto noise_rng = seeded(p.seed, 2);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<float> lead(n);
    for (std::size_t i = 0; i < n; ++i) {
      double v = signal[i];
      if (p.noise_std_mv > 0) v += p.noise_std_mv * noise(noise_rng);
      lead[i] = static_cast<float>(v);
    }
    out.record.leads.push_back(std::move(lead));
  }
  return out;
}

namespace {

CorpusConfig::Range parse_range(const std::string& key, const std::string& text) {
  try {
    const auto comma = text.find(',');
    if (comma == std::string::npos) {
      const double v = std::stod(text);
      return {v, v};
    }
    return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
  } catch (const std::exception&) {
    throw ParameterError("bad value for " + key + ": '" + text + "'");
  }
}

double parse_number(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ParameterError("bad value for " + key + ": '" + text + "'");
  }
}

}  // namespace

void CorpusConfig::apply(const std::map<std::string, std::string>& values) {
  CorpusConfig next = *this;
  next.assign(values);
  next.validate();
  *this = next;
}

void CorpusConfig::assign(const std::map<std::string, std::string>& values) {
  const std::map<std::string, Range*> ranges{
      {"heart_rate_bpm", &heart_rate_bpm}, {"noise_std_mv", &noise_std_mv},
      {"p_amplitude", &p_amplitude},       {"p_center", &p_center},
      {"p_width", &p_width},               {"q_amplitude", &q_amplitude},
      {"q_center", &q_center},             {"q_width", &q_width},
      {"r_amplitude", &r_amplitude},       {"r_center", &r_center},
      {"r_width", &r_width},               {"s_amplitude", &s_amplitude},
      {"s_center", &s_center},             {"s_width", &s_width},
      {"t_amplitude", &t_amplitude},       {"t_center", &t_center},
      {"t_width", &t_width},
  };
  for (const auto& [key, text] : values) {
    if (auto it = ranges.find(key); it != ranges.end()) {
      *it->second = parse_range(key, text);
    } else if (key == "leads") {
      leads = static_cast<std::size_t>(parse_number(key, text));
    } else if (key == "duration_s") {
      duration_s = parse_number(key, text);
    } else if (key == "fs") {
      fs = parse_number(key, text);
    } else if (key == "hr_jitter_fraction") {
      hr_jitter_fraction = parse_number(key, text);
    } else {
      throw ParameterError("unknown corpus setting '" + key + "'");
    }
  }
}

void CorpusConfig::validate() const {
  if (leads < 1 || leads > 12) throw ParameterError("leads must lie in 1..12");
  if (!(duration_s > 0) || !(fs > 0)) throw ParameterError("duration and fs must be positive");
  for (const Range* r : {&heart_rate_bpm, &noise_std_mv, &p_amplitude, &p_center, &p_width,
                         &q_amplitude, &q_center, &q_width, &r_amplitude, &r_center, &r_width,
                         &s_amplitude, &s_center, &s_width, &t_amplitude, &t_center, &t_width}) {
    if (r->first > r->second) throw ParameterError("corpus range has lo > hi");
  }
  if (heart_rate_bpm.first < 30 || heart_rate_bpm.second > 220) {
    throw ParameterError("heart rate range must lie in [30, 220]");
  }
}

MorphologyParams sample_morphology(const CorpusConfig& c, double heart_rate_bpm,
                                   std::uint64_t seed) {
  auto rng = seeded(seed, 3);
  auto draw = [&](const CorpusConfig::Range& r) {
    return std::uniform_real_distribution<double>(r.first, r.second)(rng);
  };
  MorphologyParams p;
  p.p = {draw(c.p_amplitude), draw(c.p_center), draw(c.p_width)};
  p.q = {draw(c.q_amplitude), draw(c.q_center), draw(c.q_width)};
  p.r = {draw(c.r_amplitude), draw(c.r_center), draw(c.r_width)};
  p.s = {draw(c.s_amplitude), draw(c.s_center), draw(c.s_width)};
  p.t = {draw(c.t_amplitude), draw(c.t_center), draw(c.t_width)};
  p.noise_std_mv = draw(c.noise_std_mv);
  p.heart_rate_bpm = heart_rate_bpm;
  p.hr_jitter_fraction = c.hr_jitter_fraction;
  p.seed = seed;
  return p;
}

std::vector<SynthRecord> gen_corpus(std::size_t n_records, const CorpusConfig& config,
                                    std::uint64_t seed) {
  config.validate();
  if (n_records < 1) throw ParameterError("corpus needs at least one record");
  std::vector<SynthRecord> out;
  out.reserve(n_records);
  for (std::size_t i = 0; i < n_records; ++i) {
    auto rng = seeded(seed, 1000 + i);
    const double hr = std::uniform_real_distribution<double>(config.heart_rate_bpm.first,
                                                             config.heart_rate_bpm.second)(rng);
    std::vector<MorphologyParams> leads;
    for (std::size_t l = 0; l < config.leads; ++l) {
      leads.push_back(sample_morphology(config, hr, rng()));
    }
    SynthRecord rec = gen_record(leads, config.duration_s, config.fs);
    char id[32];
    std::snprintf(id, sizeof id, "rec%05zu", i);
    rec.record.record_id = id;
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace ecgvae
