#include "ecgvae/persistence.hpp"

#include <zlib.h>

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ecgvae {

namespace fs = std::filesystem;

namespace {

class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    using U = std::make_unsigned_t<std::conditional_t<std::is_floating_point_v<T>,
                                                      std::conditional_t<sizeof(T) == 4, std::int32_t,
                                                                         std::int64_t>,
                                                      T>>;
    U bits;
    if constexpr (std::is_floating_point_v<T>) {
      bits = std::bit_cast<U>(value);
    } else {
      bits = static_cast<U>(value);
    }
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bytes_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
  }

  void put_tag(const char (&tag)[5]) { bytes_.insert(bytes_.end(), tag, tag + 4); }

  void put_string(const std::string& s) {
    if (s.size() > 0xFFFF) throw ParameterError("string too long to serialize");
    put<std::uint16_t>(static_cast<std::uint16_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }

  void append(std::span<const std::uint8_t> more) { bytes_.insert(bytes_.end(), more.begin(), more.end()); }
  std::size_t size() const { return bytes_.size(); }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string what)
      : bytes_(bytes), what_(std::move(what)) {}

  template <typename T>
  T get() {
    using U = std::make_unsigned_t<std::conditional_t<std::is_floating_point_v<T>,
                                                      std::conditional_t<sizeof(T) == 4, std::int32_t,
                                                                         std::int64_t>,
                                                      T>>;
    need(sizeof(T));
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(U(bytes_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    if constexpr (std::is_floating_point_v<T>) {
      return std::bit_cast<T>(bits);
    } else {
      return static_cast<T>(bits);
    }
  }

  std::string get_string() {
    const auto n = get<std::uint16_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw TruncatedError(what_ + " is truncated");
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::string what_;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in bounded chunks.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    crc = crc32(crc, bytes.data() + off, n);
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

void check_magic(ByteReader& r, const char (&tag)[5], const std::string& what) {
  auto m = r.take(4);
  if (std::memcmp(m.data(), tag, 4) != 0) {
    throw BadMagicError(what + ": bad magic (expected " + std::string(tag, 4) + ")");
  }
}

}  // namespace

void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---- dataset -----------------------------------------------------------------

std::vector<std::uint8_t> encode_dataset(const CycleDataset& ds) {
  ByteWriter w;
  w.put_tag("ECGC");
  w.put<std::uint16_t>(kDatasetVersion);
  w.put<std::uint32_t>(ds.cycle_length);
  w.put<std::uint64_t>(ds.cycles.size());
  w.put<float>(ds.sampling_rate_hz);
  const std::size_t body_start = w.size();
  bool has_ids = false;
  for (const auto& c : ds.cycles) {
    if (c.samples.size() != ds.cycle_length) {
      throw DimensionError("dataset cycle has " + std::to_string(c.samples.size()) +
                           " samples, header says " + std::to_string(ds.cycle_length));
    }
    for (float v : c.samples) w.put<float>(v);
    has_ids = has_ids || c.lead_id || c.source_record;
  }
  w.put<std::uint8_t>(has_ids ? 1 : 0);
  if (has_ids) {
    for (const auto& c : ds.cycles) {
      w.put<std::int16_t>(static_cast<std::int16_t>(c.lead_id.value_or(-1)));
      w.put_string(c.source_record.value_or(""));
    }
  }
  const std::uint32_t crc = crc32_of(std::span(w.bytes()).subspan(body_start));
  w.put<std::uint32_t>(crc);
  return std::move(w.bytes());
}

CycleDataset decode_dataset(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "cycle dataset");
  check_magic(r, "ECGC", "cycle dataset");
  const auto version = r.get<std::uint16_t>();
  if (version != kDatasetVersion) {
    throw VersionError("cycle dataset version " + std::to_string(version) + " is not supported");
  }
  CycleDataset ds;
  ds.cycle_length = r.get<std::uint32_t>();
  const auto count = r.get<std::uint64_t>();
  ds.sampling_rate_hz = r.get<float>();
  const std::size_t body_start = r.pos();
  if (ds.cycle_length == 0 && count > 0) throw IntegrityError("cycle dataset has zero-length cycles");
  if (ds.cycle_length != 0 && count > r.remaining() / (4ull * ds.cycle_length)) {
    throw TruncatedError("cycle dataset is truncated (payload shorter than header count)");
  }
  ds.cycles.resize(count);
  for (auto& c : ds.cycles) {
    c.samples.resize(ds.cycle_length);
    for (float& v : c.samples) v = r.get<float>();
  }
  const auto has_ids = r.get<std::uint8_t>();
  if (has_ids > 1) throw IntegrityError("cycle dataset footer flag is invalid");
  if (has_ids) {
    for (auto& c : ds.cycles) {
      const auto lead = r.get<std::int16_t>();
      std::string id = r.get_string();
      if (lead >= 0) c.lead_id = lead;
      if (!id.empty()) c.source_record = std::move(id);
    }
  }
  const std::size_t body_end = r.pos();
  const auto stored = r.get<std::uint32_t>();
  if (r.remaining() != 0) throw IntegrityError("cycle dataset has trailing bytes");
  if (stored != crc32_of(bytes.subspan(body_start, body_end - body_start))) {
    throw IntegrityError("cycle dataset checksum mismatch");
  }
  return ds;
}

void save_dataset(const fs::path& path, const CycleDataset& dataset) {
  write_bytes(path, encode_dataset(dataset));
}

CycleDataset load_dataset(const fs::path& path) { return decode_dataset(read_bytes(path)); }

// ---- checkpoint ----------------------------------------------------------------

namespace {

void put_sizes(ByteWriter& w, const std::vector<std::size_t>& v) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(v.size()));
  for (std::size_t x : v) w.put<std::uint32_t>(static_cast<std::uint32_t>(x));
}

std::vector<std::size_t> get_sizes(ByteReader& r) {
  const auto n = r.get<std::uint32_t>();
  if (n > 64) throw IntegrityError("checkpoint architecture list is implausibly long");
  std::vector<std::size_t> v(n);
  for (auto& x : v) x = r.get<std::uint32_t>();
  return v;
}

void put_tensor(ByteWriter& w, const std::string& name, const nn::Tensor<float>& t) {
  w.put_string(name);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(t.rank()));
  for (std::size_t d : t.shape()) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
  for (float v : t.data()) w.put<float>(v);
}

}  // namespace

std::vector<std::uint8_t> encode_model(const Model& model) {
  ByteWriter body;
  const ArchConfig& a = model.arch();
  for (std::size_t v : {a.input_len, a.latent_dim, a.kernel, a.pool}) {
    body.put<std::uint32_t>(static_cast<std::uint32_t>(v));
  }
  put_sizes(body, a.encoder_conv_channels);
  put_sizes(body, a.encoder_dense_hidden);
  put_sizes(body, a.decoder_dense_hidden);
  put_sizes(body, a.decoder_conv_channels);

  const auto manifest = model.manifest();
  body.put<std::uint32_t>(static_cast<std::uint32_t>(manifest.size()));
  for (const auto& e : manifest) {
    body.put_string(e.name);
    body.put<std::uint8_t>(static_cast<std::uint8_t>(e.spec.kind));
    for (std::size_t v : {e.spec.in, e.spec.out, e.spec.kernel, e.spec.stride, e.spec.factor}) {
      body.put<std::uint32_t>(static_cast<std::uint32_t>(v));
    }
  }

  const TrainConfig& tc = model.training_config;
  body.put<std::uint64_t>(tc.epochs);
  body.put<std::uint64_t>(tc.batch_size);
  body.put<double>(tc.lr);
  body.put<double>(tc.beta_kl);
  body.put<std::uint64_t>(tc.seed);
  body.put<double>(tc.eval_fraction);
  body.put<std::uint64_t>(model.init_seed);

  const auto params = model.parameters();
  const auto buffers = model.buffers();
  body.put<std::uint32_t>(static_cast<std::uint32_t>(params.size() + buffers.size()));
  for (const auto* p : params) put_tensor(body, p->name, p->value);
  for (const auto& [name, t] : buffers) put_tensor(body, name, *t);

  ByteWriter w;
  w.put_tag("ECGV");
  w.put<std::uint16_t>(kCheckpointVersion);
  w.put<std::uint64_t>(body.size());
  w.append(body.bytes());
  w.put<std::uint32_t>(crc32_of(body.bytes()));
  return std::move(w.bytes());
}

Model decode_model(std::span<const std::uint8_t> bytes) {
  ByteReader head(bytes, "model checkpoint");
  check_magic(head, "ECGV", "model checkpoint");
  const auto version = head.get<std::uint16_t>();
  if (version != kCheckpointVersion) {
    throw VersionError("model checkpoint version " + std::to_string(version) + " is not supported");
  }
  const auto body_size = head.get<std::uint64_t>();
  if (body_size > head.remaining()) throw TruncatedError("model checkpoint is truncated");
  const auto body_bytes = head.take(static_cast<std::size_t>(body_size));
  const auto stored = head.get<std::uint32_t>();
  if (head.remaining() != 0) throw IntegrityError("model checkpoint has trailing bytes");
  if (stored != crc32_of(body_bytes)) throw IntegrityError("model checkpoint checksum mismatch");

  ByteReader r(body_bytes, "model checkpoint body");
  ArchConfig arch;
  arch.input_len = r.get<std::uint32_t>();
  arch.latent_dim = r.get<std::uint32_t>();
  arch.kernel = r.get<std::uint32_t>();
  arch.pool = r.get<std::uint32_t>();
  arch.encoder_conv_channels = get_sizes(r);
  arch.encoder_dense_hidden = get_sizes(r);
  arch.decoder_dense_hidden = get_sizes(r);
  arch.decoder_conv_channels = get_sizes(r);

  Model model = [&] {
    try {
      return Model(arch);
    } catch (const ParameterError& e) {
      throw IntegrityError(std::string("model checkpoint architecture is invalid: ") + e.what());
    }
  }();

  const auto expected = model.manifest();
  const auto count = r.get<std::uint32_t>();
  if (count != expected.size()) throw IntegrityError("checkpoint manifest length mismatch");
  for (const auto& e : expected) {
    ManifestEntry got;
    got.name = r.get_string();
    got.spec.kind = static_cast<nn::LayerKind>(r.get<std::uint8_t>());
    got.spec.in = r.get<std::uint32_t>();
    got.spec.out = r.get<std::uint32_t>();
    got.spec.kernel = r.get<std::uint32_t>();
    got.spec.stride = r.get<std::uint32_t>();
    got.spec.factor = r.get<std::uint32_t>();
    if (!(got == e)) throw IntegrityError("checkpoint manifest disagrees at layer " + e.name);
  }

  TrainConfig& tc = model.training_config;
  tc.epochs = r.get<std::uint64_t>();
  tc.batch_size = r.get<std::uint64_t>();
  tc.lr = r.get<double>();
  tc.beta_kl = r.get<double>();
  tc.seed = r.get<std::uint64_t>();
  tc.eval_fraction = r.get<double>();
  model.init_seed = r.get<std::uint64_t>();

  std::vector<std::pair<std::string, nn::Tensor<float>*>> slots;
  for (auto* p : model.parameters()) slots.emplace_back(p->name, &p->value);
  for (auto& b : model.buffers()) slots.push_back(b);
  const auto n_tensors = r.get<std::uint32_t>();
  if (n_tensors != slots.size()) throw IntegrityError("checkpoint tensor count mismatch");
  for (auto& [name, dst] : slots) {
    const std::string got = r.get_string();
    if (got != name) throw IntegrityError("checkpoint expected tensor " + name + ", found " + got);
    const auto rank = r.get<std::uint8_t>();
    nn::Shape shape(rank);
    for (auto& d : shape) d = r.get<std::uint32_t>();
    if (shape != dst->shape()) {
      throw IntegrityError("checkpoint tensor " + name + " has shape " + nn::shape_to_string(shape) +
                           ", expected " + nn::shape_to_string(dst->shape()));
    }
    for (float& v : dst->data()) v = r.get<float>();
    if (!dst->all_finite()) throw IntegrityError("checkpoint tensor " + name + " is not finite");
  }
  if (r.remaining() != 0) throw IntegrityError("model checkpoint body has trailing bytes");
  return model;
}

void save_model(const fs::path& path, const Model& model) { write_bytes(path, encode_model(model)); }

Model load_model(const fs::path& path) { return decode_model(read_bytes(path)); }

// ---- text ----------------------------------------------------------------------

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

namespace {

std::string fixed(double value, int digits) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, digits);
  std::string s(buf, res.ptr);
  if (s == "-0.0" || s == "-0.00" || s == "-0") s.erase(0, 1);
  return s;
}

std::ofstream open_text(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s, const std::string& where) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    if (s == "nan") return std::nan("");
    throw DataError("bad number '" + s + "' in " + where);
  }
  return v;
}

}  // namespace

std::string render_plot(std::span<const std::vector<float>> traces,
                        std::span<const std::string> labels, const std::string& title) {
  if (traces.empty()) throw ParameterError("plot needs at least one trace");
  constexpr double width = 800, left = 60, right = 20, top = 40, row = 90, bottom = 40;
  constexpr double px_per_mv = 30;
  std::size_t length = 0;
  for (const auto& t : traces) length = std::max(length, t.size());
  const double plot_w = width - left - right;
  const double height = top + row * double(traces.size()) + bottom;
  const double x_scale = length > 1 ? plot_w / double(length - 1) : 0.0;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width, 0) << "\" height=\""
      << fixed(height, 0) << "\" viewBox=\"0 0 " << fixed(width, 0) << ' ' << fixed(height, 0)
      << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    svg << "<text x=\"" << fixed(width / 2, 0) << "\" y=\"20\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"14\">" << escape_xml(title) << "</text>\n";
  }
  const double axis_y = top + row * double(traces.size());
  svg << "<line x1=\"" << fixed(left, 2) << "\" y1=\"" << fixed(axis_y, 2) << "\" x2=\""
      << fixed(left + plot_w, 2) << "\" y2=\"" << fixed(axis_y, 2) << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << fixed(left, 2) << "\" y1=\"" << fixed(top, 2) << "\" x2=\""
      << fixed(left, 2) << "\" y2=\"" << fixed(axis_y, 2) << "\" stroke=\"black\"/>\n";
  const std::size_t tick = 100;
  for (std::size_t s = 0; s < length; s += tick) {
    const double x = left + double(s) * x_scale;
    svg << "<line x1=\"" << fixed(x, 2) << "\" y1=\"" << fixed(axis_y, 2) << "\" x2=\""
        << fixed(x, 2) << "\" y2=\"" << fixed(axis_y + 5, 2) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fixed(x, 2) << "\" y=\"" << fixed(axis_y + 18, 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << s
        << "</text>\n";
  }
  svg << "<text x=\"" << fixed(left + plot_w / 2, 2) << "\" y=\"" << fixed(height - 6, 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">sample</text>\n";
  // 1 mV scale bar
  svg << "<line x1=\"" << fixed(left - 15, 2) << "\" y1=\"" << fixed(top, 2) << "\" x2=\""
      << fixed(left - 15, 2) << "\" y2=\"" << fixed(top + px_per_mv, 2)
      << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
  svg << "<text x=\"" << fixed(left - 20, 2) << "\" y=\"" << fixed(top + px_per_mv / 2 + 4, 2)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">1 mV</text>\n";

  for (std::size_t k = 0; k < traces.size(); ++k) {
    const double baseline = top + row * (double(k) + 0.5);
    svg << "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1\" points=\"";
    for (std::size_t i = 0; i < traces[k].size(); ++i) {
      if (i) svg << ' ';
      svg << fixed(left + double(i) * x_scale, 2) << ','
          << fixed(baseline - double(traces[k][i]) * px_per_mv, 2);
    }
    svg << "\"/>\n";
    if (k < labels.size() && !labels[k].empty()) {
      svg << "<text x=\"" << fixed(left + plot_w - 4, 2) << "\" y=\""
          << fixed(baseline - row / 2 + 14, 2)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
          << escape_xml(labels[k]) << "</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_plot(std::span<const std::vector<float>> traces, std::span<const std::string> labels,
               const fs::path& path, const std::string& title) {
  const std::string svg = render_plot(traces, labels, title);
  write_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(svg.data()), svg.size()));
}

void write_loss_history(const fs::path& path, std::span<const EpochLoss> history) {
  auto out = open_text(path);
  out << "epoch,train_recon,train_kl,eval_recon,eval_kl\n";
  for (const auto& e : history) {
    out << e.epoch << ',' << format_number(e.train_recon) << ',' << format_number(e.train_kl)
        << ',' << format_number(e.eval_recon) << ',' << format_number(e.eval_kl) << '\n';
  }
}

std::vector<EpochLoss> read_loss_history(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<EpochLoss> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 5) throw DataError("loss history row has wrong column count");
    EpochLoss e;
    e.epoch = static_cast<std::size_t>(to_double(cells[0], path.string()));
    e.train_recon = to_double(cells[1], path.string());
    e.train_kl = to_double(cells[2], path.string());
    e.eval_recon = to_double(cells[3], path.string());
    e.eval_kl = to_double(cells[4], path.string());
    out.push_back(e);
  }
  return out;
}

void write_mmd_report(const fs::path& path, std::span<const MmdReport> reports) {
  auto out = open_text(path);
  out << "label_A,label_B,n_A,n_B,sigma,mmd2_biased,mmd2_unbiased,seed\n";
  for (const auto& r : reports) {
    out << r.label_a << ',' << r.label_b << ',' << r.n_a << ',' << r.n_b << ','
        << format_number(r.sigma) << ',' << format_number(r.mmd2_biased) << ','
        << format_number(r.mmd2_unbiased) << ',' << r.seed << '\n';
  }
}

void write_features(const fs::path& path, std::span<const LatentCode<float>> codes) {
  auto out = open_text(path);
  const std::size_t dim = codes.empty() ? kLatentDim : codes.front().mu.size();
  for (std::size_t i = 0; i < dim; ++i) out << (i ? "," : "") << "f" << i;
  out << '\n';
  for (const auto& c : codes) {
    for (std::size_t i = 0; i < c.mu.size(); ++i) out << (i ? "," : "") << format_number(c.mu[i]);
    out << '\n';
  }
}

void save_corpus(const fs::path& dir, std::span<const SynthRecord> records) {
  fs::create_directories(dir);
  auto manifest = open_text(dir / "manifest.csv");
  auto peaks = open_text(dir / "r_peaks.csv");
  manifest << "record_id,sampling_rate_hz,n_leads,n_samples\n";
  peaks << "record_id,sample_index\n";
  for (const auto& sr : records) {
    const EcgRecord& rec = sr.record;
    rec.validate();
    manifest << rec.record_id << ',' << format_number(rec.sampling_rate_hz) << ','
             << rec.leads.size() << ',' << rec.length() << '\n';
    for (std::size_t r : sr.r_peaks) peaks << rec.record_id << ',' << r << '\n';
    auto out = open_text(dir / (rec.record_id + ".csv"));
    for (std::size_t l = 0; l < rec.leads.size(); ++l) out << (l ? "," : "") << "lead_" << l;
    out << '\n';
    for (std::size_t i = 0; i < rec.length(); ++i) {
      for (std::size_t l = 0; l < rec.leads.size(); ++l) {
        out << (l ? "," : "") << format_number(rec.leads[l][i]);
      }
      out << '\n';
    }
  }
}

std::vector<EcgRecord> load_corpus(const fs::path& dir) {
  std::ifstream manifest(dir / "manifest.csv");
  if (!manifest) throw IoError("cannot open " + (dir / "manifest.csv").string());
  std::string line;
  std::getline(manifest, line);
  if (line != "record_id,sampling_rate_hz,n_leads,n_samples") {
    throw DataError("unexpected corpus manifest header in " + dir.string());
  }
  std::vector<EcgRecord> out;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 4) throw DataError("corpus manifest row has wrong column count");
    EcgRecord rec;
    rec.record_id = cells[0];
    rec.sampling_rate_hz = to_double(cells[1], "manifest.csv");
    const auto n_leads = static_cast<std::size_t>(to_double(cells[2], "manifest.csv"));
    const auto n_samples = static_cast<std::size_t>(to_double(cells[3], "manifest.csv"));
    rec.leads.assign(n_leads, std::vector<float>());
    for (auto& l : rec.leads) l.reserve(n_samples);

    const fs::path file = dir / (rec.record_id + ".csv");
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto vals = split_csv(line);
      if (vals.size() != n_leads) throw DataError("row width mismatch in " + file.string());
      for (std::size_t l = 0; l < n_leads; ++l) {
        rec.leads[l].push_back(static_cast<float>(to_double(vals[l], file.string())));
      }
    }
    if (rec.length() != n_samples) throw DataError("sample count mismatch in " + file.string());
    rec.validate();
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace ecgvae
