#include "ecgvae/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <optional>

#include "ecgvae/config.hpp"
#include "ecgvae/errors.hpp"
#include "ecgvae/experiments.hpp"
#include "ecgvae/metrics.hpp"
#include "ecgvae/persistence.hpp"
#include "ecgvae/preprocess.hpp"
#include "ecgvae/synth.hpp"
#include "ecgvae/train.hpp"

namespace ecgvae {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Fills options not given on the command line from a config file. Keys may
/// use '_' or '-'. Returns the keys that match no option.
ConfigMap merge_config(CLI::App& sub, const std::string& config_path) {
  if (config_path.empty()) return {};
  ConfigMap leftover;
  for (const auto& [key, value] : load_config(config_path)) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    CLI::Option* opt = sub.get_option_no_throw("--" + name);
    if (opt == nullptr || name == "config") {
      leftover.emplace(key, value);
      continue;
    }
    if (opt->count() == 0) {
      opt->add_result(value);
      opt->run_callback();
    }
  }
  return leftover;
}

void reject_leftovers(const ConfigMap& leftover) {
  if (!leftover.empty()) throw UsageError("unknown config key '" + leftover.begin()->first + "'");
}

template <typename T>
const T& require(const std::optional<T>& value, const std::string& flag) {
  if (!value) throw UsageError(flag + " is required");
  return *value;
}

void require_path(const std::string& value, const std::string& flag) {
  if (value.empty()) throw UsageError(flag + " is required");
}

void print_line(const std::string& s) { std::cout << s << '\n'; }

// ---- subcommands ------------------------------------------------------------

struct SynthArgs {
  std::size_t records = 200;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string config;
};

int run_synth(CLI::App& sub, const SynthArgs& a) {
  const ConfigMap leftover = merge_config(sub, a.config);
  const auto seed = require(a.seed, "--seed");
  require_path(a.out, "--out");
  if (a.records == 0) throw UsageError("--records must be at least 1");
  CorpusConfig corpus;
  corpus.apply(leftover);
  const auto records = gen_corpus(a.records, corpus, seed);
  save_corpus(a.out, records);
  print_line("synth: " + std::to_string(records.size()) + " records -> " + a.out);
  return kExitOk;
}

struct PreprocessArgs {
  std::string in, out, config;
  std::size_t half_width = 200;
  double segment_seconds = 9.0;
  bool keep_baseline = false;
};

int run_preprocess(CLI::App& sub, const PreprocessArgs& a) {
  reject_leftovers(merge_config(sub, a.config));
  require_path(a.in, "--in");
  require_path(a.out, "--out");
  PreprocessOptions opts;
  opts.segment_seconds = a.segment_seconds;
  opts.extract.half_width = a.half_width;
  opts.extract.remove_baseline = !a.keep_baseline;
  CycleDataset ds;
  ds.cycle_length = static_cast<std::uint32_t>(2 * a.half_width);
  PreprocessStats total;
  for (const auto& rec : load_corpus(a.in)) {
    PreprocessStats st;
    auto cycles = preprocess_record(rec, opts, &st);
    ds.sampling_rate_hz = static_cast<float>(rec.sampling_rate_hz);
    total.segments += st.segments;
    total.peaks += st.peaks;
    total.cycles += st.cycles;
    total.skipped += st.skipped;
    total.leads_without_peaks += st.leads_without_peaks;
    for (auto& c : cycles) ds.cycles.push_back(std::move(c));
  }
  save_dataset(a.out, ds);
  print_line("preprocess: segments=" + std::to_string(total.segments) +
             " peaks=" + std::to_string(total.peaks) + " cycles=" + std::to_string(total.cycles) +
             " skipped=" + std::to_string(total.skipped) +
             " leads_without_peaks=" + std::to_string(total.leads_without_peaks) + " -> " + a.out);
  return kExitOk;
}

struct TrainArgs {
  std::string data, out, history, config;
  TrainConfig train;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

int run_train(CLI::App& sub, TrainArgs& a) {
  reject_leftovers(merge_config(sub, a.config));
  a.train.seed = require(a.seed, "--seed");
  require_path(a.data, "--data");
  require_path(a.out, "--out");
  a.train.validate();
  const CycleDataset ds = load_dataset(a.data);
  ArchConfig arch;
  arch.input_len = ds.cycle_length;
  const auto on_epoch = [&](const EpochLoss& e) {
    if (a.quiet) return;
    print_line("epoch " + std::to_string(e.epoch) + " train_recon=" + format_number(e.train_recon) +
               " train_kl=" + format_number(e.train_kl) + " eval_recon=" +
               format_number(e.eval_recon) + " eval_kl=" + format_number(e.eval_kl));
  };
  const TrainResult result = train(ds.cycles, a.train, arch, on_epoch);
  save_model(a.out, result.model);
  if (!a.history.empty()) write_loss_history(a.history, result.history);
  print_line("train: " + std::to_string(result.history.size()) + " epochs -> " + a.out);
  return kExitOk;
}

struct GenerateArgs {
  std::string model, out, config;
  std::size_t count = 1000;
  std::optional<std::uint64_t> seed;
};

int run_generate(CLI::App& sub, const GenerateArgs& a) {
  reject_leftovers(merge_config(sub, a.config));
  const auto seed = require(a.seed, "--seed");
  require_path(a.model, "--model");
  require_path(a.out, "--out");
  if (a.count == 0) throw UsageError("--count must be at least 1");
  const Model model = load_model(a.model);
  const SampleSet gen = sample_synthetic(model, a.count, seed);
  CycleDataset ds;
  ds.cycle_length = static_cast<std::uint32_t>(model.input_len());
  for (const auto& c : gen.cycles) ds.cycles.push_back(CardiacCycle{c, std::nullopt, std::nullopt});
  save_dataset(a.out, ds);
  print_line("generate: " + std::to_string(ds.cycles.size()) + " cycles -> " + a.out);
  return kExitOk;
}

struct EncodeArgs {
  std::string model, data, out, config;
};

int run_encode(CLI::App& sub, const EncodeArgs& a) {
  reject_leftovers(merge_config(sub, a.config));
  require_path(a.model, "--model");
  require_path(a.data, "--data");
  require_path(a.out, "--out");
  const Model model = load_model(a.model);
  const CycleDataset ds = load_dataset(a.data);
  if (ds.cycle_length != model.input_len()) {
    throw DimensionError("dataset cycle length " + std::to_string(ds.cycle_length) +
                         " does not match the model input " + std::to_string(model.input_len()));
  }
  std::vector<LatentCode<float>> codes;
  codes.reserve(ds.cycles.size());
  constexpr std::size_t chunk = 256;
  const std::size_t dim = model.latent_dim();
  for (std::size_t start = 0; start < ds.cycles.size(); start += chunk) {
    const std::size_t rows = std::min(chunk, ds.cycles.size() - start);
    const auto x = stack_cycles(std::span(ds.cycles).subspan(start, rows));
    const auto [mu, logvar] = model.encode_batch(x);
    for (std::size_t r = 0; r < rows; ++r) {
      LatentCode<float> code;
      const auto m = mu.data().subspan(r * dim, dim);
      const auto l = logvar.data().subspan(r * dim, dim);
      code.mu.assign(m.begin(), m.end());
      code.logvar.assign(l.begin(), l.end());
      codes.push_back(std::move(code));
    }
  }
  write_features(a.out, codes);
  print_line("encode: " + std::to_string(codes.size()) + " cycles -> " + a.out);
  return kExitOk;
}

struct TraverseArgs {
  std::string model, out, config;
  std::optional<long long> feature;
  bool all = false;
  float min = -3.0f, max = 3.0f;
  std::size_t steps = 10;
  std::optional<std::uint64_t> base_seed;
};

int run_traverse(CLI::App& sub, const TraverseArgs& a) {
  reject_leftovers(merge_config(sub, a.config));
  require_path(a.model, "--model");
  require_path(a.out, "--out");
  if (a.all == a.feature.has_value()) throw UsageError("give exactly one of --feature or --all");
  if (a.steps == 0) throw UsageError("--steps must be at least 1");
  const Model model = load_model(a.model);
  if (a.feature && (*a.feature < 0 || std::size_t(*a.feature) >= model.latent_dim())) {
    throw UsageError("--feature " + std::to_string(*a.feature) + " out of range 0-" +
                     std::to_string(model.latent_dim() - 1));
  }
  TraversalOptions opts;
  opts.grid = linspace(a.min, a.max, a.steps);
  opts.base_seed = a.base_seed;
  std::size_t n = 0;
  if (a.all) {
    n = traversal_sweep(model, a.out, opts).size();
  } else {
    traversal_plot(model, a.out, static_cast<std::size_t>(*a.feature), opts);
    n = 1;
  }
  print_line("traverse: " + std::to_string(n) + " plots -> " + a.out);
  return kExitOk;
}

struct MmdArgs {
  std::string a, b, out, config;
  std::string sigma = "median";
  std::uint64_t seed = 0;
};

int run_mmd(CLI::App& sub, const MmdArgs& a) {
  reject_leftovers(merge_config(sub, a.config));
  require_path(a.a, "--a");
  require_path(a.b, "--b");
  double sigma = 0.0;
  if (a.sigma != "median") {
    try {
      std::size_t used = 0;
      sigma = std::stod(a.sigma, &used);
      if (used != a.sigma.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw UsageError("--sigma must be 'median' or a positive number");
    }
    if (!(sigma > 0) || !std::isfinite(sigma)) throw UsageError("--sigma must be positive");
  }
  const CycleDataset da = load_dataset(a.a);
  const CycleDataset db = load_dataset(a.b);
  SampleSet sa = to_sample_set(da.cycles, fs::path(a.a).filename().string());
  SampleSet sb = to_sample_set(db.cycles, fs::path(a.b).filename().string());
  const MmdReport report = mmd_report(sa, sb, sigma, a.seed);
  if (!a.out.empty()) write_mmd_report(a.out, std::span(&report, 1));
  print_line("mmd: sigma=" + format_number(report.sigma) +
             " mmd2_biased=" + format_number(report.mmd2_biased) +
             " mmd2_unbiased=" + format_number(report.mmd2_unbiased));
  return kExitOk;
}

struct PlotArgs {
  std::string data, out, title, config;
  std::vector<std::size_t> indices;
};

int run_plot(CLI::App& sub, const PlotArgs& a) {
  reject_leftovers(merge_config(sub, a.config));
  require_path(a.data, "--data");
  require_path(a.out, "--out");
  if (a.indices.empty()) throw UsageError("--indices is required");
  const CycleDataset ds = load_dataset(a.data);
  std::vector<std::vector<float>> traces;
  std::vector<std::string> labels;
  for (std::size_t i : a.indices) {
    if (i >= ds.cycles.size()) {
      throw UsageError("index " + std::to_string(i) + " out of range (dataset has " +
                       std::to_string(ds.cycles.size()) + " cycles)");
    }
    traces.push_back(ds.cycles[i].samples);
    std::string label = "#" + std::to_string(i);
    if (ds.cycles[i].source_record) label += " " + *ds.cycles[i].source_record;
    labels.push_back(label);
  }
  emit_plot(traces, labels, a.out, a.title);
  print_line("plot: " + std::to_string(traces.size()) + " traces -> " + a.out);
  return kExitOk;
}

int fail(ExitCode code, const std::string& what) {
  static const char* names[] = {"ok", "usage", "data", "numeric"};
  std::string msg = what;
  std::replace(msg.begin(), msg.end(), '\n', ' ');
  std::cerr << "error: " << names[code] << ": " << msg << std::endl;
  return code;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args) {
  CLI::App app{"Variational autoencoder for single ECG cardiac cycles", "ecgvae"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic ECG corpus");
  s->add_option("--records", synth.records, "Number of records")->capture_default_str();
  s->add_option("--seed", synth.seed, "Random seed (required)");
  s->add_option("--out", synth.out, "Output directory");
  s->add_option("--config", synth.config, "key = value file; corpus ranges go here");

  PreprocessArgs pre;
  auto* p = app.add_subcommand("preprocess", "Cut records into R-centred cardiac cycles");
  p->add_option("--in", pre.in, "Corpus directory");
  p->add_option("--out", pre.out, "Output cycle dataset (.ecgc)");
  p->add_option("--half-width", pre.half_width, "Samples each side of the R peak")
      ->capture_default_str();
  p->add_option("--segment-seconds", pre.segment_seconds, "Segment length")->capture_default_str();
  p->add_flag("--keep-baseline", pre.keep_baseline, "Skip per-cycle baseline removal");
  p->add_option("--config", pre.config, "key = value file");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train the VAE on a cycle dataset");
  t->add_option("--data", tr.data, "Cycle dataset (.ecgc)");
  t->add_option("--epochs", tr.train.epochs, "Epochs")->capture_default_str();
  t->add_option("--batch", tr.train.batch_size, "Minibatch size")->capture_default_str();
  t->add_option("--lr", tr.train.lr, "Adam learning rate")->capture_default_str();
  t->add_option("--beta", tr.train.beta_kl, "KL weight")->capture_default_str();
  t->add_option("--eval-fraction", tr.train.eval_fraction, "Held-out fraction")
      ->capture_default_str();
  t->add_option("--seed", tr.seed, "Random seed (required)");
  t->add_option("--out", tr.out, "Output checkpoint (.ecgv)");
  t->add_option("--history", tr.history, "Per-epoch loss CSV");
  t->add_flag("--quiet", tr.quiet, "No per-epoch output");
  t->add_option("--config", tr.config, "key = value file");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Decode standard-normal latent draws");
  g->add_option("--model", gen.model, "Checkpoint (.ecgv)");
  g->add_option("--count", gen.count, "Number of cycles")->capture_default_str();
  g->add_option("--seed", gen.seed, "Random seed (required)");
  g->add_option("--out", gen.out, "Output cycle dataset (.ecgc)");
  g->add_option("--config", gen.config, "key = value file");

  EncodeArgs enc;
  auto* e = app.add_subcommand("encode", "Write posterior means as a feature table");
  e->add_option("--model", enc.model, "Checkpoint (.ecgv)");
  e->add_option("--data", enc.data, "Cycle dataset (.ecgc)");
  e->add_option("--out", enc.out, "Output CSV");
  e->add_option("--config", enc.config, "key = value file");

  TraverseArgs trav;
  auto* v = app.add_subcommand("traverse", "Plot decodes while one latent feature varies");
  v->add_option("--model", trav.model, "Checkpoint (.ecgv)");
  v->add_option("--feature", trav.feature, "Latent index to vary");
  v->add_flag("--all", trav.all, "One plot per latent feature");
  v->add_option("--min", trav.min, "Lowest value")->capture_default_str();
  v->add_option("--max", trav.max, "Highest value")->capture_default_str();
  v->add_option("--steps", trav.steps, "Number of values")->capture_default_str();
  v->add_option("--base-seed", trav.base_seed, "Draw the fixed features from N(0, I)");
  v->add_option("--out", trav.out, "Output directory");
  v->add_option("--config", trav.config, "key = value file");

  MmdArgs mmd;
  auto* m = app.add_subcommand("mmd", "Squared MMD between two cycle datasets");
  m->add_option("--a", mmd.a, "First dataset (.ecgc)");
  m->add_option("--b", mmd.b, "Second dataset (.ecgc)");
  m->add_option("--sigma", mmd.sigma, "RBF bandwidth or 'median'")->capture_default_str();
  m->add_option("--seed", mmd.seed, "Seed for bandwidth subsampling")->capture_default_str();
  m->add_option("--out", mmd.out, "Report CSV");
  m->add_option("--config", mmd.config, "key = value file");

  PlotArgs plot;
  auto* pl = app.add_subcommand("plot", "Plot selected cycles of a dataset as SVG");
  pl->add_option("--data", plot.data, "Cycle dataset (.ecgc)");
  pl->add_option("--indices", plot.indices, "Cycle indices")->delimiter(',');
  pl->add_option("--title", plot.title, "Plot title");
  pl->add_option("--out", plot.out, "Output SVG");
  pl->add_option("--config", plot.config, "key = value file");

  std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& err) {
    return fail(kExitUsage, err.what());
  }

  try {
    if (s->parsed()) return run_synth(*s, synth);
    if (p->parsed()) return run_preprocess(*p, pre);
    if (t->parsed()) return run_train(*t, tr);
    if (g->parsed()) return run_generate(*g, gen);
    if (e->parsed()) return run_encode(*e, enc);
    if (v->parsed()) return run_traverse(*v, trav);
    if (m->parsed()) return run_mmd(*m, mmd);
    if (pl->parsed()) return run_plot(*pl, plot);
    return fail(kExitUsage, "no subcommand");
  } catch (const UsageError& err) {
    return fail(kExitUsage, err.what());
  } catch (const CLI::ParseError& err) {
    return fail(kExitUsage, err.what());
  } catch (const ParameterError& err) {
    return fail(kExitUsage, err.what());
  } catch (const NumericError& err) {
    return fail(kExitNumeric, err.what());
  } catch (const Error& err) {
    return fail(kExitData, err.what());
  } catch (const std::filesystem::filesystem_error& err) {
    return fail(kExitData, err.what());
  } catch (const std::bad_alloc&) {
    return fail(kExitData, "out of memory");
  }
}

}  // namespace ecgvae
