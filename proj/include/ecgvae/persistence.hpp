#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ecgvae/metrics.hpp"
#include "ecgvae/record.hpp"
#include "ecgvae/synth.hpp"
#include "ecgvae/train.hpp"
#include "ecgvae/vae.hpp"

namespace ecgvae {

// ---- cycle dataset (.ecgc) --------------------------------------------------
//
// Little-endian throughout:
//   "ECGC" | u16 version | u32 cycle length | u64 count | f32 sampling rate
//   | count * length f32 samples
//   | u8 has_ids [ count * (i16 lead id or -1, u16 n, n bytes record id) ]
//   | u32 CRC-32 of everything after the header

inline constexpr std::uint16_t kDatasetVersion = 1;

struct CycleDataset {
  std::uint32_t cycle_length = kCycleLength;
  float sampling_rate_hz = 500.0f;
  std::vector<CardiacCycle> cycles;
};

std::vector<std::uint8_t> encode_dataset(const CycleDataset& dataset);
/// Throws BadMagicError, VersionError, TruncatedError or IntegrityError.
CycleDataset decode_dataset(std::span<const std::uint8_t> bytes);
void save_dataset(const std::filesystem::path& path, const CycleDataset& dataset);
CycleDataset load_dataset(const std::filesystem::path& path);

// ---- model checkpoint (.ecgv) -----------------------------------------------
//
//   "ECGV" | u16 version | u64 body size | body | u32 CRC-32 of body
// body: architecture, layer manifest, training config, init seed, then named
// tensors (parameters and batch-norm running statistics) as
// (u16 name length, name, u8 rank, u32 dims..., f32 data).

inline constexpr std::uint16_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_model(const Model& model);
/// Throws BadMagicError, VersionError, TruncatedError or IntegrityError.
Model decode_model(std::span<const std::uint8_t> bytes);
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

// ---- plots ------------------------------------------------------------------

/// SVG with one polyline per trace, stacked top to bottom at fixed offsets;
/// x in samples, y in millivolts. Output depends only on the inputs.
std::string render_plot(std::span<const std::vector<float>> traces,
                        std::span<const std::string> labels, const std::string& title = "");
void emit_plot(std::span<const std::vector<float>> traces, std::span<const std::string> labels,
               const std::filesystem::path& path, const std::string& title = "");

// ---- text reports -----------------------------------------------------------

/// Shortest decimal that round-trips.
std::string format_number(double value);

void write_loss_history(const std::filesystem::path& path, std::span<const EpochLoss> history);
std::vector<EpochLoss> read_loss_history(const std::filesystem::path& path);
void write_mmd_report(const std::filesystem::path& path, std::span<const MmdReport> reports);
void write_features(const std::filesystem::path& path,
                    std::span<const LatentCode<float>> codes);

// ---- synthetic corpus directory ---------------------------------------------
//
//   manifest.csv   record_id,sampling_rate_hz,n_leads,n_samples
//   <id>.csv       one column per lead (lead_0, lead_1, ...)
//   r_peaks.csv    record_id,sample_index  (ground truth)

void save_corpus(const std::filesystem::path& dir, std::span<const SynthRecord> records);
std::vector<EcgRecord> load_corpus(const std::filesystem::path& dir);

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

}  // namespace ecgvae
