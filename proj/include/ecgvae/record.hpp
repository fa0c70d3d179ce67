#pragma once

#include <string>
#include <vector>

namespace ecgvae {

/// Multi-lead recording; every lead has the same length, millivolts.
struct EcgRecord {
  double sampling_rate_hz = 500.0;
  std::vector<std::vector<float>> leads;
  std::string record_id;

  std::size_t length() const { return leads.empty() ? 0 : leads.front().size(); }
  double duration_s() const { return double(length()) / sampling_rate_hz; }
  /// Throws ParameterError/DimensionError if the invariants do not hold.
  void validate() const;

  bool operator==(const EcgRecord&) const = default;
};

}  // namespace ecgvae
