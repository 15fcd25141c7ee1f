#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bias.hpp"
#include "data.hpp"

namespace popest::js {

/// Per-occasion capture statistics. Column t of every vector belongs to
/// occasions[t].
struct OccasionStatistics {
  std::vector<int> occasions;
  std::vector<std::int64_t> captured;            // n_t
  std::vector<std::int64_t> marked_recaptured;   // m_t
  std::vector<std::int64_t> released;            // R_t
  std::vector<std::int64_t> later_recaught;      // r_t
  std::vector<std::int64_t> skipped;             // z_t

  std::size_t size() const { return occasions.size(); }
  void validate() const;
};

OccasionStatistics occasion_statistics(const data::EncounterMatrix& matrix);

enum class Variant { classic, bias_corrected };
std::string to_string(Variant v);
Variant parse_variant(std::string_view tag);

struct OccasionEstimate {
  int occasion = 0;
  std::optional<double> marked_pop;   // M_hat
  std::optional<double> abundance;    // N_hat
  std::optional<double> survival;     // phi_hat, from t to t+1
  std::optional<double> recruitment;  // B_hat, between t and t+1
  /// Refers to abundance; reason is one of first_occasion, last_occasion,
  /// zero_recaptures, zero_marked.
  bool estimable = false;
  std::string reason;
};

struct PopulationEstimate {
  Variant variant = Variant::classic;
  OccasionStatistics stats;
  std::vector<OccasionEstimate> occasions;

  const OccasionEstimate* find(int occasion) const;
  /// occasion,captured,m,r,z,M_hat,N_hat,phi_hat,B_hat,estimable,reason
  std::string to_csv() const;
};

PopulationEstimate jolly_seber_estimate(const OccasionStatistics& stats,
                                        Variant variant = Variant::classic);

double lincoln_petersen(std::int64_t captured_1, std::int64_t captured_2,
                        std::int64_t recaptured, bool chapman);

/// Round half-up to an integer count.
std::int64_t round_count(double value);

/// Scales captured and released at each occasion by that occasion's factor.
/// Occasions missing from `factors` keep a factor of 1 only if nothing was
/// captured there; otherwise an error is raised.
OccasionStatistics scale_counts(const OccasionStatistics& stats,
                                const std::map<int, double>& factors);

/// Factor per occasion = mean k of the share estimates from that occasion.
OccasionStatistics apply_bias_to_counts(const std::vector<bias::ShareEstimate>& estimates,
                                        const data::EncounterMatrix& matrix);

}  // namespace popest::js
