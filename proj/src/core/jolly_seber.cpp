#include "jolly_seber.hpp"

#include <cmath>

#include "error.hpp"
#include "text.hpp"

namespace popest::js {

void OccasionStatistics::validate() const {
  const std::size_t t = occasions.size();
  if (captured.size() != t || marked_recaptured.size() != t || released.size() != t ||
      later_recaught.size() != t || skipped.size() != t) {
    throw DataError("occasion statistics: column lengths differ");
  }
  for (std::size_t i = 0; i < t; ++i) {
    if (captured[i] < 0 || marked_recaptured[i] < 0 || released[i] < 0 ||
        later_recaught[i] < 0 || skipped[i] < 0) {
      throw DataError("occasion statistics: negative count at occasion " +
                      std::to_string(occasions[i]));
    }
    if (marked_recaptured[i] > captured[i]) {
      throw DataError("occasion statistics: m exceeds captured at occasion " +
                      std::to_string(occasions[i]));
    }
    if (later_recaught[i] > released[i]) {
      throw DataError("occasion statistics: r exceeds released at occasion " +
                      std::to_string(occasions[i]));
    }
  }
}

OccasionStatistics occasion_statistics(const data::EncounterMatrix& matrix) {
  const std::size_t T = matrix.n_occasions();
  if (T < 2) throw DataError("Jolly-Seber needs at least 2 occasions");
  OccasionStatistics s;
  s.occasions = matrix.occasions();
  s.captured.assign(T, 0);
  s.marked_recaptured.assign(T, 0);
  s.later_recaught.assign(T, 0);
  s.skipped.assign(T, 0);
  for (std::size_t i = 0; i < matrix.n_individuals(); ++i) {
    std::size_t first = T, last = 0;
    for (std::size_t t = 0; t < T; ++t) {
      if (matrix.at(i, t)) {
        if (first == T) first = t;
        last = t;
      }
    }
    if (first == T) continue;
    for (std::size_t t = 0; t < T; ++t) {
      const bool here = matrix.at(i, t);
      const bool before = first < t;
      const bool after = last > t;
      if (here) {
        ++s.captured[t];
        if (before) ++s.marked_recaptured[t];
        if (after) ++s.later_recaught[t];
      } else if (before && after) {
        ++s.skipped[t];
      }
    }
  }
  s.released = s.captured;
  return s;
}

std::string to_string(Variant v) {
  return v == Variant::classic ? "classic" : "bias_corrected";
}

Variant parse_variant(std::string_view tag) {
  if (tag == "classic") return Variant::classic;
  if (tag == "bias_corrected") return Variant::bias_corrected;
  throw UsageError("unknown Jolly-Seber variant '" + std::string(tag) + "'");
}

const OccasionEstimate* PopulationEstimate::find(int occasion) const {
  for (const auto& o : occasions) {
    if (o.occasion == occasion) return &o;
  }
  return nullptr;
}

namespace {

std::string cell(const std::optional<double>& v) {
  return v ? text::format_double(*v) : std::string();
}

}  // namespace

std::string PopulationEstimate::to_csv() const {
  std::string out = "occasion,captured,m,r,z,M_hat,N_hat,phi_hat,B_hat,estimable,reason\n";
  for (std::size_t t = 0; t < occasions.size(); ++t) {
    const auto& o = occasions[t];
    out += text::csv_join({std::to_string(o.occasion), std::to_string(stats.captured[t]),
                           std::to_string(stats.marked_recaptured[t]),
                           std::to_string(stats.later_recaught[t]),
                           std::to_string(stats.skipped[t]), cell(o.marked_pop),
                           cell(o.abundance), cell(o.survival), cell(o.recruitment),
                           o.estimable ? "1" : "0", o.reason});
    out.push_back('\n');
  }
  return out;
}

PopulationEstimate jolly_seber_estimate(const OccasionStatistics& stats, Variant variant) {
  stats.validate();
  const std::size_t T = stats.size();
  if (T < 2) throw DataError("Jolly-Seber needs at least 2 occasions");
  PopulationEstimate est;
  est.variant = variant;
  est.stats = stats;
  est.occasions.resize(T);

  for (std::size_t t = 0; t < T; ++t) {
    auto& o = est.occasions[t];
    o.occasion = stats.occasions[t];
    const auto n = static_cast<double>(stats.captured[t]);
    const auto m = static_cast<double>(stats.marked_recaptured[t]);
    const auto R = static_cast<double>(stats.released[t]);
    const auto r = static_cast<double>(stats.later_recaught[t]);
    const auto z = static_cast<double>(stats.skipped[t]);
    if (t == 0) {
      o.marked_pop = 0.0;
      o.reason = "first_occasion";
      continue;
    }
    if (t + 1 == T) {
      o.reason = "last_occasion";
      continue;
    }
    if (variant == Variant::classic) {
      if (stats.later_recaught[t] == 0) {
        o.reason = "zero_recaptures";
        continue;
      }
      o.marked_pop = m + R * z / r;
      if (stats.marked_recaptured[t] == 0) {
        o.reason = "zero_marked";
        continue;
      }
      o.abundance = n * *o.marked_pop / m;
    } else {
      o.marked_pop = m + (R + 1.0) * z / (r + 1.0);
      o.abundance = (n + 1.0) * *o.marked_pop / (m + 1.0);
    }
    o.estimable = true;
  }

  for (std::size_t t = 0; t + 1 < T; ++t) {
    auto& o = est.occasions[t];
    const auto& next = est.occasions[t + 1];
    if (!o.marked_pop || !next.marked_pop) continue;
    const double denom = *o.marked_pop - static_cast<double>(stats.marked_recaptured[t]) +
                         static_cast<double>(stats.released[t]);
    if (denom <= 0.0) continue;
    o.survival = *next.marked_pop / denom;
    if (o.abundance && next.abundance) {
      o.recruitment = *next.abundance -
                      *o.survival * (*o.abundance - static_cast<double>(stats.captured[t]) +
                                     static_cast<double>(stats.released[t]));
    }
  }
  return est;
}

double lincoln_petersen(std::int64_t captured_1, std::int64_t captured_2,
                        std::int64_t recaptured, bool chapman) {
  if (captured_1 < 0 || captured_2 < 0 || recaptured < 0) {
    throw UsageError("Lincoln-Petersen counts must be non-negative");
  }
  if (recaptured > std::min(captured_1, captured_2)) {
    throw UsageError("recaptured exceeds one of the capture counts");
  }
  const auto n1 = static_cast<double>(captured_1);
  const auto n2 = static_cast<double>(captured_2);
  const auto m = static_cast<double>(recaptured);
  if (chapman) return (n1 + 1.0) * (n2 + 1.0) / (m + 1.0) - 1.0;
  if (recaptured == 0) {
    throw DataError("Lincoln-Petersen is undefined with zero recaptures (use Chapman)");
  }
  return n1 * n2 / m;
}

std::int64_t round_count(double value) {
  return static_cast<std::int64_t>(std::floor(value + 0.5));
}

OccasionStatistics scale_counts(const OccasionStatistics& stats,
                                const std::map<int, double>& factors) {
  stats.validate();
  OccasionStatistics out = stats;
  for (std::size_t t = 0; t < stats.size(); ++t) {
    const int occ = stats.occasions[t];
    const auto it = factors.find(occ);
    if (it == factors.end()) {
      if (stats.captured[t] > 0) {
        throw DataError("occasion " + std::to_string(occ) +
                        " has sightings but no share estimates");
      }
      continue;
    }
    if (!(it->second >= 1.0) || !std::isfinite(it->second)) {
      throw DataError("bias factor for occasion " + std::to_string(occ) +
                      " must be finite and >= 1");
    }
    out.captured[t] = round_count(static_cast<double>(stats.captured[t]) * it->second);
    out.released[t] = round_count(static_cast<double>(stats.released[t]) * it->second);
  }
  return out;
}

OccasionStatistics apply_bias_to_counts(const std::vector<bias::ShareEstimate>& estimates,
                                        const data::EncounterMatrix& matrix) {
  std::map<int, std::pair<double, std::size_t>> sums;
  for (const auto& e : estimates) {
    auto& s = sums[e.occasion];
    s.first += e.coefficient;
    ++s.second;
  }
  std::map<int, double> factors;
  for (const auto& [occ, s] : sums) factors[occ] = s.first / static_cast<double>(s.second);
  return scale_counts(occasion_statistics(matrix), factors);
}

}  // namespace popest::js
