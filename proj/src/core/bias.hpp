#pragma once

#include <optional>
#include <string>
#include <vector>

#include "data.hpp"
#include "features.hpp"
#include "model.hpp"

namespace popest::bias {

/// Lower clamp on predicted share fractions; k never exceeds 1/floor.
inline constexpr double kDefaultShareFloor = 0.05;

struct ShareEstimate {
  std::string collection_id;
  int occasion = 0;
  /// Distinct individuals observed in the shared collection.
  std::size_t n_observed = 0;
  double share_fraction = 1.0;
  double coefficient = 1.0;
  double corrected_count = 0.0;
};

struct PooledCoefficient {
  int year_m = 0;
  int year_n = 0;
  double k_rec = 1.0;
  std::size_t contributing = 0;
};

double clamp_share(double raw_prediction, double floor = kDefaultShareFloor);

/// Regression prediction for one collection row, clamped into [floor, 1].
double predict_share_fraction(const ml::Model& model, const features::FeatureVector& row,
                              const features::FeatureSchema& schema,
                              const features::Imputer& imputer,
                              double floor = kDefaultShareFloor);

/// k = 1 / s. Requires s in (0, 1].
double coefficient(double share_fraction);
/// k * n, unrounded.
double corrected_count(double k, std::size_t n_observed);

/// Mean k over estimates whose occasion is year_m or year_n.
PooledCoefficient pool_coefficient(const std::vector<ShareEstimate>& estimates,
                                   int year_m, int year_n);

/// |individuals in shared images| / |individuals in the source set|, or
/// nullopt when the source set sights nobody (excluded from training).
/// Throws when `shared` contains an image that is not in `source`.
std::optional<double> compute_share_label(const data::Collection& source,
                                          const data::Collection& shared);

/// Same ratio from a labeled SD collection (shared flags on its images).
std::optional<double> compute_share_label(const data::Collection& labeled_source);

/// Builds one estimate per collection with at least one observed individual.
std::vector<ShareEstimate> estimate_shares(const ml::Model& model,
                                           const features::FeatureSchema& schema,
                                           const features::Imputer& imputer,
                                           const std::vector<data::Collection>& observed,
                                           double floor = kDefaultShareFloor);

/// collection_id,occasion,n_i,s_hat,k_i,n_hat
std::string share_estimates_csv(const std::vector<ShareEstimate>& estimates);

}  // namespace popest::bias
