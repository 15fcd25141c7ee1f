#include "bias.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "error.hpp"
#include "text.hpp"

namespace popest::bias {

double clamp_share(double raw_prediction, double floor) {
  if (!(floor > 0.0 && floor <= 1.0)) {
    throw UsageError("share floor must lie in (0, 1]");
  }
  if (std::isnan(raw_prediction)) throw DataError("share prediction is NaN");
  return std::clamp(raw_prediction, floor, 1.0);
}

double predict_share_fraction(const ml::Model& model, const features::FeatureVector& row,
                              const features::FeatureSchema& schema,
                              const features::Imputer& imputer, double floor) {
  if (model.n_features() != schema.size()) {
    throw DataError("share model expects " + std::to_string(model.n_features()) +
                    " features but the schema has " + std::to_string(schema.size()));
  }
  const auto x = imputer.apply({row}, schema);
  return clamp_share(model.predict_row(x.row(0)), floor);
}

double coefficient(double share_fraction) {
  if (!(share_fraction > 0.0 && share_fraction <= 1.0)) {
    throw UsageError("coefficient: share fraction must lie in (0, 1]");
  }
  return 1.0 / share_fraction;
}

double corrected_count(double k, std::size_t n_observed) {
  return k * static_cast<double>(n_observed);
}

PooledCoefficient pool_coefficient(const std::vector<ShareEstimate>& estimates,
                                   int year_m, int year_n) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& e : estimates) {
    if (e.occasion == year_m || e.occasion == year_n) {
      sum += e.coefficient;
      ++count;
    }
  }
  if (count == 0) {
    throw DataError("no share estimates in occasions " + std::to_string(year_m) + "/" +
                    std::to_string(year_n));
  }
  return {year_m, year_n, sum / static_cast<double>(count), count};
}

std::optional<double> compute_share_label(const data::Collection& source,
                                          const data::Collection& shared) {
  std::set<std::string> source_ids;
  for (const auto& img : source.images) source_ids.insert(img.image_id);
  std::set<std::string> shared_individuals;
  for (const auto& img : shared.images) {
    if (!source_ids.contains(img.image_id)) {
      throw DataError("shared image '" + img.image_id + "' is not in source set '" +
                      source.collection_id + "'");
    }
    shared_individuals.insert(img.individual_ids.begin(), img.individual_ids.end());
  }
  if (source.distinct_individuals.empty()) return std::nullopt;
  return static_cast<double>(shared_individuals.size()) /
         static_cast<double>(source.distinct_individuals.size());
}

std::optional<double> compute_share_label(const data::Collection& labeled_source) {
  return compute_share_label(labeled_source, data::shared_view(labeled_source));
}

std::vector<ShareEstimate> estimate_shares(const ml::Model& model,
                                           const features::FeatureSchema& schema,
                                           const features::Imputer& imputer,
                                           const std::vector<data::Collection>& observed,
                                           double floor) {
  std::vector<ShareEstimate> out;
  for (const auto& c : observed) {
    if (c.images.empty() || c.distinct_individuals.empty()) continue;
    const auto row = features::featurize_collection(c, schema);
    ShareEstimate e;
    e.collection_id = c.collection_id;
    e.occasion = c.occasion;
    e.n_observed = c.distinct_individuals.size();
    e.share_fraction = predict_share_fraction(model, row, schema, imputer, floor);
    e.coefficient = coefficient(e.share_fraction);
    e.corrected_count = corrected_count(e.coefficient, e.n_observed);
    out.push_back(std::move(e));
  }
  return out;
}

std::string share_estimates_csv(const std::vector<ShareEstimate>& estimates) {
  std::string out = "collection_id,occasion,n_i,s_hat,k_i,n_hat\n";
  for (const auto& e : estimates) {
    out += text::csv_join({e.collection_id, std::to_string(e.occasion),
                           std::to_string(e.n_observed),
                           text::format_double(e.share_fraction),
                           text::format_double(e.coefficient),
                           text::format_double(e.corrected_count)});
    out.push_back('\n');
  }
  return out;
}

}  // namespace popest::bias
