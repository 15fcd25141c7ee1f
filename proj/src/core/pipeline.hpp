#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bias.hpp"
#include "data.hpp"
#include "evaluation.hpp"
#include "features.hpp"
#include "jolly_seber.hpp"
#include "model.hpp"

namespace popest::pipeline {

struct CensusEntry {
  int year = 0;
  std::optional<double> official;
  bool lower_bound = false;
};

/// year,official,lower_bound. An empty official cell means no count; a
/// trailing '+' on the count also sets the lower bound flag.
struct ReferenceCensus {
  std::vector<CensusEntry> entries;

  const CensusEntry* find(int year) const;
  static ReferenceCensus parse(std::string_view content);
  std::string to_csv() const;
};

enum class PostMode { k_rec, constant };

struct RunConfig {
  std::string records;
  std::string survey_labels;
  std::string census;
  bool no_official = false;
  /// Optional collection schema to use instead of the one derived from the
  /// records.
  std::string schema;
  /// Optional trained share model; loaded when the file exists.
  std::string model_store;
  std::string output_dir;
  std::uint64_t seed = 0;
  ml::LearnerSpec estimate_learner = ml::LearnerSpec::make(ml::LearnerKind::gbt_regressor);
  std::optional<ml::LearnerSpec> shareability_learner;
  bool evaluate = false;
  eval::CvPlan cv;
  /// Empty means consecutive occasion pairs.
  std::vector<std::pair<int, int>> year_pairs;
  js::Variant js_variant = js::Variant::classic;
  PostMode post_mode = PostMode::k_rec;
  double post_constant = 1.0;
  double share_floor = bias::kDefaultShareFloor;

  /// Relative paths are resolved against base_dir when it is non-empty.
  static RunConfig from_json(const std::string& text, const std::string& base_dir = "");
  std::string to_json() const;
};

/// One row per labeled example. Collection tables hold share fractions
/// computed on SD sets with features taken from the shared album; image
/// tables hold shared flags with features taken from the SD set.
struct FeatureTable {
  features::FeatureSchema schema;
  std::vector<std::string> ids;
  std::vector<int> occasions;
  std::vector<features::FeatureVector> rows;
  std::vector<double> labels;

  /// id,occasion,<feature names...>,label; missing values are empty cells.
  std::string to_csv() const;
  static FeatureTable from_csv(std::string_view content, const features::FeatureSchema& schema);
};

FeatureTable collection_table(const std::vector<data::Collection>& collections,
                              const features::FeatureSchema& schema);
FeatureTable image_table(const std::vector<data::Collection>& collections,
                         const features::FeatureSchema& schema);

enum class Problem { estimate, shareability };
Problem parse_problem(std::string_view tag);

/// Groups records and builds the table for the problem: collection level
/// for estimate, image level for shareability. Without a schema, one is
/// derived from the records' raw feature names.
FeatureTable problem_table(const std::vector<data::ImageRecord>& records, Problem problem,
                           const std::optional<features::FeatureSchema>& schema = std::nullopt);

/// Schema, imputation means and the fitted model travel together.
struct ShareModelBundle {
  features::FeatureSchema schema;
  features::Imputer imputer;
  ml::Model model;

  std::string to_json() const;
  static ShareModelBundle from_json(const std::string& text);
};

ShareModelBundle train_bundle(const FeatureTable& table, const ml::LearnerSpec& spec);

/// Albums as seen on social media: shared view of labeled collections,
/// unlabeled collections as they are. Empty albums are dropped.
std::vector<data::Collection> observed_albums(const std::vector<data::Collection>& collections);

double rmse(const std::vector<double>& estimates, const std::vector<double>& references);

struct SummaryRow {
  int year = 0;
  std::optional<double> official;
  bool lower_bound = false;
  std::optional<double> ours;
  std::optional<double> jolly_seber;
  std::size_t images = 0;
};

struct Summary {
  std::vector<SummaryRow> rows;
  std::optional<double> rmse_ours;
  std::optional<double> rmse_jolly_seber;
  std::size_t rmse_occasions = 0;

  /// year,official,our_approach,jolly_seber,images + RMSE footer.
  std::string to_csv() const;
  static Summary from_csv(std::string_view content);
  /// Fixed-width text rendering of the same table.
  std::string render() const;
};

/// Everything the pipeline needs, already loaded.
struct PipelineInputs {
  std::vector<data::ImageRecord> records;
  std::optional<ReferenceCensus> census;
  std::optional<features::FeatureSchema> schema;
  std::optional<ShareModelBundle> pretrained;
};

struct PipelineOutputs {
  Summary summary;
  std::vector<bias::ShareEstimate> share_estimates;
  js::PopulationEstimate raw;
  js::PopulationEstimate corrected;
  /// Post-coefficient per occasion, where one applies.
  std::map<int, double> post_coefficients;
  ShareModelBundle bundle;
  /// File name -> content, in the output directory.
  std::map<std::string, std::string> files;
};

/// Pure part of the estimate run; no file access. Errors carry the stage
/// name ("featurize: ...", "train: ...", ...).
PipelineOutputs compute_pipeline(const RunConfig& config, const PipelineInputs& inputs);

/// Loads inputs, runs compute_pipeline and writes the outputs. A lock file
/// guards the output directory; on failure nothing new is left behind.
PipelineOutputs run_estimate_pipeline(const RunConfig& config);

/// Loads records and joins survey labels when a path is given.
std::vector<data::ImageRecord> load_labeled_records(const std::string& records_path,
                                                    const std::string& labels_path);

/// Writes files into dir through a staging directory.
void write_outputs(const std::string& dir, const std::map<std::string, std::string>& files);

}  // namespace popest::pipeline
