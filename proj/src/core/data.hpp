#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace popest::data {

/// One photograph with its upstream annotations.
struct ImageRecord {
  std::string image_id;
  std::string collection_id;
  std::string photographer_id;
  int occasion = 0;
  std::optional<std::int64_t> timestamp;
  /// Sorted, no duplicates.
  std::vector<std::string> individual_ids;
  std::map<std::string, double> raw_features;
  std::optional<bool> shared;
};

/// Images of one album or SD-card set, taken by one photographer at one
/// occasion.
struct Collection {
  std::string collection_id;
  std::string photographer_id;
  int occasion = 0;
  /// Ordered by (timestamp, image_id); untimed images order by image_id.
  std::vector<ImageRecord> images;
  std::vector<std::string> distinct_individuals;
  /// Distinct individuals over shared images, or over all images when no
  /// image carries a share label (the collection is itself a shared album).
  std::size_t n_shared_individuals = 0;

  bool labeled() const;
  bool contains(std::string_view image_id) const;
};

/// Individual x occasion capture histories.
class EncounterMatrix {
 public:
  EncounterMatrix() = default;
  /// Validates the invariants: binary cells, strictly increasing occasions,
  /// no all-zero rows.
  EncounterMatrix(std::vector<std::string> individuals, std::vector<int> occasions,
                  std::vector<std::uint8_t> cells);

  /// Builds from plain histories; individuals are named by row index.
  static EncounterMatrix from_histories(
      const std::vector<std::vector<int>>& rows, std::vector<int> occasions);

  std::size_t n_individuals() const { return individuals_.size(); }
  std::size_t n_occasions() const { return occasions_.size(); }
  const std::vector<std::string>& individuals() const { return individuals_; }
  const std::vector<int>& occasions() const { return occasions_; }
  bool at(std::size_t individual, std::size_t occasion) const {
    return cells_[individual * occasions_.size() + occasion] != 0;
  }
  const std::vector<std::uint8_t>& cells() const { return cells_; }

 private:
  std::vector<std::string> individuals_;
  std::vector<int> occasions_;
  std::vector<std::uint8_t> cells_;
};

struct SurveyLabel {
  std::string image_id;
  bool shared = false;
};

enum class RecordFormat { jsonl, csv };

RecordFormat parse_format(std::string_view tag);

std::vector<ImageRecord> parse_image_records(std::string_view content,
                                             RecordFormat format);
std::vector<ImageRecord> load_image_records(const std::string& path);

/// Writes the canonical JSONL form, one record per line.
std::string to_jsonl(const std::vector<ImageRecord>& records);
std::string to_jsonl_line(const ImageRecord& record);

std::vector<Collection> group_collections(std::vector<ImageRecord> records);

/// Same collection restricted to its shared images; unlabeled collections
/// are returned unchanged. The view has no labels, so it reads as an album.
Collection shared_view(const Collection& collection);

EncounterMatrix build_encounter_matrix(const std::vector<Collection>& collections,
                                       const std::vector<int>& occasions);

std::vector<SurveyLabel> parse_survey_labels(std::string_view content);
std::string survey_labels_to_csv(const std::vector<ImageRecord>& records);

std::vector<ImageRecord> join_survey_labels(std::vector<ImageRecord> records,
                                            const std::vector<SurveyLabel>& labels);

/// Sorted distinct occasions present in the records.
std::vector<int> occasions_of(const std::vector<ImageRecord>& records);

}  // namespace popest::data
