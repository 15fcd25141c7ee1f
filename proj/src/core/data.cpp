#include "data.hpp"

#include <algorithm>
#include <set>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "error.hpp"
#include "text.hpp"

namespace popest::data {

using nlohmann::json;

namespace {

DataError line_error(std::size_t line, const std::string& reason) {
  return DataError("line " + std::to_string(line) + ": " + reason);
}

void normalize_individuals(std::vector<std::string>& ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
}

const std::set<std::string, std::less<>> kJsonKeys = {
    "image_id",       "collection_id", "photographer_id", "occasion",
    "timestamp",      "individual_ids", "raw_features",   "shared"};

std::string required_string(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    throw line_error(line, std::string("missing field '") + key + "'");
  }
  if (!it->is_string()) {
    throw line_error(line, std::string("field '") + key + "' must be a string");
  }
  auto value = it->get<std::string>();
  if (value.empty()) {
    throw line_error(line, std::string("field '") + key + "' is empty");
  }
  return value;
}

ImageRecord record_from_json(const json& obj, std::size_t line) {
  if (!obj.is_object()) throw line_error(line, "expected a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!kJsonKeys.contains(it.key())) {
      throw line_error(line, "unknown field '" + it.key() + "'");
    }
  }
  ImageRecord r;
  r.image_id = required_string(obj, "image_id", line);
  r.collection_id = required_string(obj, "collection_id", line);
  r.photographer_id = required_string(obj, "photographer_id", line);

  auto occ = obj.find("occasion");
  if (occ == obj.end() || !occ->is_number_integer()) {
    throw line_error(line, "field 'occasion' must be an integer");
  }
  r.occasion = occ->get<int>();

  if (auto ts = obj.find("timestamp"); ts != obj.end() && !ts->is_null()) {
    if (!ts->is_number_integer()) {
      throw line_error(line, "field 'timestamp' must be an integer");
    }
    r.timestamp = ts->get<std::int64_t>();
  }

  if (auto ids = obj.find("individual_ids"); ids != obj.end() && !ids->is_null()) {
    if (!ids->is_array()) {
      throw line_error(line, "field 'individual_ids' must be an array");
    }
    for (const auto& id : *ids) {
      if (!id.is_string() || id.get<std::string>().empty()) {
        throw line_error(line, "individual_ids entries must be non-empty strings");
      }
      r.individual_ids.push_back(id.get<std::string>());
    }
    normalize_individuals(r.individual_ids);
  }

  if (auto feats = obj.find("raw_features");
      feats != obj.end() && !feats->is_null()) {
    if (!feats->is_object()) {
      throw line_error(line, "field 'raw_features' must be an object");
    }
    for (auto it = feats->begin(); it != feats->end(); ++it) {
      if (!it->is_number()) {
        throw line_error(line, "raw feature '" + it.key() + "' must be a number");
      }
      r.raw_features.emplace(it.key(), it->get<double>());
    }
  }

  if (auto sh = obj.find("shared"); sh != obj.end() && !sh->is_null()) {
    if (!sh->is_boolean()) throw line_error(line, "field 'shared' must be a boolean");
    r.shared = sh->get<bool>();
  }
  return r;
}

std::vector<ImageRecord> parse_jsonl(std::string_view content) {
  std::vector<ImageRecord> out;
  const auto lines = text::split_lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    json obj;
    try {
      obj = json::parse(lines[i]);
    } catch (const json::parse_error& e) {
      throw line_error(i + 1, std::string("malformed JSON: ") + e.what());
    }
    out.push_back(record_from_json(obj, i + 1));
  }
  return out;
}

bool parse_bool_cell(const std::string& cell, std::size_t line) {
  if (cell == "1" || cell == "true") return true;
  if (cell == "0" || cell == "false") return false;
  throw line_error(line, "shared must be 0 or 1, got '" + cell + "'");
}

std::vector<ImageRecord> parse_csv(std::string_view content) {
  std::vector<ImageRecord> out;
  const auto lines = text::split_lines(content);
  std::size_t first = 0;
  while (first < lines.size() && text::trim(lines[first]).empty()) ++first;
  if (first == lines.size()) return out;

  const auto header = text::parse_csv_line(lines[first], first + 1);
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto name = text::trim(header[i]);
    if (!col.emplace(name, i).second) {
      throw line_error(first + 1, "duplicate column '" + name + "'");
    }
  }
  for (const char* required :
       {"image_id", "collection_id", "photographer_id", "occasion",
        "individual_ids"}) {
    if (!col.contains(required)) {
      throw line_error(first + 1, std::string("missing column '") + required + "'");
    }
  }
  static const std::set<std::string> fixed = {
      "image_id",  "collection_id",  "photographer_id", "occasion",
      "timestamp", "individual_ids", "shared"};

  for (std::size_t li = first + 1; li < lines.size(); ++li) {
    if (text::trim(lines[li]).empty()) continue;
    const std::size_t line = li + 1;
    const auto cells = text::parse_csv_line(lines[li], line);
    if (cells.size() != header.size()) {
      throw line_error(line, "expected " + std::to_string(header.size()) +
                                 " fields, found " + std::to_string(cells.size()));
    }
    auto cell = [&](const char* name) { return text::trim(cells[col.at(name)]); };
    ImageRecord r;
    r.image_id = cell("image_id");
    r.collection_id = cell("collection_id");
    r.photographer_id = cell("photographer_id");
    if (r.image_id.empty() || r.collection_id.empty() || r.photographer_id.empty()) {
      throw line_error(line, "empty identifier field");
    }
    try {
      r.occasion = static_cast<int>(text::parse_int(cell("occasion"), "occasion"));
      if (col.contains("timestamp") && !cell("timestamp").empty()) {
        r.timestamp = text::parse_int(cell("timestamp"), "timestamp");
      }
    } catch (const DataError& e) {
      throw line_error(line, e.what());
    }
    const auto ids = cell("individual_ids");
    if (!ids.empty()) {
      for (auto& id : text::split(ids, ';')) {
        auto t = text::trim(id);
        if (t.empty()) throw line_error(line, "empty individual id");
        r.individual_ids.push_back(std::move(t));
      }
      normalize_individuals(r.individual_ids);
    }
    if (col.contains("shared") && !cell("shared").empty()) {
      r.shared = parse_bool_cell(cell("shared"), line);
    }
    for (std::size_t i = 0; i < header.size(); ++i) {
      const auto name = text::trim(header[i]);
      if (fixed.contains(name)) continue;
      const auto value = text::trim(cells[i]);
      if (value.empty()) continue;
      try {
        r.raw_features.emplace(name, text::parse_double(value, name));
      } catch (const DataError& e) {
        throw line_error(line, e.what());
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

bool Collection::labeled() const {
  return std::any_of(images.begin(), images.end(),
                     [](const ImageRecord& r) { return r.shared.has_value(); });
}

bool Collection::contains(std::string_view image_id) const {
  return std::any_of(images.begin(), images.end(),
                     [&](const ImageRecord& r) { return r.image_id == image_id; });
}

EncounterMatrix::EncounterMatrix(std::vector<std::string> individuals,
                                 std::vector<int> occasions,
                                 std::vector<std::uint8_t> cells)
    : individuals_(std::move(individuals)),
      occasions_(std::move(occasions)),
      cells_(std::move(cells)) {
  if (cells_.size() != individuals_.size() * occasions_.size()) {
    throw DataError("encounter matrix: cell count does not match dimensions");
  }
  for (std::size_t t = 1; t < occasions_.size(); ++t) {
    if (occasions_[t] <= occasions_[t - 1]) {
      throw DataError("encounter matrix: occasions must be strictly increasing");
    }
  }
  for (std::size_t a = 0; a < individuals_.size(); ++a) {
    bool any = false;
    for (std::size_t t = 0; t < occasions_.size(); ++t) {
      const auto c = cells_[a * occasions_.size() + t];
      if (c > 1) throw DataError("encounter matrix: cells must be 0 or 1");
      any = any || c == 1;
    }
    if (!any) {
      throw DataError("encounter matrix: individual '" + individuals_[a] +
                      "' has an all-zero history");
    }
  }
}

EncounterMatrix EncounterMatrix::from_histories(
    const std::vector<std::vector<int>>& rows, std::vector<int> occasions) {
  std::vector<std::string> names;
  std::vector<std::uint8_t> cells;
  for (std::size_t a = 0; a < rows.size(); ++a) {
    if (rows[a].size() != occasions.size()) {
      throw DataError("history length does not match occasion count");
    }
    names.push_back(std::to_string(a));
    for (int v : rows[a]) cells.push_back(static_cast<std::uint8_t>(v));
  }
  return EncounterMatrix(std::move(names), std::move(occasions), std::move(cells));
}

RecordFormat parse_format(std::string_view tag) {
  if (tag == "jsonl") return RecordFormat::jsonl;
  if (tag == "csv") return RecordFormat::csv;
  throw UsageError("unknown record format '" + std::string(tag) +
                   "' (expected jsonl or csv)");
}

std::vector<ImageRecord> parse_image_records(std::string_view content,
                                             RecordFormat format) {
  auto records = format == RecordFormat::jsonl ? parse_jsonl(content)
                                               : parse_csv(content);
  std::unordered_set<std::string> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.image_id).second) {
      throw DataError("duplicate image_id '" + r.image_id + "'");
    }
  }
  return records;
}

std::vector<ImageRecord> load_image_records(const std::string& path) {
  const auto format = path.ends_with(".csv") ? RecordFormat::csv : RecordFormat::jsonl;
  return parse_image_records(text::read_file(path), format);
}

std::string to_jsonl_line(const ImageRecord& r) {
  // Keys are emitted in schema order, not alphabetically.
  nlohmann::ordered_json obj;
  obj["image_id"] = r.image_id;
  obj["collection_id"] = r.collection_id;
  obj["photographer_id"] = r.photographer_id;
  obj["occasion"] = r.occasion;
  if (r.timestamp) obj["timestamp"] = *r.timestamp;
  obj["individual_ids"] = r.individual_ids;
  obj["raw_features"] = nlohmann::ordered_json::object();
  for (const auto& [name, value] : r.raw_features) obj["raw_features"][name] = value;
  if (r.shared) obj["shared"] = *r.shared;
  return obj.dump();
}

std::string to_jsonl(const std::vector<ImageRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += to_jsonl_line(r);
    out.push_back('\n');
  }
  return out;
}

std::vector<Collection> group_collections(std::vector<ImageRecord> records) {
  std::map<std::string, Collection> by_id;
  for (auto& r : records) {
    auto [it, inserted] = by_id.try_emplace(r.collection_id);
    Collection& c = it->second;
    if (inserted) {
      c.collection_id = r.collection_id;
      c.photographer_id = r.photographer_id;
      c.occasion = r.occasion;
    } else if (c.photographer_id != r.photographer_id) {
      throw DataError("collection '" + c.collection_id +
                      "' has inconsistent photographers '" + c.photographer_id +
                      "' and '" + r.photographer_id + "'");
    } else if (c.occasion != r.occasion) {
      throw DataError("collection '" + c.collection_id +
                      "' spans occasions " + std::to_string(c.occasion) + " and " +
                      std::to_string(r.occasion));
    }
    c.images.push_back(std::move(r));
  }

  std::vector<Collection> out;
  out.reserve(by_id.size());
  for (auto& [id, c] : by_id) {
    std::stable_sort(c.images.begin(), c.images.end(),
                     [](const ImageRecord& a, const ImageRecord& b) {
                       // Untimed images sort after timed ones, by image_id.
                       auto key = [](const ImageRecord& r) {
                         return std::tuple(!r.timestamp.has_value(),
                                           r.timestamp.value_or(0),
                                           std::string_view(r.image_id));
                       };
                       return key(a) < key(b);
                     });
    std::set<std::string> all;
    std::set<std::string> shared;
    const bool labeled = c.labeled();
    for (const auto& img : c.images) {
      all.insert(img.individual_ids.begin(), img.individual_ids.end());
      if (!labeled || img.shared.value_or(false)) {
        shared.insert(img.individual_ids.begin(), img.individual_ids.end());
      }
    }
    c.distinct_individuals.assign(all.begin(), all.end());
    c.n_shared_individuals = shared.size();
    out.push_back(std::move(c));
  }
  return out;
}

Collection shared_view(const Collection& collection) {
  if (!collection.labeled()) return collection;
  Collection view;
  view.collection_id = collection.collection_id;
  view.photographer_id = collection.photographer_id;
  view.occasion = collection.occasion;
  std::set<std::string> ids;
  for (const auto& img : collection.images) {
    if (!img.shared.value_or(false)) continue;
    ImageRecord copy = img;
    copy.shared.reset();
    ids.insert(copy.individual_ids.begin(), copy.individual_ids.end());
    view.images.push_back(std::move(copy));
  }
  view.distinct_individuals.assign(ids.begin(), ids.end());
  view.n_shared_individuals = ids.size();
  return view;
}

EncounterMatrix build_encounter_matrix(const std::vector<Collection>& collections,
                                       const std::vector<int>& occasions) {
  if (occasions.empty()) throw UsageError("occasion list is empty");
  for (std::size_t t = 1; t < occasions.size(); ++t) {
    if (occasions[t] <= occasions[t - 1]) {
      throw UsageError("occasion list must be strictly increasing");
    }
  }
  std::map<std::string, std::vector<std::uint8_t>> rows;
  for (const auto& c : collections) {
    auto pos = std::lower_bound(occasions.begin(), occasions.end(), c.occasion);
    if (pos == occasions.end() || *pos != c.occasion) {
      throw DataError("collection '" + c.collection_id + "' has occasion " +
                      std::to_string(c.occasion) + " outside the occasion list");
    }
    const auto t = static_cast<std::size_t>(pos - occasions.begin());
    for (const auto& id : c.distinct_individuals) {
      auto& row = rows.try_emplace(id, occasions.size(), std::uint8_t{0}).first->second;
      row[t] = 1;
    }
  }
  std::vector<std::string> names;
  std::vector<std::uint8_t> cells;
  names.reserve(rows.size());
  cells.reserve(rows.size() * occasions.size());
  for (auto& [id, row] : rows) {
    names.push_back(id);
    cells.insert(cells.end(), row.begin(), row.end());
  }
  return EncounterMatrix(std::move(names), occasions, std::move(cells));
}

std::vector<SurveyLabel> parse_survey_labels(std::string_view content) {
  std::vector<SurveyLabel> labels;
  const auto lines = text::split_lines(content);
  std::size_t i = 0;
  while (i < lines.size() && text::trim(lines[i]).empty()) ++i;
  if (i == lines.size()) return labels;
  const auto header = text::parse_csv_line(lines[i], i + 1);
  if (header.size() != 2 || text::trim(header[0]) != "image_id" ||
      text::trim(header[1]) != "shared") {
    throw line_error(i + 1, "survey label header must be 'image_id,shared'");
  }
  std::unordered_set<std::string> seen;
  for (++i; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const auto cells = text::parse_csv_line(lines[i], i + 1);
    if (cells.size() != 2) throw line_error(i + 1, "expected 2 fields");
    const auto id = text::trim(cells[0]);
    const auto value = text::trim(cells[1]);
    if (id.empty()) throw line_error(i + 1, "empty image_id");
    if (value != "0" && value != "1") {
      throw line_error(i + 1, "shared must be 0 or 1, got '" + value + "'");
    }
    if (!seen.insert(id).second) {
      throw line_error(i + 1, "duplicate label for image_id '" + id + "'");
    }
    labels.push_back({id, value == "1"});
  }
  return labels;
}

std::string survey_labels_to_csv(const std::vector<ImageRecord>& records) {
  std::string out = "image_id,shared\n";
  for (const auto& r : records) {
    if (!r.shared) continue;
    out += text::csv_escape(r.image_id);
    out += *r.shared ? ",1\n" : ",0\n";
  }
  return out;
}

std::vector<ImageRecord> join_survey_labels(std::vector<ImageRecord> records,
                                            const std::vector<SurveyLabel>& labels) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < records.size(); ++i) index.emplace(records[i].image_id, i);
  std::vector<std::string> missing;
  for (const auto& label : labels) {
    auto it = index.find(label.image_id);
    if (it == index.end()) {
      missing.push_back(label.image_id);
      continue;
    }
    records[it->second].shared = label.shared;
  }
  if (!missing.empty()) {
    std::string msg = "survey labels reference unknown image_id(s):";
    for (const auto& id : missing) msg += " " + id;
    throw DataError(msg);
  }
  return records;
}

std::vector<int> occasions_of(const std::vector<ImageRecord>& records) {
  std::set<int> years;
  for (const auto& r : records) years.insert(r.occasion);
  return {years.begin(), years.end()};
}

}  // namespace popest::data
