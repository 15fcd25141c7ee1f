#include "pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <system_error>

#include "error.hpp"
#include "text.hpp"

namespace popest::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------- census

const CensusEntry* ReferenceCensus::find(int year) const {
  for (const auto& e : entries) {
    if (e.year == year) return &e;
  }
  return nullptr;
}

ReferenceCensus ReferenceCensus::parse(std::string_view content) {
  const auto lines = text::split_lines(content);
  if (lines.empty()) throw DataError("census: empty file");
  const auto header = text::parse_csv_line(lines[0], 1);
  if (header.size() < 2 || text::trim(header[0]) != "year" ||
      text::trim(header[1]) != "official" ||
      (header.size() == 3 && text::trim(header[2]) != "lower_bound") || header.size() > 3) {
    throw DataError("census: header must be 'year,official,lower_bound'");
  }
  ReferenceCensus census;
  std::set<int> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const auto cells = text::parse_csv_line(lines[i], i + 1);
    if (cells.size() != header.size()) {
      throw DataError("census line " + std::to_string(i + 1) + ": expected " +
                      std::to_string(header.size()) + " fields");
    }
    CensusEntry e;
    e.year = static_cast<int>(text::parse_int(text::trim(cells[0]), "year"));
    std::string official(text::trim(cells[1]));
    if (official.ends_with('+')) {
      e.lower_bound = true;
      official.pop_back();
    }
    if (!official.empty() && official != "N/A") {
      e.official = text::parse_double(official, "official");
      if (!(*e.official > 0)) {
        throw DataError("census line " + std::to_string(i + 1) + ": count must be positive");
      }
    }
    if (cells.size() == 3) {
      const auto flag = text::trim(cells[2]);
      if (flag == "1" || flag == "true") {
        e.lower_bound = true;
      } else if (!(flag.empty() || flag == "0" || flag == "false")) {
        throw DataError("census line " + std::to_string(i + 1) +
                        ": lower_bound must be 0 or 1");
      }
    }
    if (!seen.insert(e.year).second) {
      throw DataError("census: duplicate year " + std::to_string(e.year));
    }
    census.entries.push_back(e);
  }
  return census;
}

std::string ReferenceCensus::to_csv() const {
  std::string out = "year,official,lower_bound\n";
  for (const auto& e : entries) {
    out += std::to_string(e.year) + "," +
           (e.official ? text::format_double(*e.official) : std::string()) + "," +
           (e.lower_bound ? "1" : "0") + "\n";
  }
  return out;
}

// ---------------------------------------------------------------- config

namespace {

std::string resolve(const std::string& path, const std::string& base) {
  if (path.empty() || base.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base) / path).lexically_normal().string();
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) && !j.at(key).is_null() ? j.at(key).get<T>() : fallback;
}

}  // namespace

RunConfig RunConfig::from_json(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("run config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("run config: expected a JSON object");
  static const std::set<std::string> known = {
      "records",     "survey_labels",   "census",     "no_official",
      "schema",      "model_store",     "output_dir", "seed",
      "estimate_learner", "shareability_learner", "evaluate", "cv",
      "year_pairs",  "js_variant",      "post_coefficient", "share_floor"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw UsageError("run config: unknown key '" + key + "'");
  }
  RunConfig c;
  try {
    c.records = resolve(get_or<std::string>(j, "records", ""), base_dir);
    c.survey_labels = resolve(get_or<std::string>(j, "survey_labels", ""), base_dir);
    c.census = resolve(get_or<std::string>(j, "census", ""), base_dir);
    c.no_official = get_or<bool>(j, "no_official", false);
    c.schema = resolve(get_or<std::string>(j, "schema", ""), base_dir);
    c.model_store = resolve(get_or<std::string>(j, "model_store", ""), base_dir);
    c.output_dir = resolve(get_or<std::string>(j, "output_dir", ""), base_dir);
    c.seed = get_or<std::uint64_t>(j, "seed", 0);
    if (j.contains("estimate_learner")) {
      c.estimate_learner = ml::LearnerSpec::from_json(j.at("estimate_learner"));
    }
    if (c.estimate_learner.task != ml::Task::regression) {
      throw UsageError("run config: estimate_learner must be a regression learner");
    }
    if (j.contains("shareability_learner") && !j.at("shareability_learner").is_null()) {
      c.shareability_learner = ml::LearnerSpec::from_json(j.at("shareability_learner"));
      if (c.shareability_learner->task != ml::Task::classification) {
        throw UsageError("run config: shareability_learner must be a classifier");
      }
    }
    c.evaluate = get_or<bool>(j, "evaluate", false);
    if (j.contains("cv")) {
      const auto& cv = j.at("cv");
      for (const auto& [key, _] : cv.items()) {
        if (key != "n_folds" && key != "n_repeats" && key != "stratified") {
          throw UsageError("run config: unknown cv key '" + key + "'");
        }
      }
      c.cv.n_folds = get_or<std::size_t>(cv, "n_folds", c.cv.n_folds);
      c.cv.n_repeats = get_or<std::size_t>(cv, "n_repeats", c.cv.n_repeats);
      c.cv.stratified = get_or<bool>(cv, "stratified", false);
    }
    c.cv.seed = c.seed;
    if (j.contains("year_pairs")) {
      for (const auto& p : j.at("year_pairs")) {
        const auto pair = p.get<std::vector<int>>();
        if (pair.size() != 2) throw UsageError("run config: year_pairs entries need 2 years");
        c.year_pairs.emplace_back(pair[0], pair[1]);
      }
    }
    c.js_variant = js::parse_variant(get_or<std::string>(j, "js_variant", "classic"));
    if (j.contains("post_coefficient")) {
      const auto& p = j.at("post_coefficient");
      const auto mode = p.is_string() ? p.get<std::string>() : p.at("mode").get<std::string>();
      if (mode == "k_rec") {
        c.post_mode = PostMode::k_rec;
        if (p.is_object() && p.contains("value")) {
          throw UsageError("run config: post_coefficient k_rec takes no value");
        }
      } else if (mode == "constant") {
        c.post_mode = PostMode::constant;
        if (!p.is_object() || !p.contains("value")) {
          throw UsageError("run config: post_coefficient constant needs a value");
        }
        c.post_constant = p.at("value").get<double>();
        if (!(c.post_constant > 0)) {
          throw UsageError("run config: post_coefficient value must be positive");
        }
      } else {
        throw UsageError("run config: post_coefficient mode must be k_rec or constant");
      }
    }
    c.share_floor = get_or<double>(j, "share_floor", c.share_floor);
    if (!(c.share_floor > 0 && c.share_floor <= 1)) {
      throw UsageError("run config: share_floor must lie in (0, 1]");
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("run config: ") + e.what());
  }
  c.estimate_learner.seed = c.seed;
  if (c.shareability_learner) c.shareability_learner->seed = c.seed;
  return c;
}

std::string RunConfig::to_json() const {
  ordered_json j;
  j["records"] = records;
  j["survey_labels"] = survey_labels;
  j["census"] = census;
  j["no_official"] = no_official;
  j["schema"] = schema;
  j["model_store"] = model_store;
  j["output_dir"] = output_dir;
  j["seed"] = seed;
  j["estimate_learner"] = estimate_learner.to_json();
  j["shareability_learner"] =
      shareability_learner ? shareability_learner->to_json() : ordered_json(nullptr);
  j["evaluate"] = evaluate;
  j["cv"] = {{"n_folds", cv.n_folds}, {"n_repeats", cv.n_repeats}, {"stratified", cv.stratified}};
  j["year_pairs"] = ordered_json::array();
  for (const auto& [a, b] : year_pairs) j["year_pairs"].push_back({a, b});
  j["js_variant"] = js::to_string(js_variant);
  if (post_mode == PostMode::k_rec) {
    j["post_coefficient"] = {{"mode", "k_rec"}};
  } else {
    j["post_coefficient"] = {{"mode", "constant"}, {"value", post_constant}};
  }
  j["share_floor"] = share_floor;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------- tables

std::string FeatureTable::to_csv() const {
  std::vector<std::string> header{"id", "occasion"};
  for (const auto& n : schema.names()) header.push_back(n);
  header.push_back("label");
  std::string out = text::csv_join(header) + "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<std::string> cells{ids[i], std::to_string(occasions[i])};
    for (const auto& v : rows[i].values) {
      cells.push_back(v ? text::format_double(*v) : std::string());
    }
    cells.push_back(text::format_double(labels[i]));
    out += text::csv_join(cells) + "\n";
  }
  return out;
}

FeatureTable FeatureTable::from_csv(std::string_view content,
                                    const features::FeatureSchema& schema) {
  const auto lines = text::split_lines(content);
  if (lines.empty()) throw DataError("feature table: empty file");
  std::vector<std::string> expected{"id", "occasion"};
  for (const auto& n : schema.names()) expected.push_back(n);
  expected.push_back("label");
  if (text::parse_csv_line(lines[0], 1) != expected) {
    throw DataError("feature table: header does not match the schema");
  }
  FeatureTable t;
  t.schema = schema;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const auto cells = text::parse_csv_line(lines[i], i + 1);
    if (cells.size() != expected.size()) {
      throw DataError("feature table line " + std::to_string(i + 1) + ": expected " +
                      std::to_string(expected.size()) + " fields");
    }
    t.ids.push_back(cells[0]);
    t.occasions.push_back(static_cast<int>(text::parse_int(cells[1], "occasion")));
    features::FeatureVector v;
    v.schema_key = schema.key();
    for (std::size_t c = 2; c + 1 < cells.size(); ++c) {
      if (cells[c].empty()) {
        v.values.push_back(std::nullopt);
      } else {
        v.values.push_back(text::parse_double(cells[c], expected[c]));
      }
    }
    t.rows.push_back(std::move(v));
    t.labels.push_back(text::parse_double(cells.back(), "label"));
  }
  return t;
}

FeatureTable collection_table(const std::vector<data::Collection>& collections,
                              const features::FeatureSchema& schema) {
  FeatureTable t;
  t.schema = schema;
  for (const auto& c : collections) {
    if (!c.labeled()) continue;
    const auto label = bias::compute_share_label(c);
    if (!label) continue;
    const auto album = data::shared_view(c);
    // Albums with nothing shared never reach social media.
    if (album.images.empty()) continue;
    t.ids.push_back(c.collection_id);
    t.occasions.push_back(c.occasion);
    t.rows.push_back(features::featurize_collection(album, schema));
    t.labels.push_back(*label);
  }
  return t;
}

FeatureTable image_table(const std::vector<data::Collection>& collections,
                         const features::FeatureSchema& schema) {
  FeatureTable t;
  t.schema = schema;
  for (const auto& c : collections) {
    if (!c.labeled()) continue;
    const auto rows = features::featurize_images(c, schema);
    for (std::size_t i = 0; i < c.images.size(); ++i) {
      const auto& img = c.images[i];
      if (!img.shared) continue;
      t.ids.push_back(img.image_id);
      t.occasions.push_back(c.occasion);
      t.rows.push_back(rows[i]);
      t.labels.push_back(*img.shared ? 1.0 : 0.0);
    }
  }
  return t;
}

Problem parse_problem(std::string_view tag) {
  if (tag == "estimate") return Problem::estimate;
  if (tag == "shareability") return Problem::shareability;
  throw UsageError("unknown problem '" + std::string(tag) + "' (estimate|shareability)");
}

FeatureTable problem_table(const std::vector<data::ImageRecord>& records, Problem problem,
                           const std::optional<features::FeatureSchema>& schema) {
  const auto collections = data::group_collections(records);
  const auto raw = features::raw_feature_names(records);
  if (problem == Problem::estimate) {
    return collection_table(collections,
                            schema ? *schema : features::FeatureSchema::for_collections(raw));
  }
  return image_table(collections, schema ? *schema : features::FeatureSchema::for_images(raw));
}

// ---------------------------------------------------------------- bundle

std::string ShareModelBundle::to_json() const {
  ordered_json j;
  j["version"] = "1";
  j["schema"] = ordered_json::parse(schema.to_json());
  j["imputer"] = imputer.means;
  j["model"] = ordered_json::parse(model.to_json());
  return j.dump(2) + "\n";
}

ShareModelBundle ShareModelBundle::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("model bundle: invalid JSON: ") + e.what());
  }
  try {
    if (j.at("version").get<std::string>() != "1") {
      throw DataError("model bundle: unsupported version");
    }
    ShareModelBundle b{features::FeatureSchema::from_json(j.at("schema").dump()),
                       features::Imputer{j.at("imputer").get<std::vector<double>>()},
                       ml::Model::from_json(j.at("model").dump())};
    if (b.imputer.means.size() != b.schema.size() || b.model.n_features() != b.schema.size()) {
      throw DataError("model bundle: schema, imputer and model sizes disagree");
    }
    return b;
  } catch (const json::exception& e) {
    throw DataError(std::string("model bundle: ") + e.what());
  }
}

ShareModelBundle train_bundle(const FeatureTable& table, const ml::LearnerSpec& spec) {
  if (table.rows.empty()) throw DataError("no labeled training rows");
  auto assembled = features::assemble_dataset(table.rows, table.labels, table.schema);
  auto model = ml::fit(spec, assembled.dataset);
  return {table.schema, std::move(assembled.imputer), std::move(model)};
}

std::vector<data::Collection> observed_albums(const std::vector<data::Collection>& collections) {
  std::vector<data::Collection> out;
  for (const auto& c : collections) {
    auto album = c.labeled() ? data::shared_view(c) : c;
    if (!album.images.empty()) out.push_back(std::move(album));
  }
  return out;
}

// ---------------------------------------------------------------- summary

double rmse(const std::vector<double>& estimates, const std::vector<double>& references) {
  if (estimates.empty()) throw UsageError("rmse: empty input");
  if (estimates.size() != references.size()) throw UsageError("rmse: length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double d = estimates[i] - references[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(estimates.size()));
}

namespace {

std::string whole(const std::optional<double>& v) {
  return v ? text::format_fixed(*v, 0) : std::string();
}

std::optional<double> optional_cell(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  return text::parse_double(cell, "summary value");
}

}  // namespace

std::string Summary::to_csv() const {
  std::string out = "year,official,our_approach,jolly_seber,images\n";
  for (const auto& r : rows) {
    std::string official = whole(r.official);
    if (r.official && r.lower_bound) official += "+";
    out += text::csv_join({std::to_string(r.year), official, whole(r.ours),
                           whole(r.jolly_seber), std::to_string(r.images)});
    out.push_back('\n');
  }
  out += "RMSE,," + (rmse_ours ? text::format_fixed(*rmse_ours, 1) : std::string()) + "," +
         (rmse_jolly_seber ? text::format_fixed(*rmse_jolly_seber, 1) : std::string()) + ",\n";
  return out;
}

Summary Summary::from_csv(std::string_view content) {
  const auto lines = text::split_lines(content);
  if (lines.empty() || lines[0] != "year,official,our_approach,jolly_seber,images") {
    throw DataError("summary: header must be 'year,official,our_approach,jolly_seber,images'");
  }
  Summary s;
  bool footer = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    if (footer) throw DataError("summary: rows after the RMSE footer");
    const auto cells = text::parse_csv_line(lines[i], i + 1);
    if (cells.size() != 5) {
      throw DataError("summary line " + std::to_string(i + 1) + ": expected 5 fields");
    }
    if (cells[0] == "RMSE") {
      footer = true;
      s.rmse_ours = optional_cell(cells[2]);
      s.rmse_jolly_seber = optional_cell(cells[3]);
      continue;
    }
    SummaryRow r;
    r.year = static_cast<int>(text::parse_int(cells[0], "year"));
    std::string official = cells[1];
    if (official.ends_with('+')) {
      r.lower_bound = true;
      official.pop_back();
    }
    r.official = optional_cell(official);
    r.ours = optional_cell(cells[2]);
    r.jolly_seber = optional_cell(cells[3]);
    r.images = static_cast<std::size_t>(text::parse_int(cells[4], "images"));
    s.rows.push_back(r);
  }
  if (!footer) throw DataError("summary: missing RMSE footer");
  return s;
}

std::string Summary::render() const {
  auto na = [](const std::optional<double>& v, int decimals) {
    return v ? text::format_fixed(*v, decimals) : std::string("N/A");
  };
  std::vector<std::vector<std::string>> table;
  table.push_back({"Year", "Official", "Our Approach", "Jolly-Seber", "Images"});
  for (const auto& r : rows) {
    std::string official = na(r.official, 0);
    if (r.official && r.lower_bound) official += "+";
    table.push_back({std::to_string(r.year), official, na(r.ours, 0), na(r.jolly_seber, 0),
                     std::to_string(r.images)});
  }
  table.push_back({"RMSE", "-", na(rmse_ours, 1), na(rmse_jolly_seber, 1), "-"});
  std::vector<std::size_t> width(5, 0);
  for (const auto& row : table) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (i + 1 == table.size()) {
      for (std::size_t c = 0; c < 5; ++c) out += std::string(width[c], '-') + (c < 4 ? "  " : "\n");
    }
    for (std::size_t c = 0; c < 5; ++c) {
      const auto& cell = table[i][c];
      out += std::string(width[c] - cell.size(), ' ') + cell;
      out += c < 4 ? "  " : "\n";
    }
  }
  return out;
}

// ---------------------------------------------------------------- run

namespace {

template <typename F>
auto staged(const char* stage, F&& body) -> decltype(body()) {
  const std::string tag = std::string(stage) + ": ";
  try {
    return body();
  } catch (const UsageError& e) {
    throw UsageError(tag + e.what());
  } catch (const DataError& e) {
    throw DataError(tag + e.what());
  } catch (const IoError& e) {
    throw IoError(tag + e.what());
  }
}

std::vector<std::pair<int, int>> default_pairs(const std::vector<int>& occasions) {
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t i = 1; i < occasions.size(); ++i) {
    pairs.emplace_back(occasions[i - 1], occasions[i]);
  }
  return pairs;
}

std::string coefficients_csv(const std::vector<bias::PooledCoefficient>& pooled) {
  std::string out = "year_m,year_n,k_rec,contributing\n";
  for (const auto& p : pooled) {
    out += std::to_string(p.year_m) + "," + std::to_string(p.year_n) + "," +
           text::format_double(p.k_rec) + "," + std::to_string(p.contributing) + "\n";
  }
  return out;
}

}  // namespace

PipelineOutputs compute_pipeline(const RunConfig& config, const PipelineInputs& inputs) {
  PipelineOutputs out;

  const auto collections =
      staged("ingest", [&] { return data::group_collections(inputs.records); });
  if (collections.empty()) throw DataError("ingest: no records");

  const auto schema = staged("featurize", [&] {
    if (inputs.pretrained) return inputs.pretrained->schema;
    if (inputs.schema) return *inputs.schema;
    return features::FeatureSchema::for_collections(
        features::raw_feature_names(inputs.records));
  });
  if (schema.level() != features::Level::collection) {
    throw UsageError("featurize: the share model needs a collection-level schema");
  }

  if (inputs.pretrained) {
    out.bundle = *inputs.pretrained;
  } else {
    const auto table = staged("featurize", [&] { return collection_table(collections, schema); });
    out.bundle = staged("train", [&] {
      auto spec = config.estimate_learner;
      spec.seed = config.seed;
      return train_bundle(table, spec);
    });
    if (config.evaluate) {
      staged("evaluate", [&] {
        auto assembled = features::assemble_dataset(table.rows, table.labels, schema);
        auto plan = config.cv;
        plan.seed = config.seed;
        const auto report = eval::cross_validate(out.bundle.model.spec(), assembled.dataset,
                                                 plan, {eval::Metric::r2, eval::Metric::mse});
        out.files["evaluation_estimate.json"] = report.to_json();
        if (config.shareability_learner) {
          const auto image_schema = features::FeatureSchema::for_images(
              features::raw_feature_names(inputs.records));
          const auto images = image_table(collections, image_schema);
          auto image_data = features::assemble_dataset(images.rows, images.labels, image_schema);
          auto share_plan = plan;
          share_plan.stratified = true;
          auto spec = *config.shareability_learner;
          spec.seed = config.seed;
          const auto share_report =
              eval::cross_validate(spec, image_data.dataset, share_plan,
                                   {eval::Metric::accuracy, eval::Metric::f1});
          out.files["evaluation_shareability.json"] = share_report.to_json();
        }
        return 0;
      });
    }
  }

  const auto albums = observed_albums(collections);
  if (albums.empty()) throw DataError("estimate: no shared images to estimate from");
  std::vector<int> occasions;
  for (const auto& a : albums) occasions.push_back(a.occasion);
  std::sort(occasions.begin(), occasions.end());
  occasions.erase(std::unique(occasions.begin(), occasions.end()), occasions.end());

  out.share_estimates = staged("bias", [&] {
    return bias::estimate_shares(out.bundle.model, out.bundle.schema, out.bundle.imputer,
                                 albums, config.share_floor);
  });

  staged("estimate", [&] {
    const auto matrix = data::build_encounter_matrix(albums, occasions);
    const auto raw_stats = js::occasion_statistics(matrix);
    const auto corrected_stats = js::apply_bias_to_counts(out.share_estimates, matrix);
    for (auto variant : {js::Variant::classic, js::Variant::bias_corrected}) {
      const auto raw = js::jolly_seber_estimate(raw_stats, variant);
      const auto corrected = js::jolly_seber_estimate(corrected_stats, variant);
      out.files["population_raw_" + js::to_string(variant) + ".csv"] = raw.to_csv();
      out.files["population_corrected_" + js::to_string(variant) + ".csv"] = corrected.to_csv();
      if (variant == config.js_variant) {
        out.raw = raw;
        out.corrected = corrected;
      }
    }
    return 0;
  });

  staged("report", [&] {
    const auto pairs = config.year_pairs.empty() ? default_pairs(occasions) : config.year_pairs;
    std::vector<bias::PooledCoefficient> pooled;
    std::map<std::pair<int, int>, double> k_rec;
    for (const auto& [a, b] : pairs) {
      const bool any = std::any_of(out.share_estimates.begin(), out.share_estimates.end(),
                                   [&](const bias::ShareEstimate& e) {
                                     return e.occasion == a || e.occasion == b;
                                   });
      if (!any) continue;
      pooled.push_back(bias::pool_coefficient(out.share_estimates, a, b));
      k_rec[{a, b}] = pooled.back().k_rec;
    }
    for (int occ : occasions) {
      if (config.post_mode == PostMode::constant) {
        out.post_coefficients[occ] = config.post_constant;
        continue;
      }
      for (const auto& p : pairs) {
        if (p.first != occ && p.second != occ) continue;
        if (auto it = k_rec.find(p); it != k_rec.end()) {
          out.post_coefficients[occ] = it->second;
          break;
        }
      }
    }

    std::map<int, std::size_t> image_counts;
    for (const auto& a : albums) image_counts[a.occasion] += a.images.size();

    std::vector<int> years = occasions;
    if (inputs.census) {
      for (const auto& e : inputs.census->entries) years.push_back(e.year);
      std::sort(years.begin(), years.end());
      years.erase(std::unique(years.begin(), years.end()), years.end());
    }
    std::vector<double> ours, raw, official;
    for (int year : years) {
      SummaryRow row;
      row.year = year;
      if (inputs.census) {
        if (const auto* e = inputs.census->find(year)) {
          row.official = e->official;
          row.lower_bound = e->lower_bound;
        }
      }
      if (const auto* o = out.raw.find(year)) row.jolly_seber = o->abundance;
      if (const auto* o = out.corrected.find(year); o && o->abundance) {
        if (auto it = out.post_coefficients.find(year); it != out.post_coefficients.end()) {
          row.ours = *o->abundance * it->second;
        }
      }
      if (auto it = image_counts.find(year); it != image_counts.end()) row.images = it->second;
      if (row.official && row.ours && row.jolly_seber) {
        ours.push_back(*row.ours);
        raw.push_back(*row.jolly_seber);
        official.push_back(*row.official);
      }
      out.summary.rows.push_back(row);
    }
    out.summary.rmse_occasions = official.size();
    if (!official.empty()) {
      out.summary.rmse_ours = rmse(ours, official);
      out.summary.rmse_jolly_seber = rmse(raw, official);
    }
    out.files["coefficients.csv"] = coefficients_csv(pooled);
    return 0;
  });

  out.files["share_estimates.csv"] = bias::share_estimates_csv(out.share_estimates);
  out.files["summary.csv"] = out.summary.to_csv();
  out.files["model.json"] = out.bundle.to_json();
  out.files["config.resolved.json"] = config.to_json();
  return out;
}

std::vector<data::ImageRecord> load_labeled_records(const std::string& records_path,
                                                    const std::string& labels_path) {
  auto records = data::load_image_records(records_path);
  if (!labels_path.empty()) {
    const auto labels = data::parse_survey_labels(text::read_file(labels_path));
    records = data::join_survey_labels(std::move(records), labels);
  }
  return records;
}

namespace {

class DirectoryLock {
 public:
  explicit DirectoryLock(fs::path path) : path_(std::move(path)) {
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f) {
      throw IoError("output directory is in use (lock file " + path_.string() + " exists)");
    }
    std::fclose(f);
  }
  ~DirectoryLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  fs::path path_;
};

}  // namespace

void write_outputs(const std::string& dir, const std::map<std::string, std::string>& files) {
  const fs::path out(dir);
  const fs::path staging = out / ".staging";
  std::error_code ec;
  fs::remove_all(staging, ec);
  std::vector<fs::path> placed;
  try {
    fs::create_directories(staging);
    for (const auto& [name, content] : files) text::write_file((staging / name).string(), content);
    for (const auto& [name, _] : files) {
      fs::rename(staging / name, out / name);
      placed.push_back(out / name);
    }
    fs::remove_all(staging);
  } catch (const fs::filesystem_error& e) {
    for (const auto& p : placed) fs::remove(p, ec);
    fs::remove_all(staging, ec);
    throw IoError(std::string("writing outputs: ") + e.what());
  } catch (...) {
    for (const auto& p : placed) fs::remove(p, ec);
    fs::remove_all(staging, ec);
    throw;
  }
}

PipelineOutputs run_estimate_pipeline(const RunConfig& config) {
  if (config.output_dir.empty()) throw UsageError("no output directory given");
  if (config.records.empty()) throw UsageError("no records path given");
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw IoError("cannot create output directory " + config.output_dir);
  DirectoryLock lock(fs::path(config.output_dir) / ".popest.lock");

  PipelineInputs inputs;
  inputs.records = staged("ingest", [&] {
    return load_labeled_records(config.records, config.survey_labels);
  });
  if (!config.no_official) {
    if (config.census.empty()) {
      throw DataError("ingest: no census file given (use --no-official to skip)");
    }
    if (!fs::exists(config.census)) {
      throw DataError("ingest: census file not found: " + config.census);
    }
    inputs.census = staged("ingest", [&] {
      return ReferenceCensus::parse(text::read_file(config.census));
    });
  }
  if (!config.schema.empty()) {
    inputs.schema = staged("featurize", [&] {
      return features::FeatureSchema::from_json(text::read_file(config.schema));
    });
  }
  if (!config.model_store.empty() && fs::exists(config.model_store)) {
    inputs.pretrained = staged("train", [&] {
      return ShareModelBundle::from_json(text::read_file(config.model_store));
    });
  }
  auto out = compute_pipeline(config, inputs);
  staged("write", [&] {
    write_outputs(config.output_dir, out.files);
    if (!config.model_store.empty() && !inputs.pretrained) {
      text::write_file(config.model_store, out.bundle.to_json());
    }
    return 0;
  });
  return out;
}

}  // namespace popest::pipeline
