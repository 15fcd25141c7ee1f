#include "features.hpp"

#include <algorithm>
#include <json.hpp>

#include "error.hpp"

namespace popest::features {

namespace {

const char* to_string(Source s) { return s == Source::raw ? "raw" : "structural"; }

const char* to_string(Aggregate a) {
  switch (a) {
    case Aggregate::mean: return "mean";
    case Aggregate::max: return "max";
    case Aggregate::none: break;
  }
  return "none";
}

bool shares_individual(const data::ImageRecord& a, const data::ImageRecord& b) {
  // Both lists are sorted.
  auto i = a.individual_ids.begin();
  auto j = b.individual_ids.begin();
  while (i != a.individual_ids.end() && j != b.individual_ids.end()) {
    if (*i == *j) return true;
    if (*i < *j) ++i; else ++j;
  }
  return false;
}

std::optional<double> raw_value(const data::ImageRecord& img, const std::string& name) {
  auto it = img.raw_features.find(name);
  if (it == img.raw_features.end()) return std::nullopt;
  return it->second;
}

FeatureVector image_vector(const data::Collection& c, std::size_t index,
                           const FeatureSchema& schema) {
  const auto& img = c.images[index];
  FeatureVector v;
  v.schema_key = schema.key();
  v.values.reserve(schema.size());
  for (const auto& def : schema.defs()) {
    if (def.source == Source::raw) {
      v.values.push_back(raw_value(img, def.raw_name));
      continue;
    }
    double value = 0.0;
    if (def.name == column::collection_size) {
      value = static_cast<double>(c.images.size());
    } else if (def.name == column::image_rank) {
      value = static_cast<double>(index);
    } else if (def.name == column::animals_in_image) {
      value = static_cast<double>(img.individual_ids.size());
    } else if (def.name == column::animal_duplication) {
      std::size_t n = 0;
      for (std::size_t j = 0; j < c.images.size(); ++j) {
        if (j != index && shares_individual(img, c.images[j])) ++n;
      }
      value = static_cast<double>(n);
    } else if (def.name == column::distinct_individuals) {
      value = static_cast<double>(c.distinct_individuals.size());
    } else if (def.name == column::time_gap_prev) {
      if (index > 0 && img.timestamp && c.images[index - 1].timestamp) {
        value = static_cast<double>(*img.timestamp - *c.images[index - 1].timestamp);
      }
    } else {
      throw UsageError("unknown structural image feature '" + def.name + "'");
    }
    v.values.push_back(value);
  }
  return v;
}

}  // namespace

FeatureSchema::FeatureSchema(Level level, std::vector<FeatureDef> defs)
    : level_(level), defs_(std::move(defs)) {
  std::set<std::string> seen;
  for (const auto& d : defs_) {
    if (d.name.empty()) throw UsageError("feature schema: empty feature name");
    if (!seen.insert(d.name).second) {
      throw UsageError("feature schema: duplicate feature name '" + d.name + "'");
    }
    if (d.source == Source::raw && d.raw_name.empty()) {
      throw UsageError("feature schema: raw feature '" + d.name + "' has no raw_name");
    }
    if (level_ == Level::collection && d.source == Source::raw &&
        d.aggregate == Aggregate::none) {
      throw UsageError("feature schema: collection feature '" + d.name +
                       "' needs an aggregate");
    }
  }
}

FeatureSchema FeatureSchema::for_images(const std::vector<std::string>& raw_names) {
  std::vector<FeatureDef> defs;
  for (const char* name :
       {column::collection_size, column::image_rank, column::animals_in_image,
        column::animal_duplication, column::distinct_individuals,
        column::time_gap_prev}) {
    defs.push_back({name, Source::structural, "", Aggregate::none});
  }
  for (const auto& raw : raw_names) defs.push_back({raw, Source::raw, raw, Aggregate::none});
  return FeatureSchema(Level::image, std::move(defs));
}

FeatureSchema FeatureSchema::for_collections(const std::vector<std::string>& raw_names) {
  std::vector<FeatureDef> defs;
  for (const char* name :
       {column::n_individuals, column::image_count, column::animal_fraction}) {
    defs.push_back({name, Source::structural, "", Aggregate::none});
  }
  for (const auto& raw : raw_names) {
    defs.push_back({"mean_" + raw, Source::raw, raw, Aggregate::mean});
    defs.push_back({"max_" + raw, Source::raw, raw, Aggregate::max});
  }
  return FeatureSchema(Level::collection, std::move(defs));
}

std::vector<std::string> FeatureSchema::names() const {
  std::vector<std::string> out;
  for (const auto& d : defs_) out.push_back(d.name);
  return out;
}

std::string FeatureSchema::key() const {
  std::string k = level_ == Level::image ? "image" : "collection";
  for (const auto& d : defs_) {
    k += '|';
    k += d.name;
    k += ':';
    k += to_string(d.source);
  }
  return k;
}

std::string FeatureSchema::to_json() const {
  nlohmann::ordered_json j;
  j["version"] = "1";
  j["level"] = level_ == Level::image ? "image" : "collection";
  j["features"] = nlohmann::ordered_json::array();
  for (const auto& d : defs_) {
    nlohmann::ordered_json f;
    f["name"] = d.name;
    f["source"] = to_string(d.source);
    if (d.source == Source::raw) f["raw_name"] = d.raw_name;
    if (d.aggregate != Aggregate::none) f["aggregate"] = to_string(d.aggregate);
    j["features"].push_back(f);
  }
  return j.dump(2) + "\n";
}

FeatureSchema FeatureSchema::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("feature schema: ") + e.what());
  }
  try {
    if (j.at("version").get<std::string>() != "1") {
      throw DataError("feature schema: unsupported version");
    }
    const auto level_s = j.at("level").get<std::string>();
    Level level;
    if (level_s == "image") level = Level::image;
    else if (level_s == "collection") level = Level::collection;
    else throw DataError("feature schema: unknown level '" + level_s + "'");
    std::vector<FeatureDef> defs;
    for (const auto& f : j.at("features")) {
      FeatureDef d;
      d.name = f.at("name").get<std::string>();
      const auto src = f.at("source").get<std::string>();
      if (src == "raw") d.source = Source::raw;
      else if (src == "structural") d.source = Source::structural;
      else throw DataError("feature schema: unknown source '" + src + "'");
      d.raw_name = f.value("raw_name", std::string{});
      const auto agg = f.value("aggregate", std::string{"none"});
      if (agg == "mean") d.aggregate = Aggregate::mean;
      else if (agg == "max") d.aggregate = Aggregate::max;
      else if (agg == "none") d.aggregate = Aggregate::none;
      else throw DataError("feature schema: unknown aggregate '" + agg + "'");
      defs.push_back(std::move(d));
    }
    return FeatureSchema(level, std::move(defs));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("feature schema: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(e.what());
  }
}

std::vector<std::string> raw_feature_names(const std::vector<data::ImageRecord>& records) {
  std::set<std::string> names;
  for (const auto& r : records) {
    for (const auto& [name, value] : r.raw_features) names.insert(name);
  }
  return {names.begin(), names.end()};
}

FeatureVector featurize_image(const std::string& image_id,
                              const data::Collection& collection,
                              const FeatureSchema& schema) {
  if (schema.level() != Level::image) {
    throw UsageError("featurize_image needs an image-level schema");
  }
  for (std::size_t i = 0; i < collection.images.size(); ++i) {
    if (collection.images[i].image_id == image_id) {
      return image_vector(collection, i, schema);
    }
  }
  throw DataError("image '" + image_id + "' is not in collection '" +
                  collection.collection_id + "'");
}

std::vector<FeatureVector> featurize_images(const data::Collection& collection,
                                            const FeatureSchema& schema) {
  if (schema.level() != Level::image) {
    throw UsageError("featurize_images needs an image-level schema");
  }
  std::vector<FeatureVector> out;
  out.reserve(collection.images.size());
  for (std::size_t i = 0; i < collection.images.size(); ++i) {
    out.push_back(image_vector(collection, i, schema));
  }
  return out;
}

FeatureVector featurize_collection(const data::Collection& collection,
                                   const FeatureSchema& schema) {
  if (schema.level() != Level::collection) {
    throw UsageError("featurize_collection needs a collection-level schema");
  }
  if (collection.images.empty()) {
    throw DataError("collection '" + collection.collection_id + "' is empty");
  }
  const double n_images = static_cast<double>(collection.images.size());
  FeatureVector v;
  v.schema_key = schema.key();
  for (const auto& def : schema.defs()) {
    if (def.source == Source::raw) {
      double sum = 0.0;
      double best = 0.0;
      std::size_t count = 0;
      for (const auto& img : collection.images) {
        auto value = raw_value(img, def.raw_name);
        if (!value) continue;
        best = count == 0 ? *value : std::max(best, *value);
        sum += *value;
        ++count;
      }
      if (count == 0) {
        v.values.push_back(std::nullopt);
      } else if (def.aggregate == Aggregate::mean) {
        v.values.push_back(sum / static_cast<double>(count));
      } else {
        v.values.push_back(best);
      }
    } else if (def.name == column::n_individuals) {
      v.values.push_back(static_cast<double>(collection.distinct_individuals.size()));
    } else if (def.name == column::image_count) {
      v.values.push_back(n_images);
    } else if (def.name == column::animal_fraction) {
      const auto with = std::count_if(
          collection.images.begin(), collection.images.end(),
          [](const data::ImageRecord& r) { return !r.individual_ids.empty(); });
      v.values.push_back(static_cast<double>(with) / n_images);
    } else {
      throw UsageError("unknown structural collection feature '" + def.name + "'");
    }
  }
  return v;
}

Matrix Imputer::apply(const std::vector<FeatureVector>& vectors,
                      const FeatureSchema& schema) const {
  if (means.size() != schema.size()) {
    throw DataError("imputer width does not match the feature schema");
  }
  const auto key = schema.key();
  Matrix x(vectors.size(), schema.size());
  for (std::size_t r = 0; r < vectors.size(); ++r) {
    if (vectors[r].schema_key != key || vectors[r].values.size() != schema.size()) {
      throw DataError("feature vector " + std::to_string(r) +
                      " was built under a different schema");
    }
    for (std::size_t c = 0; c < schema.size(); ++c) {
      x(r, c) = vectors[r].values[c].value_or(means[c]);
    }
  }
  return x;
}

AssembledDataset assemble_dataset(const std::vector<FeatureVector>& vectors,
                                  const std::vector<double>& labels,
                                  const FeatureSchema& schema) {
  if (vectors.size() != labels.size()) {
    throw DataError("assemble_dataset: " + std::to_string(vectors.size()) +
                    " vectors but " + std::to_string(labels.size()) + " labels");
  }
  const auto key = schema.key();
  for (std::size_t r = 0; r < vectors.size(); ++r) {
    if (vectors[r].schema_key != key || vectors[r].values.size() != schema.size()) {
      throw DataError("assemble_dataset: schema mismatch at row " + std::to_string(r));
    }
  }
  Imputer imputer;
  imputer.means.assign(schema.size(), 0.0);
  for (std::size_t c = 0; c < schema.size(); ++c) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& v : vectors) {
      if (v.values[c]) {
        sum += *v.values[c];
        ++count;
      }
    }
    if (count == 0) {
      throw DataError("assemble_dataset: feature '" + schema.defs()[c].name +
                      "' is missing in every row");
    }
    imputer.means[c] = sum / static_cast<double>(count);
  }
  AssembledDataset out;
  out.dataset.x = imputer.apply(vectors, schema);
  out.dataset.y = labels;
  out.dataset.columns = schema.names();
  out.imputer = std::move(imputer);
  return out;
}

}  // namespace popest::features
