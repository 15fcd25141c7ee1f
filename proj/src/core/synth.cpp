#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <set>

#include "bias.hpp"
#include "error.hpp"
#include "rng.hpp"
#include "text.hpp"

namespace popest::synth {

using nlohmann::json;
using nlohmann::ordered_json;

void SimConfig::validate() const {
  if (occasions.empty()) throw UsageError("sim config: occasions must not be empty");
  for (std::size_t i = 1; i < occasions.size(); ++i) {
    if (occasions[i] <= occasions[i - 1]) {
      throw UsageError("sim config: occasions must be strictly increasing");
    }
  }
  if (!true_population.empty()) {
    if (true_population.size() != occasions.size()) {
      throw UsageError("sim config: true_population needs one size per occasion");
    }
    for (auto n : true_population) {
      if (n < 0) throw UsageError("sim config: population sizes must be >= 0");
    }
  } else if (initial_population < 0) {
    throw UsageError("sim config: initial population must be >= 0");
  }
  if (!(survival >= 0.0 && survival <= 1.0)) {
    throw UsageError("sim config: survival must lie in [0, 1]");
  }
  if (!(recruitment >= 0.0)) throw UsageError("sim config: recruitment must be >= 0");
  if (photographers_per_occasion < 0) {
    throw UsageError("sim config: photographers_per_occasion must be >= 0");
  }
  if (!(encounter_rate >= 0.0)) throw UsageError("sim config: encounter_rate must be >= 0");
  if (!(images_per_animal >= 1.0)) {
    throw UsageError("sim config: images_per_animal must be >= 1");
  }
  if (!(companion_rate >= 0.0 && companion_rate <= 1.0)) {
    throw UsageError("sim config: companion_rate must lie in [0, 1]");
  }
  for (const auto& f : features) {
    if (f.name.empty()) throw UsageError("sim config: feature without a name");
    if (f.photographer_sd < 0 || f.animal_sd < 0 || f.noise < 0) {
      throw UsageError("sim config: feature '" + f.name + "' has a negative sd");
    }
  }
  for (const auto& [name, _] : share_model.coefficients) {
    bool known = false;
    for (const auto& f : features) known = known || f.name == name;
    if (!known) {
      throw UsageError("sim config: share_model refers to unknown feature '" + name + "'");
    }
  }
}

std::string SimConfig::to_json() const {
  ordered_json j;
  j["seed"] = seed;
  j["occasions"] = occasions;
  if (!true_population.empty()) {
    j["true_population"] = true_population;
  } else {
    j["population"] = {{"initial", initial_population},
                       {"survival", survival},
                       {"recruitment", recruitment}};
  }
  j["photographers_per_occasion"] = photographers_per_occasion;
  j["encounter_rate"] = encounter_rate;
  j["images_per_animal"] = images_per_animal;
  j["companion_rate"] = companion_rate;
  j["features"] = ordered_json::array();
  for (const auto& f : features) {
    j["features"].push_back({{"name", f.name},
                             {"mean", f.mean},
                             {"photographer_sd", f.photographer_sd},
                             {"animal_sd", f.animal_sd},
                             {"noise", f.noise}});
  }
  ordered_json coef = ordered_json::object();
  for (const auto& [k, v] : share_model.coefficients) coef[k] = v;
  j["share_model"] = {{"intercept", share_model.intercept}, {"coefficients", coef}};
  return j.dump(2) + "\n";
}

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw UsageError(where + ": unknown key '" + key + "'");
  }
}

}  // namespace

SimConfig SimConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("sim config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("sim config: expected a JSON object");
  check_keys(j,
             {"seed", "occasions", "true_population", "population",
              "photographers_per_occasion", "encounter_rate", "images_per_animal",
              "companion_rate", "features", "feature_noise", "share_model"},
             "sim config");
  SimConfig c;
  try {
    c.seed = get_or<std::uint64_t>(j, "seed", 1);
    c.occasions = j.at("occasions").get<std::vector<int>>();
    if (j.contains("true_population")) {
      if (j.contains("population")) {
        throw UsageError("sim config: give either true_population or population");
      }
      c.true_population = j.at("true_population").get<std::vector<std::int64_t>>();
    } else if (j.contains("population")) {
      const auto& p = j.at("population");
      check_keys(p, {"initial", "survival", "recruitment"}, "sim config population");
      c.initial_population = p.at("initial").get<std::int64_t>();
      c.survival = get_or<double>(p, "survival", 1.0);
      c.recruitment = get_or<double>(p, "recruitment", 0.0);
    } else {
      throw UsageError("sim config: missing true_population or population");
    }
    c.photographers_per_occasion =
        get_or<std::int64_t>(j, "photographers_per_occasion", c.photographers_per_occasion);
    c.encounter_rate = get_or<double>(j, "encounter_rate", c.encounter_rate);
    c.images_per_animal = get_or<double>(j, "images_per_animal", c.images_per_animal);
    c.companion_rate = get_or<double>(j, "companion_rate", c.companion_rate);
    std::map<std::string, double> noise;
    if (j.contains("feature_noise")) noise = j.at("feature_noise").get<std::map<std::string, double>>();
    if (j.contains("features")) {
      for (const auto& f : j.at("features")) {
        check_keys(f, {"name", "mean", "photographer_sd", "animal_sd", "noise"},
                   "sim config feature");
        FeatureSpec s;
        s.name = f.at("name").get<std::string>();
        s.mean = get_or<double>(f, "mean", 0.0);
        s.photographer_sd = get_or<double>(f, "photographer_sd", 0.0);
        s.animal_sd = get_or<double>(f, "animal_sd", 0.0);
        s.noise = get_or<double>(f, "noise", 1.0);
        if (auto it = noise.find(s.name); it != noise.end()) s.noise = it->second;
        c.features.push_back(s);
      }
    }
    for (const auto& [name, _] : noise) {
      bool known = false;
      for (const auto& f : c.features) known = known || f.name == name;
      if (!known) throw UsageError("sim config: feature_noise for unknown feature '" + name + "'");
    }
    if (j.contains("share_model")) {
      const auto& m = j.at("share_model");
      check_keys(m, {"intercept", "coefficients"}, "sim config share_model");
      c.share_model.intercept = get_or<double>(m, "intercept", 0.0);
      if (m.contains("coefficients")) {
        c.share_model.coefficients = m.at("coefficients").get<std::map<std::string, double>>();
      }
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("sim config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

std::string padded(const char* prefix, std::size_t value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, value);
  return buf;
}

double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct Animal {
  std::size_t index = 0;
  std::vector<double> effects;
};

}  // namespace

SimWorld generate(const SimConfig& config) {
  config.validate();
  SimWorld world;
  world.config = config;
  const std::size_t n_features = config.features.size();

  Rng pop_rng = Rng::derive(config.seed, "population");
  std::size_t next_index = 0;
  auto new_animal = [&]() {
    Animal a;
    a.index = next_index++;
    Rng r = Rng::derive(config.seed, "animal_features", a.index);
    for (const auto& f : config.features) a.effects.push_back(r.normal(0.0, f.animal_sd));
    return a;
  };

  std::vector<Animal> alive;
  for (std::size_t t = 0; t < config.occasions.size(); ++t) {
    if (!config.true_population.empty()) {
      // Survivors are kept where possible so that histories stay open.
      const auto target = static_cast<std::size_t>(config.true_population[t]);
      if (alive.size() > target) {
        auto keep = pop_rng.sample_without_replacement(alive.size(), target);
        std::sort(keep.begin(), keep.end());
        std::vector<Animal> kept;
        for (auto i : keep) kept.push_back(std::move(alive[i]));
        alive = std::move(kept);
      }
      while (alive.size() < target) alive.push_back(new_animal());
    } else if (t == 0) {
      for (std::int64_t i = 0; i < config.initial_population; ++i) alive.push_back(new_animal());
    } else {
      std::vector<Animal> survivors;
      for (auto& a : alive) {
        if (pop_rng.bernoulli(config.survival)) survivors.push_back(std::move(a));
      }
      const auto recruits = pop_rng.poisson(config.recruitment * static_cast<double>(alive.size()));
      alive = std::move(survivors);
      for (std::int64_t i = 0; i < recruits; ++i) alive.push_back(new_animal());
    }
    world.population.push_back(static_cast<std::int64_t>(alive.size()));

    const int occasion = config.occasions[t];
    std::size_t capped = 0;
    for (std::int64_t p = 0; p < config.photographers_per_occasion; ++p) {
      const auto pu = static_cast<std::uint64_t>(p);
      Rng enc = Rng::derive(config.seed, "encounters", t, pu);
      Rng feat = Rng::derive(config.seed, "features", t, pu);
      Rng share = Rng::derive(config.seed, "sharing", t, pu);

      auto want = static_cast<std::size_t>(enc.poisson(config.encounter_rate));
      if (want > alive.size()) {
        want = alive.size();
        ++capped;
      }
      auto picks = enc.sample_without_replacement(alive.size(), want);
      std::sort(picks.begin(), picks.end());

      std::vector<double> photographer_effect;
      for (const auto& f : config.features) {
        photographer_effect.push_back(feat.normal(0.0, f.photographer_sd));
      }
      const std::string suffix = std::to_string(occasion) + "_" + padded("", pu, 3);
      const std::string collection_id = "c" + suffix;
      const std::string photographer_id = "p" + suffix;

      std::size_t image_no = 0;
      std::int64_t clock = static_cast<std::int64_t>(occasion) * 1000000 +
                           static_cast<std::int64_t>(p) * 10000;
      std::set<std::size_t> all_seen, shared_seen;
      for (std::size_t pi = 0; pi < picks.size(); ++pi) {
        const Animal& a = alive[picks[pi]];
        const auto n_images =
            1 + static_cast<std::size_t>(enc.poisson(config.images_per_animal - 1.0));
        for (std::size_t k = 0; k < n_images; ++k) {
          data::ImageRecord rec;
          rec.image_id = collection_id + "_" + padded("i", image_no++, 4);
          rec.collection_id = collection_id;
          rec.photographer_id = photographer_id;
          rec.occasion = occasion;
          clock += 1 + static_cast<std::int64_t>(enc.below(120));
          rec.timestamp = clock;
          std::vector<std::size_t> shown{a.index};
          if (picks.size() > 1 && enc.bernoulli(config.companion_rate)) {
            auto other = static_cast<std::size_t>(enc.below(picks.size() - 1));
            if (other >= pi) ++other;
            shown.push_back(alive[picks[other]].index);
          }
          double z = config.share_model.intercept;
          for (std::size_t f = 0; f < n_features; ++f) {
            const auto& spec = config.features[f];
            const double value = spec.mean + photographer_effect[f] + a.effects[f] +
                                 feat.normal(0.0, spec.noise);
            rec.raw_features[spec.name] = value;
            if (auto it = config.share_model.coefficients.find(spec.name);
                it != config.share_model.coefficients.end()) {
              z += it->second * value;
            }
          }
          const bool shared = share.bernoulli(logistic(z));
          rec.shared = shared;
          for (auto idx : shown) {
            rec.individual_ids.push_back(padded("z", idx, 6));
            all_seen.insert(idx);
            if (shared) shared_seen.insert(idx);
          }
          std::sort(rec.individual_ids.begin(), rec.individual_ids.end());
          rec.individual_ids.erase(
              std::unique(rec.individual_ids.begin(), rec.individual_ids.end()),
              rec.individual_ids.end());
          world.records.push_back(std::move(rec));
        }
      }
      if (!all_seen.empty()) {
        CollectionTruth truth;
        truth.collection_id = collection_id;
        truth.occasion = occasion;
        truth.true_n = all_seen.size();
        truth.shared_n = shared_seen.size();
        truth.share_fraction =
            static_cast<double>(truth.shared_n) / static_cast<double>(truth.true_n);
        world.collections.push_back(truth);
      }
    }
    if (capped > 0) {
      world.warnings.push_back("encounter_capped: occasion " + std::to_string(occasion) +
                               ", " + std::to_string(capped) +
                               " photographer(s) limited to the population size");
    }
  }
  return world;
}

std::map<std::string, double> true_share_fractions(const SimWorld& world) {
  std::map<std::string, double> out;
  for (const auto& c : data::group_collections(world.records)) {
    if (auto s = bias::compute_share_label(c)) out[c.collection_id] = *s;
  }
  return out;
}

std::string SimWorld::truth_json() const {
  ordered_json j;
  j["seed"] = config.seed;
  j["population"] = ordered_json::array();
  for (std::size_t t = 0; t < population.size(); ++t) {
    j["population"].push_back({{"occasion", config.occasions[t]}, {"true_n", population[t]}});
  }
  j["collections"] = ordered_json::array();
  for (const auto& c : collections) {
    j["collections"].push_back({{"collection_id", c.collection_id},
                                {"occasion", c.occasion},
                                {"true_n", c.true_n},
                                {"shared_n", c.shared_n},
                                {"share_fraction", c.share_fraction}});
  }
  j["warnings"] = warnings;
  return j.dump(2) + "\n";
}

std::string SimWorld::census_csv() const {
  std::string out = "year,official,lower_bound\n";
  for (std::size_t t = 0; t < population.size(); ++t) {
    out += std::to_string(config.occasions[t]) + "," + std::to_string(population[t]) + ",0\n";
  }
  return out;
}

std::map<std::string, std::string> export_files(const SimWorld& world) {
  auto unlabeled = world.records;
  for (auto& r : unlabeled) r.shared.reset();
  return {{"records.jsonl", data::to_jsonl(unlabeled)},
          {"survey_labels.csv", data::survey_labels_to_csv(world.records)},
          {"truth.json", world.truth_json()},
          {"census.csv", world.census_csv()},
          {"config.json", world.config.to_json()}};
}

}  // namespace popest::synth
