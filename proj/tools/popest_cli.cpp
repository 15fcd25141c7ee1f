// popest command line front end. Everything goes through the C API.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "popest/popest.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

struct CliFailure {
  int code;
  std::string message;
};

int exit_code(popest_status s) {
  switch (s) {
    case POPEST_OK:
      return 0;
    case POPEST_ERR_USAGE:
      return kExitUsage;
    case POPEST_ERR_DATA:
    case POPEST_ERR_IO:
      return kExitData;
    default:
      return kExitInternal;
  }
}

void check(popest_status s) {
  if (s != POPEST_OK) throw CliFailure{exit_code(s), popest_last_error()};
}

// Owns a library-allocated string.
class LibString {
 public:
  ~LibString() { popest_string_free(p_); }
  char** out() { return &p_; }
  std::string str() const { return p_ ? std::string(p_) : std::string(); }

 private:
  char* p_ = nullptr;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliFailure{kExitData, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << content)) throw CliFailure{kExitData, "cannot write " + path};
}

const char* c_or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

std::string absolute(const std::string& p) {
  return p.empty() ? p : fs::absolute(p).lexically_normal().string();
}

/// --learner/--param/--task/--seed or --spec file -> spec JSON text.
struct LearnerArgs {
  std::string kind;
  std::string spec_file;
  std::string task;
  std::vector<std::string> params;

  void add_to(CLI::App* cmd, const std::string& default_kind) {
    kind = default_kind;
    cmd->add_option("--learner", kind, "learner kind")->capture_default_str();
    cmd->add_option("--spec", spec_file, "learner spec JSON file (overrides --learner)");
    cmd->add_option("--task", task, "regression|classification for dual-task learners");
    cmd->add_option("--param", params, "hyperparameter override name=value (repeatable)");
  }

  std::string json_text() const {
    if (!spec_file.empty()) return read_text(spec_file);
    json j;
    j["kind"] = kind;
    if (!task.empty()) j["task"] = task;
    json hp = json::object();
    for (const auto& p : params) {
      const auto eq = p.find('=');
      if (eq == std::string::npos) throw CliFailure{kExitUsage, "--param expects name=value"};
      try {
        hp[p.substr(0, eq)] = std::stod(p.substr(eq + 1));
      } catch (const std::exception&) {
        throw CliFailure{kExitUsage, "--param value is not a number: " + p};
      }
    }
    j["hyperparameters"] = hp;
    return j.dump();
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wildlife population estimation from shared photo collections"};
  app.name("popest");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(popest_version()));

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a synthetic world");
  std::string sim_config, sim_out;
  std::uint64_t sim_seed = 0;
  sim->add_option("--config", sim_config, "simulation config JSON")->required();
  sim->add_option("--out", sim_out, "output directory")->required();
  auto* sim_seed_opt = sim->add_option("--seed", sim_seed, "override the config seed");

  // ingest
  auto* ing = app.add_subcommand("ingest", "validate records and write canonical JSONL");
  std::string ing_records, ing_labels, ing_out;
  ing->add_option("--records", ing_records, "records (.jsonl or .csv)")->required();
  ing->add_option("--labels", ing_labels, "survey labels CSV");
  ing->add_option("--out", ing_out, "output JSONL (default stdout)");

  // featurize
  auto* feat = app.add_subcommand("featurize", "build a labeled feature table");
  std::string feat_records, feat_labels, feat_problem = "estimate", feat_out, feat_schema;
  feat->add_option("--records", feat_records)->required();
  feat->add_option("--labels", feat_labels);
  feat->add_option("--problem", feat_problem, "estimate|shareability")->capture_default_str();
  feat->add_option("--out", feat_out, "feature table CSV")->required();
  feat->add_option("--schema-out", feat_schema, "schema JSON")->required();

  // train
  auto* train = app.add_subcommand("train", "fit a model on a feature table");
  std::string train_table, train_schema, train_out;
  std::uint64_t train_seed = 0;
  LearnerArgs train_learner;
  train->add_option("--features", train_table, "feature table CSV")->required();
  train->add_option("--schema", train_schema, "schema JSON")->required();
  train->add_option("--out", train_out, "model JSON")->required();
  train->add_option("--seed", train_seed)->capture_default_str();
  train_learner.add_to(train, "gbt_regressor");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "cross-validation or cross-dataset evaluation");
  std::string ev_protocol = "cv", ev_problem = "estimate", ev_records, ev_labels, ev_train,
              ev_train_labels, ev_test, ev_test_labels, ev_out;
  std::size_t ev_folds = 10, ev_repeats = 10;
  bool ev_stratified = false, ev_table = false;
  std::uint64_t ev_seed = 0;
  LearnerArgs ev_learner;
  ev->add_option("--protocol", ev_protocol, "cv|cross")->capture_default_str();
  ev->add_option("--problem", ev_problem, "estimate|shareability")->capture_default_str();
  ev->add_option("--records", ev_records, "records for cv");
  ev->add_option("--labels", ev_labels, "survey labels for cv");
  ev->add_option("--train", ev_train, "training records for cross");
  ev->add_option("--train-labels", ev_train_labels);
  ev->add_option("--test", ev_test, "test records for cross");
  ev->add_option("--test-labels", ev_test_labels);
  ev->add_option("--folds", ev_folds)->capture_default_str();
  ev->add_option("--repeats", ev_repeats)->capture_default_str();
  ev->add_flag("--stratified", ev_stratified);
  ev->add_option("--seed", ev_seed)->capture_default_str();
  ev->add_option("--out", ev_out, "report JSON (default stdout)");
  ev->add_flag("--table", ev_table, "print a metric table instead of JSON");
  ev_learner.add_to(ev, "gbt_regressor");

  // estimate
  auto* est = app.add_subcommand("estimate", "full pipeline: train, correct, estimate, report");
  std::string est_config, est_records, est_labels, est_census, est_out, est_model_store;
  std::uint64_t est_seed = 0;
  bool est_no_official = false;
  est->add_option("--config", est_config, "run config JSON");
  est->add_option("--records", est_records);
  est->add_option("--labels", est_labels);
  est->add_option("--census", est_census, "reference census CSV");
  est->add_option("--out", est_out, "output directory");
  est->add_option("--model-store", est_model_store, "trained model bundle to reuse or create");
  auto* est_seed_opt = est->add_option("--seed", est_seed);
  est->add_flag("--no-official", est_no_official, "run without a reference census");

  // report
  auto* rep = app.add_subcommand("report", "render a summary CSV as a table");
  std::string rep_summary;
  rep->add_option("--summary", rep_summary, "summary.csv")->required();

  if (argc > 1 && argv[1][0] != '-') {
    bool known = false;
    for (const auto* sub : app.get_subcommands({})) known = known || sub->get_name() == argv[1];
    if (!known) {
      std::cerr << "popest: unknown subcommand '" << argv[1] << "'\n\n" << app.help();
      return kExitUsage;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "popest: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*sim) {
      LibString warnings;
      check(popest_simulate(read_text(sim_config).c_str(), sim_seed_opt->count() > 0, sim_seed,
                            sim_out.c_str(), warnings.out()));
      std::cerr << warnings.str();
    } else if (*ing) {
      if (ing_out.empty()) {
        // The library writes files; route through a temporary for stdout.
        const auto tmp = fs::temp_directory_path() / ("popest_ingest_" + std::to_string(::getpid()) + ".jsonl");
        check(popest_ingest(ing_records.c_str(), c_or_null(ing_labels), tmp.c_str()));
        std::cout << read_text(tmp.string());
        fs::remove(tmp);
      } else {
        check(popest_ingest(ing_records.c_str(), c_or_null(ing_labels), ing_out.c_str()));
      }
    } else if (*feat) {
      check(popest_featurize(feat_records.c_str(), c_or_null(feat_labels), feat_problem.c_str(),
                             feat_out.c_str(), feat_schema.c_str()));
    } else if (*train) {
      auto spec = json::parse(train_learner.json_text());
      spec["seed"] = train_seed;
      check(popest_train(train_table.c_str(), train_schema.c_str(), spec.dump().c_str(),
                         train_out.c_str()));
    } else if (*ev) {
      const std::string spec = ev_learner.json_text();
      LibString report;
      if (ev_protocol == "cv") {
        if (ev_records.empty()) throw CliFailure{kExitUsage, "evaluate --protocol cv needs --records"};
        check(popest_evaluate_cv(ev_records.c_str(), c_or_null(ev_labels), ev_problem.c_str(),
                                 spec.c_str(), ev_folds, ev_repeats, ev_stratified ? 1 : 0,
                                 ev_seed, report.out()));
      } else if (ev_protocol == "cross") {
        if (ev_train.empty() || ev_test.empty()) {
          throw CliFailure{kExitUsage, "evaluate --protocol cross needs --train and --test"};
        }
        check(popest_evaluate_cross(ev_train.c_str(), c_or_null(ev_train_labels), ev_test.c_str(),
                                    c_or_null(ev_test_labels), ev_problem.c_str(), spec.c_str(),
                                    ev_seed, report.out()));
      } else {
        throw CliFailure{kExitUsage, "--protocol must be cv or cross"};
      }
      if (ev_table) {
        const auto j = json::parse(report.str());
        std::ostringstream ss;
        for (const auto& [name, r] : j.at("metrics").items()) {
          ss << name << "  " << r.at("mean").get<double>() << " +/- " << r.at("std").get<double>()
             << "\n";
        }
        write_text(ev_out, ss.str());
      } else {
        write_text(ev_out, report.str());
      }
    } else if (*est) {
      json config = json::object();
      std::string base_dir;
      if (!est_config.empty()) {
        try {
          config = json::parse(read_text(est_config));
        } catch (const json::exception& e) {
          throw CliFailure{kExitUsage, est_config + ": " + e.what()};
        }
        base_dir = fs::absolute(est_config).parent_path().string();
      }
      if (!est_records.empty()) config["records"] = absolute(est_records);
      if (!est_labels.empty()) config["survey_labels"] = absolute(est_labels);
      if (!est_census.empty()) config["census"] = absolute(est_census);
      if (!est_out.empty()) config["output_dir"] = absolute(est_out);
      if (!est_model_store.empty()) config["model_store"] = absolute(est_model_store);
      if (est_seed_opt->count() > 0) config["seed"] = est_seed;
      if (est_no_official) config["no_official"] = true;
      LibString summary;
      check(popest_estimate(config.dump().c_str(), c_or_null(base_dir), summary.out()));
      LibString table;
      check(popest_render_summary(summary.str().c_str(), table.out()));
      std::cout << table.str();
    } else if (*rep) {
      LibString table;
      check(popest_render_summary(read_text(rep_summary).c_str(), table.out()));
      std::cout << table.str();
    }
  } catch (const CliFailure& f) {
    std::cerr << "popest: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "popest: " << e.what() << "\n";
    return kExitInternal;
  }
  return 0;
}
