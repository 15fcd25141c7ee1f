#include <doctest.h>

#include <functional>
#include <map>
#include <set>

#include "core/data.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/text.hpp"

using namespace popest;
using data::RecordFormat;

namespace {

std::string line(const std::string& id, const std::string& coll, const std::string& phot,
                 int occ, const std::string& ids, const std::string& extra = "") {
  return R"({"image_id":")" + id + R"(","collection_id":")" + coll +
         R"(","photographer_id":")" + phot + R"(","occasion":)" + std::to_string(occ) +
         R"(,"individual_ids":[)" + ids + "]" + extra + "}\n";
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("jsonl parsing") {
  CHECK(data::parse_image_records("", RecordFormat::jsonl).empty());
  const auto recs = data::parse_image_records(
      line("img1", "c1", "p1", 2016, R"("z01","z02")",
           R"(,"timestamp":5,"raw_features":{"beauty":0.25},"shared":true)"),
      RecordFormat::jsonl);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].image_id == "img1");
  CHECK(recs[0].individual_ids.size() == 2);
  CHECK(*recs[0].timestamp == 5);
  CHECK(recs[0].raw_features.at("beauty") == 0.25);
  CHECK(*recs[0].shared);
}

TEST_CASE("individual ids have set semantics") {
  const auto recs = data::parse_image_records(line("a", "c", "p", 1, R"("z2","z1","z2")"),
                                              RecordFormat::jsonl);
  CHECK(recs[0].individual_ids == std::vector<std::string>{"z1", "z2"});
}

TEST_CASE("parse errors carry line numbers and ids") {
  const auto dup = line("img1", "c", "p", 1, "") + line("img1", "c", "p", 1, "");
  const auto msg = error_of([&] { data::parse_image_records(dup, RecordFormat::jsonl); });
  CHECK(msg.find("img1") != std::string::npos);
  CHECK(msg.find("duplicate") != std::string::npos);

  const auto bad = line("a", "c", "p", 1, "") + "{not json}\n";
  const auto bad_msg = error_of([&] { data::parse_image_records(bad, RecordFormat::jsonl); });
  CHECK(bad_msg.find("line 2") != std::string::npos);

  CHECK_THROWS_AS(data::parse_image_records(R"({"image_id":"a"})", RecordFormat::jsonl),
                  DataError);
  CHECK_THROWS_AS(data::parse_image_records(line("a", "c", "p", 1, "", R"(,"colour":1)"),
                                            RecordFormat::jsonl),
                  DataError);
}

TEST_CASE("csv parsing") {
  const std::string csv =
      "image_id,collection_id,photographer_id,occasion,timestamp,individual_ids,beauty\n"
      "i1,c1,p1,2016,10,z1;z2,0.5\n"
      "i2,c1,p1,2016,,,\n";
  const auto recs = data::parse_image_records(csv, RecordFormat::csv);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].individual_ids == std::vector<std::string>{"z1", "z2"});
  CHECK(recs[0].raw_features.at("beauty") == 0.5);
  CHECK(recs[1].individual_ids.empty());
  CHECK_FALSE(recs[1].timestamp);
  CHECK(recs[1].raw_features.empty());
  CHECK_THROWS_AS(data::parse_image_records("image_id,occasion\n", RecordFormat::csv), DataError);
}

TEST_CASE("jsonl round trip") {
  const std::string in =
      line("b", "c", "p", 2, R"("z1")", R"(,"timestamp":3,"raw_features":{"q":1.5})") +
      line("a", "c", "p", 2, "", R"(,"shared":false)");
  const auto recs = data::parse_image_records(in, RecordFormat::jsonl);
  const auto out = data::to_jsonl(recs);
  const auto again = data::parse_image_records(out, RecordFormat::jsonl);
  CHECK(data::to_jsonl(again) == out);
  CHECK(again[1].shared.has_value());
  CHECK_FALSE(*again[1].shared);
}

TEST_CASE("grouping collections") {
  auto recs = data::parse_image_records(line("1", "c1", "p1", 1, R"("A")") +
                                            line("2", "c1", "p1", 1, R"("B")") +
                                            line("3", "c1", "p1", 1, R"("A")"),
                                        RecordFormat::jsonl);
  auto cs = data::group_collections(recs);
  REQUIRE(cs.size() == 1);
  CHECK(cs[0].distinct_individuals == std::vector<std::string>{"A", "B"});

  recs = data::parse_image_records(line("1", "c1", "p1", 1, "") + line("2", "c2", "p1", 1, ""),
                                   RecordFormat::jsonl);
  CHECK(data::group_collections(recs).size() == 2);

  recs = data::parse_image_records(line("1", "c1", "p1", 1, "") + line("2", "c1", "p2", 1, ""),
                                   RecordFormat::jsonl);
  CHECK_THROWS_AS(data::group_collections(recs), DataError);
}

TEST_CASE("images ordered by timestamp then id") {
  const auto recs = data::parse_image_records(
      line("b", "c", "p", 1, "", R"(,"timestamp":5)") + line("a", "c", "p", 1, "", R"(,"timestamp":5)") +
          line("c", "c", "p", 1, "", R"(,"timestamp":1)"),
      RecordFormat::jsonl);
  const auto c = data::group_collections(recs).front();
  CHECK(c.images[0].image_id == "c");
  CHECK(c.images[1].image_id == "a");
  CHECK(c.images[2].image_id == "b");
}

TEST_CASE("grouping is a partition") {
  Rng rng(9);
  std::string in;
  for (int i = 0; i < 200; ++i) {
    const auto c = rng.below(12);
    in += line("i" + std::to_string(i), "c" + std::to_string(c), "p" + std::to_string(c), 1, "");
  }
  const auto recs = data::parse_image_records(in, RecordFormat::jsonl);
  std::multiset<std::string> seen;
  for (const auto& c : data::group_collections(recs)) {
    for (const auto& img : c.images) {
      seen.insert(img.image_id);
      CHECK(img.collection_id == c.collection_id);
    }
    CHECK(c.n_shared_individuals <= c.distinct_individuals.size());
  }
  CHECK(seen.size() == recs.size());
  CHECK(std::set<std::string>(seen.begin(), seen.end()).size() == recs.size());
}

TEST_CASE("encounter matrix") {
  const auto recs = data::parse_image_records(
      line("1", "c1", "p1", 2011, R"("z01","z02")") + line("2", "c2", "p2", 2012, R"("z01")") +
          line("3", "c3", "p3", 2011, R"("z02")"),
      RecordFormat::jsonl);
  const auto m = data::build_encounter_matrix(data::group_collections(recs), {2011, 2012, 2013});
  REQUIRE(m.n_individuals() == 2);
  CHECK(m.individuals()[0] == "z01");
  CHECK(m.at(0, 0));
  CHECK(m.at(0, 1));
  CHECK_FALSE(m.at(0, 2));
  CHECK(m.at(1, 0));  // two sightings, one cell
  CHECK_FALSE(m.at(1, 1));

  CHECK(data::build_encounter_matrix({}, {2011}).n_individuals() == 0);
  CHECK_THROWS_AS(data::build_encounter_matrix(data::group_collections(recs), {2011}),
                  DataError);
}

TEST_CASE("encounter matrix row sums and duplicate sightings") {
  Rng rng(13);
  std::string in;
  std::map<std::string, std::set<int>> truth;
  for (int i = 0; i < 150; ++i) {
    const int occ = 2000 + static_cast<int>(rng.below(5));
    const auto z = "z" + std::to_string(rng.below(20));
    const auto c = "c" + std::to_string(occ) + "_" + std::to_string(rng.below(3));
    in += line("i" + std::to_string(i), c, "p" + c, occ, "\"" + z + "\"");
    truth[z].insert(occ);
  }
  const std::vector<int> occ{2000, 2001, 2002, 2003, 2004};
  auto recs = data::parse_image_records(in, RecordFormat::jsonl);
  const auto m = data::build_encounter_matrix(data::group_collections(recs), occ);
  for (std::size_t a = 0; a < m.n_individuals(); ++a) {
    std::size_t sum = 0;
    for (std::size_t t = 0; t < occ.size(); ++t) sum += m.at(a, t);
    CHECK(sum == truth.at(m.individuals()[a]).size());
  }
  // Duplicating every sighting under new image ids changes nothing.
  auto doubled = recs;
  for (auto r : recs) {
    r.image_id += "_dup";
    doubled.push_back(r);
  }
  const auto m2 = data::build_encounter_matrix(data::group_collections(doubled), occ);
  CHECK(m2.cells() == m.cells());
  CHECK(m2.individuals() == m.individuals());
}

TEST_CASE("survey labels") {
  auto recs = data::parse_image_records(line("img1", "c", "p", 1, "") + line("img2", "c", "p", 1, ""),
                                        RecordFormat::jsonl);
  const auto labels = data::parse_survey_labels("image_id,shared\nimg1,1\n");
  const auto joined = data::join_survey_labels(recs, labels);
  CHECK(*joined[0].shared);
  CHECK_FALSE(joined[1].shared.has_value());
  CHECK(data::to_jsonl(data::join_survey_labels(recs, {})) == data::to_jsonl(recs));
  const auto msg = error_of([&] {
    data::join_survey_labels(recs, data::parse_survey_labels("image_id,shared\nimgX,0\n"));
  });
  CHECK(msg.find("imgX") != std::string::npos);
  CHECK_THROWS_AS(data::parse_survey_labels("image_id,shared\nimg1,2\n"), DataError);
  CHECK(data::survey_labels_to_csv(joined) == "image_id,shared\nimg1,1\n");
}

TEST_CASE("shared view") {
  auto recs = data::parse_image_records(
      line("1", "c", "p", 1, R"("A","B")", R"(,"shared":true)") +
          line("2", "c", "p", 1, R"("C")", R"(,"shared":false)"),
      RecordFormat::jsonl);
  const auto c = data::group_collections(recs).front();
  CHECK(c.labeled());
  CHECK(c.n_shared_individuals == 2);
  const auto v = data::shared_view(c);
  CHECK(v.images.size() == 1);
  CHECK(v.distinct_individuals == std::vector<std::string>{"A", "B"});
  CHECK_FALSE(v.labeled());
}
