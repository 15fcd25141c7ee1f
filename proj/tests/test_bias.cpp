#include <doctest.h>

#include <algorithm>

#include "core/bias.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"

using namespace popest;

namespace {

data::ImageRecord image(const std::string& id, std::vector<std::string> ids,
                        std::optional<bool> shared) {
  data::ImageRecord r;
  r.image_id = id;
  r.collection_id = "c";
  r.photographer_id = "p";
  r.occasion = 2016;
  r.individual_ids = std::move(ids);
  r.shared = shared;
  return r;
}

data::Collection one_collection(std::vector<data::ImageRecord> records) {
  auto c = data::group_collections(std::move(records));
  REQUIRE(c.size() == 1);
  return c.front();
}

}  // namespace

TEST_CASE("share clamp") {
  CHECK(bias::clamp_share(0.5) == 0.5);
  CHECK(bias::clamp_share(1.3) == 1.0);
  CHECK(bias::clamp_share(0.0) == 0.05);
  CHECK(bias::clamp_share(-2.0) == 0.05);
  CHECK(bias::clamp_share(0.0, 0.2) == 0.2);
}

TEST_CASE("coefficient and corrected count") {
  CHECK(bias::coefficient(0.5) == 2.0);
  CHECK(bias::corrected_count(2.0, 3) == 6.0);
  CHECK(bias::coefficient(1.0) == 1.0);
  CHECK(bias::corrected_count(1.0, 9) == 9.0);
  CHECK(bias::corrected_count(bias::coefficient(0.25), 8) == 32.0);
  CHECK(bias::coefficient(0.05) == doctest::Approx(20.0));
  CHECK_THROWS(bias::coefficient(0.0));
}

TEST_CASE("k is antitone in s and N-hat monotone in k") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const double a = bias::clamp_share(rng.uniform());
    const double b = bias::clamp_share(rng.uniform());
    const auto n = static_cast<std::size_t>(rng.below(50));
    if (a <= b) {
      CHECK(bias::coefficient(a) >= bias::coefficient(b));
      CHECK(bias::corrected_count(bias::coefficient(a), n) >=
            bias::corrected_count(bias::coefficient(b), n));
    }
    CHECK(bias::coefficient(a) >= 1.0);
  }
}

TEST_CASE("pooled coefficient") {
  auto est = [](int occ, double k) {
    bias::ShareEstimate e;
    e.occasion = occ;
    e.coefficient = k;
    return e;
  };
  auto p = bias::pool_coefficient({est(2011, 1.5), est(2012, 2.5)}, 2011, 2012);
  CHECK(p.k_rec == 2.0);
  CHECK(p.contributing == 2);
  CHECK(bias::pool_coefficient({est(2011, 3.0)}, 2011, 2012).k_rec == 3.0);
  p = bias::pool_coefficient({est(2011, 1.0), est(2012, 2.0), est(2013, 3.0)}, 2011, 2012);
  CHECK(p.k_rec == 1.5);
  CHECK_THROWS_AS(bias::pool_coefficient({est(2015, 1.0)}, 2011, 2012), DataError);

  std::vector<bias::ShareEstimate> many;
  Rng rng(8);
  for (int i = 0; i < 30; ++i) many.push_back(est(2011 + static_cast<int>(rng.below(3)), 1 + 4 * rng.uniform()));
  const double k = bias::pool_coefficient(many, 2011, 2012).k_rec;
  for (int i = 0; i < 5; ++i) {
    rng.shuffle(std::span(many));
    CHECK(bias::pool_coefficient(many, 2011, 2012).k_rec == doctest::Approx(k).epsilon(1e-14));
  }
}

TEST_CASE("share labels from an SD set") {
  const auto sd = one_collection({image("i1", {"A", "B"}, true), image("i2", {"C"}, false),
                                  image("i3", {"D"}, false)});
  CHECK(*bias::compute_share_label(sd) == 0.5);

  const auto all = one_collection({image("i1", {"A"}, true), image("i2", {"B"}, true)});
  CHECK(*bias::compute_share_label(all) == 1.0);

  const auto third = one_collection({image("i1", {"A"}, true), image("i2", {"B", "C"}, false)});
  CHECK(*bias::compute_share_label(third) == doctest::Approx(1.0 / 3.0));
  // Round trip: k recovers |source| / |shared|.
  CHECK(bias::coefficient(*bias::compute_share_label(third)) == doctest::Approx(3.0));

  const auto empty = one_collection({image("i1", {}, true), image("i2", {}, false)});
  CHECK_FALSE(bias::compute_share_label(empty));
}

TEST_CASE("share label needs a subset") {
  const auto sd = one_collection({image("i1", {"A"}, true)});
  auto other = sd;
  other.images[0].image_id = "zz";
  CHECK_THROWS_AS(bias::compute_share_label(sd, other), DataError);
}

TEST_CASE("share label bounds") {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<data::ImageRecord> recs;
    const auto n = 1 + rng.below(8);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::string> ids;
      for (const char* a : {"A", "B", "C", "D"}) {
        if (rng.bernoulli(0.4)) ids.push_back(a);
      }
      recs.push_back(image("i" + std::to_string(i), ids, rng.bernoulli(0.5)));
    }
    const auto c = one_collection(recs);
    const auto s = bias::compute_share_label(c);
    if (c.distinct_individuals.empty()) {
      CHECK_FALSE(s);
      continue;
    }
    REQUIRE(s);
    CHECK(*s >= 0.0);
    CHECK(*s <= 1.0);
    const bool every_shared = data::shared_view(c).distinct_individuals == c.distinct_individuals;
    CHECK((*s == 1.0) == every_shared);
  }
}

TEST_CASE("share estimate csv") {
  bias::ShareEstimate e{"c1", 2016, 3, 0.5, 2.0, 6.0};
  CHECK(bias::share_estimates_csv({e}) ==
        "collection_id,occasion,n_i,s_hat,k_i,n_hat\nc1,2016,3,0.5,2,6\n");
}
