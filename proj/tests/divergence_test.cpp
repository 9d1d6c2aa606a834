#include "lenbias/divergence.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "lenbias/error.hpp"
#include "lenbias/rng.hpp"
#include "test_support.hpp"

using namespace lenbias;
using testsupport::make_pair;

TEST_SUITE("divergence") {

TEST_CASE("pairwise divergence on frozen fixtures") {
  CHECK(pairwise_divergence(7, 7).value() == 0.0);
  CHECK(pairwise_divergence(10, 22).value() == doctest::Approx(1.2));
  CHECK(pairwise_divergence(22, 10).value() == doctest::Approx(1.2));
  CHECK(pairwise_divergence(15, 19).value() == doctest::Approx(4.0 / 15.0));
  CHECK(pairwise_divergence(0, 5).is_sentinel());
  CHECK(pairwise_divergence(5, 0).is_sentinel());
  CHECK(pairwise_divergence(0, 0).is_sentinel());
}

TEST_CASE("pairwise divergence is symmetric and scale invariant") {
  std::mt19937_64 rng(101);
  for (int i = 0; i < 500; ++i) {
    long a = static_cast<long>(bounded(rng, 41));
    long b = static_cast<long>(bounded(rng, 41));
    DivergenceScore ab = pairwise_divergence(a, b);
    DivergenceScore ba = pairwise_divergence(b, a);
    CHECK(ab == ba);
    // Integer numerator and denominator keep the scaled quotient exact.
    for (long c : {2L, 3L, 7L}) {
      DivergenceScore scaled = pairwise_divergence(a * c, b * c);
      CHECK(scaled == ab);
    }
  }
}

TEST_CASE("score ordering puts the sentinel above every finite value") {
  DivergenceScore s = DivergenceScore::sentinel();
  DivergenceScore zero = DivergenceScore::finite(0.0);
  DivergenceScore big = DivergenceScore::finite(1e300);

  CHECK(zero < big);
  CHECK(big < s);
  CHECK(zero < s);
  CHECK(s > big);
  CHECK(s >= s);
  CHECK(s == DivergenceScore::sentinel());
  CHECK(!(s < DivergenceScore::sentinel()));
  CHECK(s != big);

  std::vector<DivergenceScore> scores{s, big, zero};
  std::sort(scores.begin(), scores.end());
  CHECK(scores[0] == zero);
  CHECK(scores[2].is_sentinel());
}

TEST_CASE("value() refuses the sentinel") {
  CHECK_THROWS_AS(DivergenceScore::sentinel().value(), std::logic_error);
}

TEST_CASE("to_string and parse round trip") {
  for (double v : {0.0, 1.2, 1.0 / 3.0, 0.1 + 0.2, 1e-17, 12345.6789}) {
    DivergenceScore score = DivergenceScore::finite(v);
    DivergenceScore back = DivergenceScore::parse(score.to_string());
    CHECK(!back.is_sentinel());
    CHECK(back.value() == v);
  }
  CHECK(DivergenceScore::sentinel().to_string() == "SENTINEL");
  CHECK(DivergenceScore::parse("SENTINEL").is_sentinel());
}

TEST_CASE("parse rejects anything but scores") {
  CHECK_THROWS_AS(DivergenceScore::parse("abc"), ParseError);
  CHECK_THROWS_AS(DivergenceScore::parse(""), ParseError);
  CHECK_THROWS_AS(DivergenceScore::parse("-0.5"), ParseError);
  CHECK_THROWS_AS(DivergenceScore::parse("inf"), ParseError);
  CHECK_THROWS_AS(DivergenceScore::parse("nan"), ParseError);
  CHECK_THROWS_AS(DivergenceScore::parse("1.2x"), ParseError);
  CHECK_THROWS_AS(DivergenceScore::parse("sentinel"), ParseError);
}

TEST_CASE("mean group divergence") {
  // Docs at 8 and 2 around a query of 4: both terms are 1.0.
  std::vector<long> docs{8, 2};
  auto m = mean_group_divergence(4, docs);
  REQUIRE(m.has_value());
  CHECK(m->value() == doctest::Approx(1.0));

  std::vector<long> empty;
  CHECK(!mean_group_divergence(4, empty).has_value());

  std::vector<long> with_zero{8, 0};
  auto z = mean_group_divergence(4, with_zero);
  REQUIRE(z.has_value());
  CHECK(z->is_sentinel());

  std::vector<long> any{5};
  auto q0 = mean_group_divergence(0, any);
  REQUIRE(q0.has_value());
  CHECK(q0->is_sentinel());
}

namespace {

QueryGroup group_of(int query_len, const std::vector<int>& rel_lens,
                    const std::vector<int>& nonrel_lens) {
  QueryGroup g;
  g.query_id = "q";
  g.query = make_text(testsupport::words("q", query_len));
  int i = 0;
  for (int len : rel_lens)
    g.docs.push_back(
        {"r" + std::to_string(i++), make_text(testsupport::words("r", len)), 1});
  for (int len : nonrel_lens)
    g.docs.push_back(
        {"n" + std::to_string(i++), make_text(testsupport::words("n", len)), 0});
  return g;
}

}  // namespace

TEST_CASE("listwise divergence on frozen fixtures") {
  // m+ = m- = 1.0 -> |0| / 1 = 0.
  CHECK(listwise_divergence(group_of(4, {8}, {2})).value() == 0.0);
  // m+ = 1.0, m- = 0.5 -> 0.5 / 0.5 = 1.
  CHECK(listwise_divergence(group_of(4, {8}, {6})).value() ==
        doctest::Approx(1.0));
}

TEST_CASE("listwise divergence sentinel cases") {
  // No relevant docs: m+ undefined.
  CHECK(listwise_divergence(group_of(4, {}, {6})).is_sentinel());
  // No non-relevant docs: m- undefined.
  CHECK(listwise_divergence(group_of(4, {8}, {})).is_sentinel());
  // A zero-length doc poisons its mean.
  CHECK(listwise_divergence(group_of(4, {0}, {6})).is_sentinel());
  // Zero-length query poisons both means.
  CHECK(listwise_divergence(group_of(0, {8}, {6})).is_sentinel());
  // min(m+, m-) == 0: non-relevant docs exactly query-sized.
  CHECK(listwise_divergence(group_of(5, {10}, {5})).is_sentinel());
}

TEST_CASE("score_dataset keeps ids and order for pair data") {
  PairDataset ds = testsupport::make_pair_dataset(
      "scored", {{5, 5, 1}, {5, 10, 0}, {5, 0, 1}});
  auto scored = score_dataset(ds);
  REQUIRE(scored.size() == 3);
  CHECK(scored[0].id == "p0");
  CHECK(scored[0].score.value() == 0.0);
  CHECK(scored[1].score.value() == doctest::Approx(1.0));
  CHECK(scored[2].score.is_sentinel());
}

TEST_CASE("score_dataset scores IR groups listwise") {
  IRDataset ds;
  ds.name = "ir";
  ds.groups.push_back(group_of(4, {8}, {2}));
  ds.groups[0].query_id = "q1";
  ds.groups.push_back(group_of(4, {}, {6}));
  ds.groups[1].query_id = "q2";
  auto scored = score_dataset(ds);
  REQUIRE(scored.size() == 2);
  CHECK(scored[0].id == "q1");
  CHECK(scored[0].score.value() == 0.0);
  CHECK(scored[1].id == "q2");
  CHECK(scored[1].score.is_sentinel());
}

}  // TEST_SUITE("divergence")
