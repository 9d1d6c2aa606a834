#include "lenbias/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "lenbias/divergence.hpp"
#include "lenbias/error.hpp"
#include "lenbias/rng.hpp"
#include "test_support.hpp"

using namespace lenbias;
using testsupport::TempDir;
using testsupport::fill_confusion;

TEST_SUITE("metrics") {

TEST_CASE("classification metrics on the frozen confusion (3,2,2,1)") {
  std::vector<int> gold, pred;
  fill_confusion(3, 2, 2, 1, gold, pred);
  ConfusionCounts c = count_confusion(gold, pred);
  CHECK(c.tp == 3);
  CHECK(c.fp == 2);
  CHECK(c.tn == 2);
  CHECK(c.fn == 1);
  CHECK(c.total() == 8);

  CHECK(accuracy(c) == doctest::Approx(0.625));
  CHECK(balanced_accuracy(c) == doctest::Approx(0.625));
  CHECK(f1_macro(c) == doctest::Approx(13.0 / 21.0));
  CHECK(f1_micro(c) == doctest::Approx(0.625));
}

TEST_CASE("perfect and constant predictors") {
  std::vector<int> gold, pred;
  fill_confusion(4, 0, 4, 0, gold, pred);
  ConfusionCounts perfect = count_confusion(gold, pred);
  CHECK(accuracy(perfect) == 1.0);
  CHECK(balanced_accuracy(perfect) == 1.0);
  CHECK(f1_macro(perfect) == 1.0);

  fill_confusion(0, 0, 6, 4, gold, pred);  // always predicts negative
  ConfusionCounts constant = count_confusion(gold, pred);
  CHECK(balanced_accuracy(constant) == doctest::Approx(0.5));
  // Positive F1 is 0/0 -> 0 by convention; negative F1 = 12/16.
  CHECK(f1_macro(constant) == doctest::Approx(0.5 * (0.0 + 12.0 / 16.0)));
}

TEST_CASE("balanced accuracy is undefined without both gold classes") {
  std::vector<int> gold, pred;
  fill_confusion(3, 0, 0, 1, gold, pred);  // gold all positive
  CHECK_THROWS_AS(balanced_accuracy(count_confusion(gold, pred)), ConfigError);
}

TEST_CASE("count_confusion rejects mismatched spans") {
  std::vector<int> gold{1, 0};
  std::vector<int> pred{1};
  CHECK_THROWS_AS(count_confusion(gold, pred), ConfigError);
}

TEST_CASE("micro F1 equals accuracy on random binary data") {
  std::mt19937_64 rng(202);
  for (int round = 0; round < 100; ++round) {
    long n = 5 + static_cast<long>(bounded(rng, 200));
    std::vector<int> gold(n), pred(n);
    for (long i = 0; i < n; ++i) {
      gold[i] = static_cast<int>(bounded(rng, 2));
      pred[i] = static_cast<int>(bounded(rng, 2));
    }
    ConfusionCounts c = count_confusion(gold, pred);
    CHECK(f1_micro(c) == accuracy(c));
  }
}

TEST_CASE("average precision on frozen rankings") {
  std::vector<RankedDoc> docs{{"d1", 0.9, 0}, {"d2", 0.8, 1},
                              {"d3", 0.7, 0}, {"d4", 0.6, 1}};
  CHECK(*average_precision(docs) == doctest::Approx(0.5));

  std::vector<RankedDoc> all_rel{{"d1", 0.2, 1}, {"d2", 0.9, 1}};
  CHECK(*average_precision(all_rel) == 1.0);

  std::vector<RankedDoc> none{{"d1", 0.2, 0}};
  CHECK(!average_precision(none).has_value());
}

TEST_CASE("score ties rank by doc id ascending") {
  std::vector<RankedDoc> rel_first{{"a", 0.5, 1}, {"b", 0.5, 0}};
  CHECK(*average_precision(rel_first) == 1.0);
  std::vector<RankedDoc> rel_second{{"a", 0.5, 0}, {"b", 0.5, 1}};
  CHECK(*average_precision(rel_second) == doctest::Approx(0.5));
  CHECK(*reciprocal_rank(rel_second) == doctest::Approx(0.5));
}

TEST_CASE("average precision agrees with a quadratic re-count") {
  std::mt19937_64 rng(303);
  int informative = 0;
  for (int round = 0; round < 200; ++round) {
    long n = 1 + static_cast<long>(bounded(rng, 30));
    std::vector<RankedDoc> docs;
    for (long i = 0; i < n; ++i)
      docs.push_back({"doc" + std::to_string(i),
                      static_cast<double>(bounded(rng, 5)) / 4.0,
                      static_cast<int>(bounded(rng, 3) == 0)});

    // Plain restatement: sort, then for each relevant position count the
    // relevant docs at or above it.
    std::vector<RankedDoc> ranked = docs;
    std::sort(ranked.begin(), ranked.end(),
              [](const RankedDoc& x, const RankedDoc& y) {
                if (x.score != y.score) return x.score > y.score;
                return x.doc_id < y.doc_id;
              });
    double sum = 0;
    long rel_total = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      if (!ranked[i].rel) continue;
      ++rel_total;
      long rel_at_or_above = 0;
      for (std::size_t j = 0; j <= i; ++j) rel_at_or_above += ranked[j].rel;
      sum += static_cast<double>(rel_at_or_above) / static_cast<double>(i + 1);
    }

    auto ap = average_precision(docs);
    if (rel_total == 0) {
      CHECK(!ap.has_value());
    } else {
      ++informative;
      REQUIRE(ap.has_value());
      CHECK(*ap == doctest::Approx(sum / rel_total).epsilon(1e-12));
    }
  }
  CHECK(informative > 100);
}

TEST_CASE("reciprocal rank is one over the first relevant position") {
  std::vector<RankedDoc> third{{"a", 0.9, 0}, {"b", 0.8, 0}, {"c", 0.7, 1}};
  CHECK(*reciprocal_rank(third) == doctest::Approx(1.0 / 3.0));
  std::vector<RankedDoc> none{{"a", 0.9, 0}};
  CHECK(!reciprocal_rank(none).has_value());
}

TEST_CASE("pair run files round trip exact doubles") {
  TempDir dir;
  PairRun run{{"a", 0.1 + 0.2}, {"b", 1.0 / 3.0}, {"c", 1e-17}, {"d", 0.0}};
  write_pair_run(run, dir / "run.tsv");
  PairRun back = load_pair_run(dir / "run.tsv");
  REQUIRE(back.size() == run.size());
  for (std::size_t i = 0; i < run.size(); ++i) {
    CHECK(back[i].id == run[i].id);
    CHECK(back[i].score == run[i].score);
  }
}

TEST_CASE("run loaders reject duplicates and non-finite scores") {
  TempDir dir;
  SUBCASE("duplicate pair id") {
    testsupport::write_file(dir / "run.tsv", "a\t0.5\na\t0.6\n");
    CHECK_THROWS_AS(load_pair_run(dir / "run.tsv"), IntegrityError);
  }
  SUBCASE("non-finite score") {
    testsupport::write_file(dir / "run.tsv", "a\tinf\n");
    CHECK_THROWS_AS(load_pair_run(dir / "run.tsv"), ParseError);
  }
  SUBCASE("wrong field count") {
    testsupport::write_file(dir / "run.tsv", "a\n");
    CHECK_THROWS_AS(load_pair_run(dir / "run.tsv"), ParseError);
  }
  SUBCASE("duplicate (query, doc) in an IR run") {
    testsupport::write_file(dir / "run.tsv", "q1\td1\t0.5\nq1\td1\t0.6\n");
    CHECK_THROWS_AS(load_ir_run(dir / "run.tsv"), IntegrityError);
  }
}

TEST_CASE("IR run files round trip") {
  TempDir dir;
  IRRun run{{"q1", "d1", 0.25}, {"q1", "d2", -1.5}, {"q2", "d1", 0.75}};
  write_ir_run(run, dir / "run.tsv");
  IRRun back = load_ir_run(dir / "run.tsv");
  REQUIRE(back.size() == 3);
  CHECK(back[1].query_id == "q1");
  CHECK(back[1].doc_id == "d2");
  CHECK(back[1].score == -1.5);
}

namespace {

PairRun run_for(const PairDataset& ds, const std::vector<double>& scores) {
  PairRun run;
  for (std::size_t i = 0; i < ds.examples.size(); ++i)
    run.push_back({ds.examples[i].id, scores[i]});
  return run;
}

}  // namespace

TEST_CASE("evaluate_pair_run computes the full metric block") {
  PairDataset ds = testsupport::make_pair_dataset(
      "eval", {{5, 5, 1}, {5, 5, 1}, {5, 5, 1}, {5, 5, 1},
               {5, 5, 0}, {5, 5, 0}, {5, 5, 0}, {5, 5, 0}});
  // tp=3 fp=2 tn=2 fn=1 at threshold 0.5.
  PairRun run = run_for(ds, {0.9, 0.8, 0.7, 0.2, 0.6, 0.55, 0.3, 0.1});
  EvalReport report = evaluate_pair_run(ds, run);

  CHECK(report.dataset_name == "eval");
  CHECK(report.confusion.tp == 3);
  CHECK(report.confusion.fp == 2);
  CHECK(report.confusion.tn == 2);
  CHECK(report.confusion.fn == 1);
  CHECK(report.metric("accuracy") == doctest::Approx(0.625));
  CHECK(report.metric("balanced_accuracy") == doctest::Approx(0.625));
  CHECK(report.metric("f1_macro") == doctest::Approx(13.0 / 21.0));
  CHECK(report.metric("f1_micro") == doctest::Approx(0.625));
  CHECK(report.has_metric("accuracy"));
  CHECK(!report.has_metric("map"));
  CHECK_THROWS_AS(report.metric("map"), ConfigError);
  CHECK(report.recall_per_category.empty());
}

TEST_CASE("a score exactly at the threshold predicts positive") {
  PairDataset ds = testsupport::make_pair_dataset("edge", {{5, 5, 1}, {5, 5, 0}});
  EvalReport report = evaluate_pair_run(ds, run_for(ds, {0.5, 0.49999}), 0.5);
  CHECK(report.confusion.tp == 1);
  CHECK(report.confusion.tn == 1);
}

TEST_CASE("evaluate_pair_run demands exact id coverage") {
  PairDataset ds = testsupport::make_pair_dataset("cov", {{5, 5, 1}, {5, 5, 0}});
  SUBCASE("missing id") {
    PairRun run{{"p0", 0.5}};
    try {
      evaluate_pair_run(ds, run);
      FAIL("expected IntegrityError");
    } catch (const IntegrityError& e) {
      CHECK(std::string(e.what()).find("p1") != std::string::npos);
    }
  }
  SUBCASE("unknown id") {
    PairRun run{{"p0", 0.5}, {"p1", 0.5}, {"ghost", 0.5}};
    CHECK_THROWS_AS(evaluate_pair_run(ds, run), IntegrityError);
  }
}

TEST_CASE("recall by category follows the assignment") {
  // Two divergence bands; positives in the low band are all found,
  // those in the high band are all missed.
  PairDataset ds = testsupport::make_pair_dataset(
      "bands", {{10, 10, 1}, {10, 10, 0}, {10, 20, 1}, {10, 20, 0}});
  CategoryAssignment cats = stratify(score_dataset(ds), 2);
  PairRun run = run_for(ds, {1.0, 0.0, 0.0, 0.0});

  EvalReport report = evaluate_pair_run(ds, run, 0.5, &cats);
  REQUIRE(report.recall_per_category.size() == 2);
  CHECK(*report.recall_per_category[0] == 1.0);
  CHECK(*report.recall_per_category[1] == 0.0);

  auto direct = recall_by_category(ds, run, 0.5, cats);
  CHECK(direct == report.recall_per_category);
}

TEST_CASE("categories without gold positives report no recall") {
  PairDataset ds = testsupport::make_pair_dataset(
      "nopos", {{10, 10, 0}, {10, 10, 0}, {10, 20, 1}, {10, 20, 0}});
  CategoryAssignment cats = stratify(score_dataset(ds), 2);
  auto recall = recall_by_category(ds, run_for(ds, {0, 0, 1, 0}), 0.5, cats);
  REQUIRE(recall.size() == 2);
  CHECK(!recall[0].has_value());
  CHECK(*recall[1] == 1.0);
}

TEST_CASE("recall_by_category requires assignment coverage") {
  PairDataset ds = testsupport::make_pair_dataset("cover", {{10, 10, 1}, {10, 20, 1}});
  PairDataset other = testsupport::make_pair_dataset("wrong", {{9, 9, 1}});
  CategoryAssignment cats = stratify(score_dataset(other), 1);
  CHECK_THROWS_AS(recall_by_category(ds, run_for(ds, {1, 1}), 0.5, cats),
                  IntegrityError);
}

namespace {

IRDataset ir_eval_fixture() {
  IRDataset ds;
  ds.name = "ireval";
  auto text = [](int n) { return make_text(testsupport::words("t", n)); };
  ds.groups.push_back({"q1", text(3),
                       {{"d1", text(4), 1}, {"d2", text(5), 0}, {"d3", text(6), 0}}});
  ds.groups.push_back({"q2", text(3), {{"d4", text(4), 1}, {"d5", text(5), 1}}});
  ds.groups.push_back({"q3", text(3), {{"d6", text(4), 0}}});
  return ds;
}

}  // namespace

TEST_CASE("evaluate_ir_run computes MAP and MRR over informative queries") {
  IRDataset ds = ir_eval_fixture();
  // q1: relevant d1 ranked second -> AP = RR = 1/2.
  // q2: both docs relevant -> AP = RR = 1. q3: no relevant docs, skipped.
  IRRun run{{"q1", "d1", 0.5}, {"q1", "d2", 0.9}, {"q1", "d3", 0.1},
            {"q2", "d4", 0.9}, {"q2", "d5", 0.1}, {"q3", "d6", 0.4}};
  EvalReport report = evaluate_ir_run(ds, run);
  CHECK(report.metric("map") == doctest::Approx(0.75));
  CHECK(report.metric("mrr") == doctest::Approx(0.75));
  CHECK(report.confusion.total() == 0);
}

TEST_CASE("evaluate_ir_run validates coverage and informativeness") {
  IRDataset ds = ir_eval_fixture();
  SUBCASE("missing doc score") {
    IRRun run{{"q1", "d1", 0.5}, {"q1", "d2", 0.9},
              {"q2", "d4", 0.9}, {"q2", "d5", 0.1}, {"q3", "d6", 0.4}};
    CHECK_THROWS_AS(evaluate_ir_run(ds, run), IntegrityError);
  }
  SUBCASE("unknown (query, doc) score") {
    IRRun run{{"q1", "d1", 0.5}, {"q1", "d2", 0.9}, {"q1", "d3", 0.1},
              {"q2", "d4", 0.9}, {"q2", "d5", 0.1}, {"q3", "d6", 0.4},
              {"q9", "d1", 0.2}};
    CHECK_THROWS_AS(evaluate_ir_run(ds, run), IntegrityError);
  }
  SUBCASE("no query has a relevant doc") {
    IRDataset barren;
    barren.name = "barren";
    barren.groups.push_back(
        {"q1", make_text("a b"), {{"d1", make_text("c d"), 0}}});
    IRRun run{{"q1", "d1", 0.5}};
    CHECK_THROWS_AS(evaluate_ir_run(barren, run), ConfigError);
  }
}

TEST_CASE("degradation pairs metrics and flags drops") {
  PairDataset ds = testsupport::make_pair_dataset(
      "deg", {{5, 5, 1}, {5, 5, 1}, {5, 5, 0}, {5, 5, 0}});
  EvalReport strong = evaluate_pair_run(ds, run_for(ds, {1, 1, 0, 0}));
  EvalReport weak = evaluate_pair_run(ds, run_for(ds, {1, 0, 1, 0}));

  DegradationReport d = degradation(strong, weak);
  REQUIRE(d.entries.size() == strong.metrics.size());
  const auto& ba = d.entry("balanced_accuracy");
  CHECK(ba.original == 1.0);
  CHECK(ba.adversarial == doctest::Approx(0.5));
  CHECK(ba.delta == doctest::Approx(-0.5));
  CHECK(ba.drop);
  CHECK_THROWS_AS(d.entry("not-a-metric"), ConfigError);

  DegradationReport same = degradation(strong, strong);
  for (const auto& e : same.entries) {
    CHECK(e.delta == 0.0);
    CHECK(!e.drop);
  }
}

TEST_CASE("degradation refuses mismatched metric sets") {
  PairDataset ds = testsupport::make_pair_dataset("mix", {{5, 5, 1}, {5, 5, 0}});
  EvalReport pair_report = evaluate_pair_run(ds, run_for(ds, {1, 0}));
  IRDataset ir = ir_eval_fixture();
  IRRun run{{"q1", "d1", 0.5}, {"q1", "d2", 0.9}, {"q1", "d3", 0.1},
            {"q2", "d4", 0.9}, {"q2", "d5", 0.1}, {"q3", "d6", 0.4}};
  EvalReport ir_report = evaluate_ir_run(ir, run);
  CHECK_THROWS_AS(degradation(pair_report, ir_report), ConfigError);
}

}  // TEST_SUITE("metrics")
