#include "lenbias/probe.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "lenbias/error.hpp"
#include "lenbias/rng.hpp"
#include "test_support.hpp"

using namespace lenbias;
using testsupport::TempDir;

namespace {

std::vector<long> iota_lengths(long lo, long hi) {
  std::vector<long> out;
  for (long v = lo; v <= hi; ++v) out.push_back(v);
  return out;
}

// Representations whose first coordinate encodes the length linearly; the
// remaining coordinates are seeded noise.
std::vector<RepresentationRecord> linear_records(int per_length, int dim,
                                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<RepresentationRecord> records;
  int id = 0;
  for (long len = 1; len <= 60; ++len)
    for (int i = 0; i < per_length; ++i) {
      RepresentationRecord r;
      r.id = "r" + std::to_string(id++);
      r.length = len;
      r.vector = Eigen::VectorXd(dim);
      r.vector(0) = static_cast<double>(len) / 60.0;
      for (int j = 1; j < dim; ++j) r.vector(j) = uniform01(rng);
      records.push_back(std::move(r));
    }
  shuffle_inplace(records, rng);
  return records;
}

// Representations carrying no length information at all.
std::vector<RepresentationRecord> random_records(int per_length, int dim,
                                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<RepresentationRecord> records;
  int id = 0;
  for (long len = 1; len <= 60; ++len)
    for (int i = 0; i < per_length; ++i) {
      RepresentationRecord r;
      r.id = "n" + std::to_string(id++);
      r.length = len;
      r.vector = Eigen::VectorXd(dim);
      for (int j = 0; j < dim; ++j) r.vector(j) = uniform01(rng);
      records.push_back(std::move(r));
    }
  shuffle_inplace(records, rng);
  return records;
}

ProbeModel small_model(std::uint64_t seed, int dim, int hidden) {
  std::mt19937_64 rng(seed);
  ProbeModel model;
  model.bins.edges = {2, 4, 6, 8, 10};
  model.w1 = Eigen::MatrixXd(hidden, dim);
  model.b1 = Eigen::VectorXd(hidden);
  model.w2 = Eigen::MatrixXd(6, hidden);
  model.b2 = Eigen::VectorXd(6);
  for (int i = 0; i < hidden; ++i) {
    model.b1(i) = uniform_range(rng, -0.5, 0.5);
    for (int j = 0; j < dim; ++j) model.w1(i, j) = uniform_range(rng, -0.5, 0.5);
  }
  for (int i = 0; i < 6; ++i) {
    model.b2(i) = uniform_range(rng, -0.5, 0.5);
    for (int j = 0; j < hidden; ++j) model.w2(i, j) = uniform_range(rng, -0.5, 0.5);
  }
  return model;
}

}  // namespace

TEST_SUITE("probe") {

TEST_CASE("sextile edges on the frozen 12-length fixture") {
  std::vector<long> lengths{3, 5, 7, 9, 11, 13, 15, 17, 19, 21, 23, 25};
  LengthBins bins = bin_lengths(lengths);
  CHECK(bins.edges == std::vector<long>{5, 9, 13, 17, 21});

  CHECK(bins.classify(3) == 0);
  CHECK(bins.classify(5) == 0);   // edge is inclusive
  CHECK(bins.classify(6) == 1);
  CHECK(bins.classify(10) == 2);
  CHECK(bins.classify(21) == 4);
  CHECK(bins.classify(22) == 5);
  CHECK(bins.classify(1000) == 5);
}

TEST_CASE("sextile edges on sixty uniform lengths") {
  auto lengths = iota_lengths(1, 60);
  LengthBins bins = bin_lengths(lengths);
  CHECK(bins.edges == std::vector<long>{10, 20, 30, 40, 50});
  // Each class receives exactly ten lengths.
  std::vector<long> per_class(6, 0);
  for (long v : lengths) ++per_class[bins.classify(v)];
  CHECK(per_class == std::vector<long>(6, 10));
}

TEST_CASE("duplicate-heavy lengths still produce strictly increasing edges") {
  std::vector<long> lengths(1000, 7);
  for (long v : {1L, 2L, 3L, 4L, 5L}) lengths.push_back(v);
  LengthBins bins = bin_lengths(lengths);
  CHECK(bins.edges == std::vector<long>{1, 2, 3, 4, 5});
  CHECK(bins.classify(7) == 5);
  CHECK(bins.classify(1) == 0);
}

TEST_CASE("binning requires six distinct lengths") {
  std::vector<long> five{1, 2, 3, 4, 5};
  CHECK_THROWS_AS(bin_lengths(five), ConfigError);
  std::vector<long> none;
  CHECK_THROWS_AS(bin_lengths(none), ConfigError);
  std::vector<long> constant(100, 9);
  CHECK_THROWS_AS(bin_lengths(constant), ConfigError);
}

TEST_CASE("max_pool_rows takes the column-wise maximum") {
  Eigen::MatrixXd rows(2, 2);
  rows << 1, 5, 3, 2;
  Eigen::VectorXd pooled = max_pool_rows(rows);
  CHECK(pooled(0) == 3.0);
  CHECK(pooled(1) == 5.0);

  Eigen::MatrixXd single(1, 3);
  single << -1, 0, 2;
  CHECK((max_pool_rows(single) - single.row(0).transpose()).norm() == 0.0);

  // Row order cannot matter.
  Eigen::MatrixXd swapped(2, 2);
  swapped << 3, 2, 1, 5;
  CHECK((max_pool_rows(swapped) - pooled).norm() == 0.0);

  Eigen::MatrixXd empty(0, 3);
  CHECK_THROWS_AS(max_pool_rows(empty), ConfigError);
}

TEST_CASE("predicted probabilities form a distribution") {
  ProbeModel model = small_model(808, 5, 7);
  std::mt19937_64 rng(809);
  for (int i = 0; i < 20; ++i) {
    Eigen::VectorXd x(5);
    for (int j = 0; j < 5; ++j) x(j) = uniform_range(rng, -2.0, 2.0);
    Eigen::VectorXd p = model.predict_proba(x);
    REQUIRE(p.size() == 6);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-9);
    for (int c = 0; c < 6; ++c) CHECK(p(c) >= 0.0);
    int pred = model.predict(x);
    for (int c = 0; c < 6; ++c) CHECK(p(pred) >= p(c));
  }
}

TEST_CASE("equal logits predict the lowest class index") {
  ProbeModel model = small_model(810, 4, 3);
  model.w2.setZero();
  model.b2.setZero();
  Eigen::VectorXd x = Eigen::VectorXd::Constant(4, 0.25);
  CHECK(model.predict(x) == 0);
}

TEST_CASE("probe gradients match central finite differences everywhere") {
  const int d = 3, h = 4, n = 10;
  ProbeModel model = small_model(811, d, h);
  std::mt19937_64 rng(812);
  Eigen::MatrixXd X(n, d);
  std::vector<int> classes(n);
  for (int i = 0; i < n; ++i) {
    classes[i] = static_cast<int>(bounded(rng, 6));
    for (int j = 0; j < d; ++j) X(i, j) = uniform_range(rng, -1.5, 1.5);
  }

  ProbeGradients grads;
  probe_loss_grad(model, X, classes, &grads);

  const double eps = 1e-5;
  auto loss_of = [&](const ProbeModel& m) {
    return probe_loss_grad(m, X, classes, nullptr);
  };
  auto check_coord = [&](double analytic, double* coord) {
    double saved = *coord;
    *coord = saved + eps;
    double up = loss_of(model);
    *coord = saved - eps;
    double down = loss_of(model);
    *coord = saved;
    double numeric = (up - down) / (2 * eps);
    CHECK(std::abs(numeric - analytic) <=
          1e-4 * std::max(1.0, std::abs(numeric)));
  };

  for (int i = 0; i < h; ++i)
    for (int j = 0; j < d; ++j) check_coord(grads.w1(i, j), &model.w1(i, j));
  for (int i = 0; i < h; ++i) check_coord(grads.b1(i), &model.b1(i));
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < h; ++j) check_coord(grads.w2(i, j), &model.w2(i, j));
  for (int i = 0; i < 6; ++i) check_coord(grads.b2(i), &model.b2(i));
}

TEST_CASE("training decodes linearly encoded lengths") {
  auto train = linear_records(50, 8, 900);  // 3000 records
  auto held_out = linear_records(50, 8, 901);
  ProbeConfig config;
  config.hidden = 32;
  config.epochs = 40;
  ProbeModel model = train_probe(train, config, 42);
  CHECK(model.bins.edges == std::vector<long>{10, 20, 30, 40, 50});

  ProbeReport report = eval_probe(model, held_out);
  CHECK(report.accuracy >= 0.90);
  CHECK(report.bin_edges == model.bins.edges);
  REQUIRE(report.per_class_accuracy.size() == 6);
  for (const auto& acc : report.per_class_accuracy) CHECK(acc.has_value());
}

TEST_CASE("training on uninformative representations stays at chance") {
  auto train = random_records(50, 8, 910);
  auto held_out = random_records(50, 8, 911);
  ProbeConfig config;
  config.hidden = 32;
  config.epochs = 20;
  ProbeModel model = train_probe(train, config, 42);
  ProbeReport report = eval_probe(model, held_out);
  CHECK(report.accuracy >= 1.0 / 6.0 - 0.05);
  CHECK(report.accuracy <= 1.0 / 6.0 + 0.05);
}

TEST_CASE("shuffling the lengths destroys every learnable signal") {
  auto records = linear_records(50, 8, 920);
  // Detach lengths from vectors by rotating them one record over.
  std::vector<long> lengths;
  for (const auto& r : records) lengths.push_back(r.length);
  std::mt19937_64 rng(921);
  shuffle_inplace(lengths, rng);
  for (std::size_t i = 0; i < records.size(); ++i) records[i].length = lengths[i];

  auto train = std::vector<RepresentationRecord>(records.begin(),
                                                 records.begin() + 1500);
  auto held_out = std::vector<RepresentationRecord>(records.begin() + 1500,
                                                    records.end());
  ProbeConfig config;
  config.hidden = 32;
  config.epochs = 20;
  ProbeModel model = train_probe(train, config, 42);
  ProbeReport report = eval_probe(model, held_out);
  CHECK(report.accuracy >= 1.0 / 6.0 - 0.05);
  CHECK(report.accuracy <= 1.0 / 6.0 + 0.05);
}

TEST_CASE("full-batch loss is non-increasing on the decodable fixture") {
  auto records = linear_records(10, 4, 930);  // 600 records
  Eigen::MatrixXd X(records.size(), 4);
  for (std::size_t i = 0; i < records.size(); ++i)
    X.row(i) = records[i].vector.transpose();

  ProbeConfig config;
  config.hidden = 16;
  config.learning_rate = 0.3;
  config.batch_size = static_cast<long>(records.size());

  double previous = -1.0;
  for (long epochs : {0L, 1L, 2L, 4L, 8L, 16L}) {
    config.epochs = epochs;
    ProbeModel model = train_probe(records, config, 7);
    std::vector<int> classes;
    for (const auto& r : records)
      classes.push_back(model.bins.classify(r.length));
    double loss = probe_loss_grad(model, X, classes, nullptr);
    if (previous >= 0.0) CHECK(loss <= previous + 1e-12);
    previous = loss;
  }
}

TEST_CASE("probe training is deterministic in the seed") {
  auto records = linear_records(10, 4, 940);
  ProbeConfig config;
  config.hidden = 8;
  config.epochs = 5;
  ProbeModel a = train_probe(records, config, 3);
  ProbeModel b = train_probe(records, config, 3);
  ProbeModel c = train_probe(records, config, 4);
  CHECK((a.w1 - b.w1).norm() == 0.0);
  CHECK((a.w2 - b.w2).norm() == 0.0);
  CHECK((a.w1 - c.w1).norm() != 0.0);
}

TEST_CASE("probe training rejects undecodable setups") {
  ProbeConfig config;
  SUBCASE("too few distinct lengths") {
    std::vector<RepresentationRecord> records;
    for (int i = 0; i < 30; ++i) {
      RepresentationRecord r;
      r.id = "x" + std::to_string(i);
      r.length = 1 + (i % 3);
      r.vector = Eigen::VectorXd::Constant(4, 0.5);
      records.push_back(std::move(r));
    }
    CHECK_THROWS_AS(train_probe(records, config, 1), ConfigError);
  }
  SUBCASE("bad hyperparameters") {
    auto records = linear_records(2, 4, 950);
    ProbeConfig bad = config;
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(train_probe(records, bad, 1), ConfigError);
    bad = config;
    bad.hidden = 0;
    CHECK_THROWS_AS(train_probe(records, bad, 1), ConfigError);
    bad = config;
    bad.batch_size = 0;
    CHECK_THROWS_AS(train_probe(records, bad, 1), ConfigError);
  }
}

TEST_CASE("eval_probe refuses mismatched dimensions and reports gaps") {
  auto records = linear_records(5, 4, 960);
  ProbeConfig config;
  config.hidden = 8;
  config.epochs = 3;
  ProbeModel model = train_probe(records, config, 3);

  SUBCASE("dimension mismatch") {
    auto wrong = linear_records(2, 5, 961);
    CHECK_THROWS_AS(eval_probe(model, wrong), ConfigError);
  }
  SUBCASE("classes absent from gold get no per-class entry") {
    std::vector<RepresentationRecord> short_only;
    for (const auto& r : records)
      if (model.bins.classify(r.length) == 0) short_only.push_back(r);
    REQUIRE(!short_only.empty());
    ProbeReport report = eval_probe(model, short_only);
    CHECK(report.per_class_accuracy[0].has_value());
    for (int c = 1; c < 6; ++c)
      CHECK(!report.per_class_accuracy[c].has_value());
  }
}

TEST_CASE("probe models survive a save/load round trip") {
  TempDir dir;
  auto records = linear_records(5, 4, 970);
  ProbeConfig config;
  config.hidden = 8;
  config.epochs = 5;
  ProbeModel model = train_probe(records, config, 9);
  save_probe(model, dir / "probe.json");
  ProbeModel back = load_probe(dir / "probe.json");

  CHECK(back.bins.edges == model.bins.edges);
  CHECK((back.w1 - model.w1).norm() == 0.0);
  CHECK((back.b1 - model.b1).norm() == 0.0);
  CHECK((back.w2 - model.w2).norm() == 0.0);
  CHECK((back.b2 - model.b2).norm() == 0.0);
  for (int i = 0; i < 10; ++i)
    CHECK(back.predict(records[i].vector) == model.predict(records[i].vector));
}

TEST_CASE("representation files round trip") {
  TempDir dir;
  std::vector<RepresentationRecord> records;
  for (int i = 0; i < 3; ++i) {
    RepresentationRecord r;
    r.id = "rec" + std::to_string(i);
    r.length = 4 + i;
    r.vector = Eigen::VectorXd(3);
    r.vector << 0.1 * i, 1.0 / 3.0, -2.5;
    records.push_back(std::move(r));
  }
  write_representations(records, dir / "reps.jsonl");
  auto back = load_representations(dir / "reps.jsonl");
  REQUIRE(back.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(back[i].id == records[i].id);
    CHECK(back[i].length == records[i].length);
    CHECK((back[i].vector - records[i].vector).norm() == 0.0);
  }
}

TEST_CASE("representation loader handles the text key and bad input") {
  TempDir dir;
  SUBCASE("length computed from text") {
    testsupport::write_file(
        dir / "reps.jsonl",
        "{\"id\": \"a\", \"vector\": [0.1, 0.2], \"text\": \"three little words\"}\n");
    auto records = load_representations(dir / "reps.jsonl");
    REQUIRE(records.size() == 1);
    CHECK(records[0].length == 3);
  }
  SUBCASE("duplicate id") {
    testsupport::write_file(dir / "reps.jsonl",
                            "{\"id\": \"a\", \"vector\": [0.1], \"length\": 2}\n"
                            "{\"id\": \"a\", \"vector\": [0.3], \"length\": 4}\n");
    CHECK_THROWS_AS(load_representations(dir / "reps.jsonl"), IntegrityError);
  }
  SUBCASE("dimension mismatch") {
    testsupport::write_file(dir / "reps.jsonl",
                            "{\"id\": \"a\", \"vector\": [0.1], \"length\": 2}\n"
                            "{\"id\": \"b\", \"vector\": [0.3, 0.4], \"length\": 4}\n");
    CHECK_THROWS_AS(load_representations(dir / "reps.jsonl"), IntegrityError);
  }
  SUBCASE("non-positive length") {
    testsupport::write_file(dir / "reps.jsonl",
                            "{\"id\": \"a\", \"vector\": [0.1], \"length\": 0}\n");
    CHECK_THROWS_AS(load_representations(dir / "reps.jsonl"), IntegrityError);
  }
  SUBCASE("missing keys") {
    testsupport::write_file(dir / "reps.jsonl", "{\"id\": \"a\"}\n");
    CHECK_THROWS_AS(load_representations(dir / "reps.jsonl"), ParseError);
  }
  SUBCASE("non-numeric vector entry") {
    testsupport::write_file(
        dir / "reps.jsonl",
        "{\"id\": \"a\", \"vector\": [0.1, \"x\"], \"length\": 2}\n");
    CHECK_THROWS_AS(load_representations(dir / "reps.jsonl"), ParseError);
  }
}

}  // TEST_SUITE("probe")
