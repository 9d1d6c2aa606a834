#include "lenbias/probe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "json.hpp"
#include "lenbias/detail/util.hpp"
#include "lenbias/error.hpp"
#include "lenbias/rng.hpp"

namespace lenbias {

std::vector<RepresentationRecord> load_representations(
    const std::filesystem::path& path) {
  std::vector<RepresentationRecord> records;
  std::unordered_set<std::string> seen;
  auto lines = detail::read_lines(path);
  long dim = -1;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::string context = path.filename().string() + ":" + std::to_string(i + 1);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(context + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j.contains("vector"))
      throw ParseError(context + ": need keys 'id' and 'vector'");
    RepresentationRecord rec;
    try {
      rec.id = j["id"].get<std::string>();
      auto values = j["vector"].get<std::vector<double>>();
      rec.vector = Eigen::Map<const Eigen::VectorXd>(
          values.data(), static_cast<long>(values.size()));
      if (j.contains("length"))
        rec.length = j["length"].get<long>();
      else if (j.contains("text"))
        rec.length = count_tokens(j["text"].get<std::string>());
      else
        throw ParseError(context + ": need 'length' or 'text'");
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(context + ": " + e.what());
    }
    if (rec.id.empty()) throw ParseError(context + ": empty id");
    if (!seen.insert(rec.id).second)
      throw IntegrityError(context + ": duplicate id '" + rec.id + "'");
    if (rec.length < 1)
      throw IntegrityError(context + ": length must be >= 1");
    if (rec.vector.size() == 0)
      throw IntegrityError(context + ": empty vector");
    if (dim < 0)
      dim = rec.vector.size();
    else if (rec.vector.size() != dim)
      throw IntegrityError(context + ": vector dimension " +
                           std::to_string(rec.vector.size()) +
                           " does not match earlier dimension " +
                           std::to_string(dim));
    records.push_back(std::move(rec));
  }
  if (records.empty())
    throw IntegrityError(path.string() + ": no representations");
  return records;
}

void write_representations(std::span<const RepresentationRecord> records,
                           const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  for (const auto& rec : records) {
    nlohmann::ordered_json j;
    j["id"] = rec.id;
    j["vector"] = std::vector<double>(rec.vector.data(),
                                      rec.vector.data() + rec.vector.size());
    j["length"] = rec.length;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

int LengthBins::classify(long length) const {
  for (std::size_t b = 0; b < edges.size(); ++b)
    if (length <= edges[b]) return static_cast<int>(b);
  return static_cast<int>(edges.size());
}

LengthBins bin_lengths(std::span<const long> lengths) {
  std::vector<long> sorted(lengths.begin(), lengths.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<long> distinct = sorted;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 6)
    throw ConfigError("length binning needs at least 6 distinct lengths, got " +
                      std::to_string(distinct.size()));

  const long n = static_cast<long>(sorted.size());
  const long nd = static_cast<long>(distinct.size());
  LengthBins bins;
  long prev_idx = -1;  // index into distinct of the previous edge
  for (long b = 1; b <= 5; ++b) {
    long value = sorted[n * b / 6 - 1];  // equal-frequency cut
    long idx = static_cast<long>(
        std::lower_bound(distinct.begin(), distinct.end(), value) -
        distinct.begin());
    // Keep edges strictly increasing and below the max so every class is
    // non-empty on the data that defined them.
    idx = std::clamp(idx, prev_idx + 1, nd - 7 + b);
    bins.edges.push_back(distinct[idx]);
    prev_idx = idx;
  }
  return bins;
}

Eigen::VectorXd max_pool_rows(const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0)
    throw ConfigError("cannot max-pool an empty matrix");
  return rows.colwise().maxCoeff().transpose();
}

namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

// Row-wise softmax with the max subtracted for stability.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd shifted = z.colwise() - z.rowwise().maxCoeff();
  Eigen::MatrixXd e = shifted.array().exp().matrix();
  Eigen::VectorXd sums = e.rowwise().sum();
  return e.array().colwise() / sums.array();
}

}  // namespace

Eigen::VectorXd ProbeModel::predict_proba(const Eigen::VectorXd& x) const {
  if (x.size() != w1.cols())
    throw ConfigError("representation dimension " + std::to_string(x.size()) +
                      " does not match probe input dimension " +
                      std::to_string(w1.cols()));
  Eigen::VectorXd h = sigmoid(w1 * x + b1);
  Eigen::VectorXd logits = w2 * h + b2;
  Eigen::ArrayXd shifted = logits.array() - logits.maxCoeff();
  Eigen::ArrayXd e = shifted.exp();
  return (e / e.sum()).matrix();
}

int ProbeModel::predict(const Eigen::VectorXd& x) const {
  Eigen::VectorXd p = predict_proba(x);
  int best = 0;
  for (int c = 1; c < p.size(); ++c)
    if (p[c] > p[best]) best = c;  // strict: ties keep the lowest class
  return best;
}

double probe_loss_grad(const ProbeModel& model, const Eigen::MatrixXd& X,
                       std::span<const int> classes, ProbeGradients* grads) {
  const long n = X.rows();
  if (n == 0) throw ConfigError("empty batch");
  if (static_cast<long>(classes.size()) != n)
    throw ConfigError("batch and class labels differ in length");
  if (X.cols() != model.w1.cols())
    throw ConfigError("batch dimension does not match probe input dimension");

  Eigen::MatrixXd z1 =
      (X * model.w1.transpose()).rowwise() + model.b1.transpose();
  Eigen::MatrixXd h = sigmoid(z1);                                    // n x hid
  Eigen::MatrixXd z2 =
      (h * model.w2.transpose()).rowwise() + model.b2.transpose();    // n x 6
  Eigen::MatrixXd p = softmax_rows(z2);

  double loss = 0.0;
  for (long i = 0; i < n; ++i) {
    int y = classes[i];
    if (y < 0 || y >= p.cols())
      throw ConfigError("class label out of range");
    // log-sum-exp form keeps the loss finite even for confident mistakes
    double m = z2.row(i).maxCoeff();
    double lse = m + std::log((z2.row(i).array() - m).exp().sum());
    loss += lse - z2(i, y);
  }
  loss /= static_cast<double>(n);

  if (grads) {
    Eigen::MatrixXd dz2 = p;
    for (long i = 0; i < n; ++i) dz2(i, classes[i]) -= 1.0;
    dz2 /= static_cast<double>(n);
    grads->w2 = dz2.transpose() * h;
    grads->b2 = dz2.colwise().sum().transpose();
    Eigen::MatrixXd dh = dz2 * model.w2;
    Eigen::MatrixXd dz1 =
        (dh.array() * h.array() * (1.0 - h.array())).matrix();
    grads->w1 = dz1.transpose() * X;
    grads->b1 = dz1.colwise().sum().transpose();
  }
  return loss;
}

ProbeModel train_probe(std::span<const RepresentationRecord> records,
                       const ProbeConfig& config, std::uint64_t seed) {
  if (records.empty()) throw ConfigError("no training records");
  if (config.hidden < 1) throw ConfigError("hidden width must be >= 1");
  if (config.batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (config.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(config.learning_rate > 0.0))
    throw ConfigError("learning rate must be positive");
  const long d = records[0].vector.size();
  for (const auto& rec : records)
    if (rec.vector.size() != d)
      throw IntegrityError("representation dimensions are inconsistent");

  std::vector<long> lengths;
  lengths.reserve(records.size());
  for (const auto& rec : records) lengths.push_back(rec.length);

  ProbeModel model;
  model.config = config;
  model.bins = bin_lengths(lengths);
  std::vector<int> classes;
  classes.reserve(records.size());
  for (const auto& rec : records)
    classes.push_back(model.bins.classify(rec.length));

  const long n = static_cast<long>(records.size());
  Eigen::MatrixXd X(n, d);
  for (long i = 0; i < n; ++i) X.row(i) = records[i].vector.transpose();

  // Seeded uniform init, filled in a fixed row-major order so the same seed
  // always yields the same parameters.
  std::mt19937_64 rng(derive_seed(seed, "probe-init"));
  auto fill_uniform = [&rng](Eigen::MatrixXd& m, double scale) {
    for (long r = 0; r < m.rows(); ++r)
      for (long c = 0; c < m.cols(); ++c)
        m(r, c) = uniform_range(rng, -scale, scale);
  };
  model.w1.resize(config.hidden, d);
  fill_uniform(model.w1, 1.0 / std::sqrt(static_cast<double>(d)));
  model.b1 = Eigen::VectorXd::Zero(config.hidden);
  model.w2.resize(6, config.hidden);
  fill_uniform(model.w2, 1.0 / std::sqrt(static_cast<double>(config.hidden)));
  model.b2 = Eigen::VectorXd::Zero(6);

  std::mt19937_64 shuffle_rng(derive_seed(seed, "probe-shuffle"));
  std::vector<long> order(n);
  std::iota(order.begin(), order.end(), 0);
  ProbeGradients grads;
  for (long epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_inplace(order, shuffle_rng);
    for (long start = 0; start < n; start += config.batch_size) {
      long size = std::min(config.batch_size, n - start);
      Eigen::MatrixXd xb(size, d);
      std::vector<int> yb(size);
      for (long i = 0; i < size; ++i) {
        xb.row(i) = X.row(order[start + i]);
        yb[i] = classes[order[start + i]];
      }
      double loss = probe_loss_grad(model, xb, yb, &grads);
      if (!std::isfinite(loss))
        throw TrainingError("probe loss became non-finite at epoch " +
                            std::to_string(epoch));
      model.w1 -= config.learning_rate * grads.w1;
      model.b1 -= config.learning_rate * grads.b1;
      model.w2 -= config.learning_rate * grads.w2;
      model.b2 -= config.learning_rate * grads.b2;
    }
  }
  return model;
}

ProbeReport eval_probe(const ProbeModel& model,
                       std::span<const RepresentationRecord> records) {
  if (records.empty()) throw ConfigError("no records to evaluate");
  std::vector<long> correct(6, 0), total(6, 0);
  long hits = 0;
  for (const auto& rec : records) {
    int gold = model.bins.classify(rec.length);
    int predicted = model.predict(rec.vector);
    ++total[gold];
    if (predicted == gold) {
      ++correct[gold];
      ++hits;
    }
  }
  ProbeReport report;
  report.accuracy = static_cast<double>(hits) / static_cast<double>(records.size());
  report.per_class_accuracy.resize(6);
  for (int c = 0; c < 6; ++c)
    if (total[c] > 0)
      report.per_class_accuracy[c] =
          static_cast<double>(correct[c]) / static_cast<double>(total[c]);
  report.bin_edges = model.bins.edges;
  return report;
}

namespace {

nlohmann::ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::ordered_json::array();
  for (long r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::ordered_json::array();
    for (long c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j,
                                 const std::string& what) {
  if (!j.is_array() || j.empty())
    throw ParseError(what + ": expected a non-empty array of rows");
  auto first = j[0].get<std::vector<double>>();
  Eigen::MatrixXd m(static_cast<long>(j.size()),
                    static_cast<long>(first.size()));
  for (std::size_t r = 0; r < j.size(); ++r) {
    auto row = j[r].get<std::vector<double>>();
    if (row.size() != first.size())
      throw ParseError(what + ": ragged rows");
    for (std::size_t c = 0; c < row.size(); ++c)
      m(static_cast<long>(r), static_cast<long>(c)) = row[c];
  }
  return m;
}

}  // namespace

void save_probe(const ProbeModel& model, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["bin_edges"] = model.bins.edges;
  j["hidden"] = model.config.hidden;
  j["learning_rate"] = model.config.learning_rate;
  j["epochs"] = model.config.epochs;
  j["batch_size"] = model.config.batch_size;
  j["w1"] = matrix_to_json(model.w1);
  j["b1"] = std::vector<double>(model.b1.data(), model.b1.data() + model.b1.size());
  j["w2"] = matrix_to_json(model.w2);
  j["b2"] = std::vector<double>(model.b2.data(), model.b2.data() + model.b2.size());
  auto out = detail::open_output(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

ProbeModel load_probe(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  ProbeModel model;
  try {
    model.bins.edges = j.at("bin_edges").get<std::vector<long>>();
    model.config.hidden = j.at("hidden").get<long>();
    model.config.learning_rate = j.at("learning_rate").get<double>();
    model.config.epochs = j.at("epochs").get<long>();
    model.config.batch_size = j.at("batch_size").get<long>();
    model.w1 = matrix_from_json(j.at("w1"), path.string() + ": w1");
    auto b1 = j.at("b1").get<std::vector<double>>();
    model.b1 = Eigen::Map<const Eigen::VectorXd>(b1.data(),
                                                 static_cast<long>(b1.size()));
    model.w2 = matrix_from_json(j.at("w2"), path.string() + ": w2");
    auto b2 = j.at("b2").get<std::vector<double>>();
    model.b2 = Eigen::Map<const Eigen::VectorXd>(b2.data(),
                                                 static_cast<long>(b2.size()));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (model.bins.edges.size() != 5)
    throw IntegrityError(path.string() + ": expected 5 bin edges");
  if (model.w2.rows() != 6 || model.b2.size() != 6 ||
      model.w1.rows() != model.w2.cols() || model.b1.size() != model.w1.rows())
    throw IntegrityError(path.string() + ": inconsistent parameter shapes");
  return model;
}

}  // namespace lenbias
