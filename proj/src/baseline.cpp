#include "lenbias/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "lenbias/detail/util.hpp"
#include "lenbias/error.hpp"

namespace lenbias {

ThresholdModel fit_threshold(std::span<const DivergenceScore> divergences,
                             std::span<const int> labels) {
  if (divergences.size() != labels.size())
    throw ConfigError("divergences and labels differ in length");
  const long n = static_cast<long>(labels.size());
  long total_pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw ConfigError("labels must be 0 or 1");
    total_pos += y;
  }
  const long total_neg = n - total_pos;
  if (total_pos == 0 || total_neg == 0)
    throw ConfigError("threshold fit needs both labels present");

  // (divergence, label) pairs with finite divergence, sorted ascending.
  // Sentinel examples always predict negative, so they contribute fixed
  // fn/tn mass no matter where tau lies.
  std::vector<std::pair<double, int>> finite;
  finite.reserve(n);
  for (long i = 0; i < n; ++i)
    if (!divergences[i].is_sentinel())
      finite.emplace_back(divergences[i].value(), labels[i]);
  std::sort(finite.begin(), finite.end());

  bool has_two_distinct = false;
  for (std::size_t i = 1; i < finite.size(); ++i)
    if (finite[i].first != finite[i - 1].first) {
      has_two_distinct = true;
      break;
    }
  if (!has_two_distinct)
    throw ConfigError(
        "threshold fit needs at least two distinct finite divergences");

  // Sweep candidate taus (midpoints between consecutive distinct values).
  // At the midpoint after position i, everything at or below finite[i]
  // predicts positive.
  ThresholdModel best;
  double best_ba = -1.0;
  long tp = 0, fp = 0;
  for (std::size_t i = 0; i < finite.size(); ++i) {
    if (finite[i].second == 1)
      ++tp;
    else
      ++fp;
    if (i + 1 < finite.size() && finite[i + 1].first == finite[i].first)
      continue;
    if (i + 1 == finite.size()) break;  // above the max is not a midpoint
    double tau = (finite[i].first + finite[i + 1].first) / 2.0;
    double ba = (static_cast<double>(tp) / total_pos +
                 static_cast<double>(total_neg - fp) / total_neg) /
                2.0;
    if (ba > best_ba) {
      best_ba = ba;
      best.tau = tau;
    }
  }
  best.train_ba = best_ba;
  return best;
}

ThresholdModel fit_threshold(const PairDataset& train) {
  auto scored = score_dataset(train);
  std::vector<DivergenceScore> divs;
  std::vector<int> labels;
  divs.reserve(scored.size());
  labels.reserve(scored.size());
  for (std::size_t i = 0; i < scored.size(); ++i) {
    divs.push_back(scored[i].score);
    labels.push_back(train.examples[i].label);
  }
  return fit_threshold(divs, labels);
}

namespace {

const std::vector<std::string>& known_features() {
  static const std::vector<std::string> names = {
      "divergence", "abs_len_diff", "len_a", "len_b", "jaccard_overlap"};
  return names;
}

}  // namespace

Featurizer Featurizer::fit(std::span<const std::string> names,
                           const PairDataset& train) {
  if (names.empty()) throw ConfigError("feature list is empty");
  Featurizer f;
  for (const auto& name : names) {
    if (std::find(known_features().begin(), known_features().end(), name) ==
        known_features().end())
      throw ConfigError("unknown feature '" + name + "'");
    f.feature_names.push_back(name);
  }
  double max_finite = 0.0;
  for (const auto& ex : train.examples) {
    auto d = pairwise_divergence(ex.a.token_count, ex.b.token_count);
    if (!d.is_sentinel()) max_finite = std::max(max_finite, d.value());
  }
  f.sentinel_divergence = 2.0 * max_finite;
  return f;
}

Eigen::VectorXd Featurizer::operator()(const PairExample& pair) const {
  Eigen::VectorXd x(static_cast<long>(feature_names.size()));
  for (std::size_t i = 0; i < feature_names.size(); ++i) {
    const std::string& name = feature_names[i];
    double v = 0.0;
    if (name == "divergence") {
      auto d = pairwise_divergence(pair.a.token_count, pair.b.token_count);
      v = d.is_sentinel() ? sentinel_divergence : d.value();
    } else if (name == "abs_len_diff") {
      v = std::abs(pair.a.token_count - pair.b.token_count);
    } else if (name == "len_a") {
      v = pair.a.token_count;
    } else if (name == "len_b") {
      v = pair.b.token_count;
    } else if (name == "jaccard_overlap") {
      v = jaccard_overlap(pair.a.raw, pair.b.raw);
    } else {
      throw ConfigError("unknown feature '" + name + "'");
    }
    x[static_cast<long>(i)] = v;
  }
  return x;
}

Eigen::MatrixXd Featurizer::matrix(const PairDataset& dataset) const {
  Eigen::MatrixXd X(static_cast<long>(dataset.examples.size()),
                    static_cast<long>(feature_names.size()));
  for (std::size_t i = 0; i < dataset.examples.size(); ++i)
    X.row(static_cast<long>(i)) = (*this)(dataset.examples[i]).transpose();
  return X;
}

void logistic_loss_grad(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& w, double b, double l2,
                        double& loss, Eigen::VectorXd& grad_w, double& grad_b) {
  const long n = X.rows();
  Eigen::VectorXd z = (X * w).array() + b;
  // Stable per-example loss: max(z,0) - y*z + log(1 + exp(-|z|)).
  Eigen::ArrayXd az = z.array().abs();
  Eigen::ArrayXd per = z.array().max(0.0) - y.array() * z.array() +
                       (1.0 + (-az).exp()).log();
  loss = per.sum() / static_cast<double>(n) + 0.5 * l2 * w.squaredNorm();
  Eigen::VectorXd p = (1.0 / (1.0 + (-z.array()).exp())).matrix();
  grad_w = X.transpose() * (p - y) / static_cast<double>(n) + l2 * w;
  grad_b = (p - y).sum() / static_cast<double>(n);
}

LinearModel train_linear(const PairDataset& train,
                         std::span<const std::string> features,
                         const LinearTrainConfig& config) {
  long pos = 0;
  for (const auto& ex : train.examples) pos += ex.label;
  if (pos == 0 || pos == static_cast<long>(train.examples.size()))
    throw ConfigError("training data has a single label");
  if (config.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(config.learning_rate > 0.0))
    throw ConfigError("learning rate must be positive");
  if (config.l2 < 0.0) throw ConfigError("l2 strength must be >= 0");

  LinearModel model;
  model.featurizer = Featurizer::fit(features, train);
  Eigen::MatrixXd X = model.featurizer.matrix(train);
  Eigen::VectorXd y(X.rows());
  for (long i = 0; i < X.rows(); ++i) y[i] = train.examples[i].label;

  model.weights = Eigen::VectorXd::Zero(X.cols());
  model.bias = 0.0;
  Eigen::VectorXd grad_w(X.cols());
  double loss = 0.0, grad_b = 0.0;
  for (long epoch = 0; epoch < config.epochs; ++epoch) {
    logistic_loss_grad(X, y, model.weights, model.bias, config.l2, loss,
                       grad_w, grad_b);
    if (!std::isfinite(loss))
      throw TrainingError("loss became non-finite at epoch " +
                          std::to_string(epoch) +
                          "; lower the learning rate");
    model.weights -= config.learning_rate * grad_w;
    model.bias -= config.learning_rate * grad_b;
  }
  logistic_loss_grad(X, y, model.weights, model.bias, config.l2, loss, grad_w,
                     grad_b);
  if (!std::isfinite(loss))
    throw TrainingError("final loss is non-finite; lower the learning rate");
  return model;
}

double LinearModel::predict_proba(const PairExample& pair) const {
  double z = weights.dot(featurizer(pair)) + bias;
  return 1.0 / (1.0 + std::exp(-z));
}

void save_model(const BaselineModel& model, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  if (const auto* t = std::get_if<ThresholdModel>(&model)) {
    j["type"] = "threshold";
    j["tau"] = t->tau;
    j["train_ba"] = t->train_ba;
  } else {
    const auto& m = std::get<LinearModel>(model);
    j["type"] = "linear";
    j["features"] = m.featurizer.feature_names;
    j["sentinel_divergence"] = m.featurizer.sentinel_divergence;
    j["weights"] = std::vector<double>(m.weights.data(),
                                       m.weights.data() + m.weights.size());
    j["bias"] = m.bias;
  }
  auto out = detail::open_output(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

BaselineModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  try {
    std::string type = j.at("type").get<std::string>();
    if (type == "threshold") {
      ThresholdModel t;
      t.tau = j.at("tau").get<double>();
      t.train_ba = j.value("train_ba", 0.0);
      if (!std::isfinite(t.tau) || t.tau < 0.0)
        throw IntegrityError(path.string() + ": tau must be finite and >= 0");
      return t;
    }
    if (type == "linear") {
      LinearModel m;
      m.featurizer.feature_names =
          j.at("features").get<std::vector<std::string>>();
      if (m.featurizer.feature_names.empty())
        throw IntegrityError(path.string() + ": empty feature list");
      m.featurizer.sentinel_divergence = j.at("sentinel_divergence").get<double>();
      auto weights = j.at("weights").get<std::vector<double>>();
      if (weights.size() != m.featurizer.feature_names.size())
        throw IntegrityError(path.string() +
                             ": weight count does not match feature count");
      m.weights = Eigen::Map<const Eigen::VectorXd>(
          weights.data(), static_cast<long>(weights.size()));
      m.bias = j.at("bias").get<double>();
      return m;
    }
    throw ConfigError(path.string() + ": unknown model type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

PairRun predict_run(const BaselineModel& model, const PairDataset& dataset) {
  PairRun run;
  run.reserve(dataset.examples.size());
  if (const auto* t = std::get_if<ThresholdModel>(&model)) {
    for (const auto& ex : dataset.examples) {
      auto d = pairwise_divergence(ex.a.token_count, ex.b.token_count);
      run.push_back({ex.id, t->predict(d) ? 1.0 : 0.0});
    }
  } else {
    const auto& m = std::get<LinearModel>(model);
    for (const auto& ex : dataset.examples)
      run.push_back({ex.id, m.predict_proba(ex)});
  }
  return run;
}

BiasTransferResult evaluate_bias_transfer(const PairDataset& train_orig,
                                          const PairDataset& train_adv,
                                          const PairDataset& test_orig,
                                          const PairDataset& test_adv,
                                          std::span<const std::string> features,
                                          const LinearTrainConfig& config) {
  BiasTransferResult r;
  r.original_model = train_linear(train_orig, features, config);
  r.adversarial_model = train_linear(train_adv, features, config);

  auto eval = [&](const LinearModel& model, const PairDataset& test,
                  const std::string& run_name) {
    EvalReport report = evaluate_pair_run(test, predict_run(model, test));
    report.run_name = run_name;
    return report;
  };
  r.orig_on_orig = eval(r.original_model, test_orig, "orig-trained");
  r.orig_on_adv = eval(r.original_model, test_adv, "orig-trained");
  r.adv_on_orig = eval(r.adversarial_model, test_orig, "adv-trained");
  r.adv_on_adv = eval(r.adversarial_model, test_adv, "adv-trained");
  r.original_degradation = degradation(r.orig_on_orig, r.orig_on_adv);
  r.adversarial_degradation = degradation(r.adv_on_orig, r.adv_on_adv);
  return r;
}

}  // namespace lenbias
