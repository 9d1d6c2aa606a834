#ifndef LENBIAS_BASELINE_HPP
#define LENBIAS_BASELINE_HPP

#include <Eigen/Core>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lenbias/corpus.hpp"
#include "lenbias/divergence.hpp"
#include "lenbias/metrics.hpp"

namespace lenbias {

/// The length heuristic itself as a classifier: predict positive iff the
/// pair's divergence is at most tau. Sentinel divergence always predicts
/// negative. How well this model scores on a dataset measures how
/// exploitable the dataset's length cue is.
struct ThresholdModel {
  double tau = 0.0;
  double train_ba = 0.0;  // balanced accuracy achieved on the fit data

  int predict(const DivergenceScore& score) const {
    return (!score.is_sentinel() && score.value() <= tau) ? 1 : 0;
  }
};

/// Picks tau as the balanced-accuracy-maximizing midpoint between
/// consecutive distinct finite divergences (ties resolved to the smallest
/// tau). Requires both labels present and at least two distinct finite
/// divergences; throws ConfigError otherwise.
ThresholdModel fit_threshold(std::span<const DivergenceScore> divergences,
                             std::span<const int> labels);

/// Maps pairs to dense feature vectors. Known names: divergence,
/// abs_len_diff, len_a, len_b, jaccard_overlap. Sentinel divergence is
/// imputed as twice the largest finite divergence seen during fit, so the
/// feature stays finite at predict time too.
struct Featurizer {
  std::vector<std::string> feature_names;
  double sentinel_divergence = 0.0;

  /// Validates names (unknown -> ConfigError, empty -> ConfigError) and
  /// computes the sentinel imputation value from the training data.
  static Featurizer fit(std::span<const std::string> names,
                        const PairDataset& train);

  Eigen::VectorXd operator()(const PairExample& pair) const;
  Eigen::MatrixXd matrix(const PairDataset& dataset) const;  // one row per pair
};

struct LinearTrainConfig {
  double learning_rate = 0.5;
  long epochs = 400;
  double l2 = 1e-4;  // applied to weights only, never the bias
};

/// Logistic regression over a Featurizer's features.
struct LinearModel {
  Featurizer featurizer;
  Eigen::VectorXd weights;
  double bias = 0.0;

  double predict_proba(const PairExample& pair) const;
};

/// Mean logistic loss plus (l2/2)*|w|^2, with its analytic gradient.
/// X is n x d, y holds 0/1 gold labels. Exposed so the gradient can be
/// verified against finite differences.
void logistic_loss_grad(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& w, double b, double l2,
                        double& loss, Eigen::VectorXd& grad_w, double& grad_b);

/// Full-batch gradient descent from zero weights; no stochastic steps, so
/// the result is a deterministic function of the data order and config.
/// Throws TrainingError if the loss leaves the finite range and ConfigError
/// if only one label is present.
LinearModel train_linear(const PairDataset& train,
                         std::span<const std::string> features,
                         const LinearTrainConfig& config);

using BaselineModel = std::variant<ThresholdModel, LinearModel>;

/// Model files are tagged JSON; threshold models persist tau, linear models
/// persist features, weights, bias, and the sentinel imputation value.
void save_model(const BaselineModel& model, const std::filesystem::path& path);
BaselineModel load_model(const std::filesystem::path& path);

/// Scores every pair: threshold models emit hard 0/1 scores, linear models
/// emit probabilities.
PairRun predict_run(const BaselineModel& model, const PairDataset& dataset);

/// Fits a threshold model on a dataset's own divergences (the usual way the
/// exploitability probe is run).
ThresholdModel fit_threshold(const PairDataset& train);

struct BiasTransferResult {
  LinearModel original_model;     // trained on the original training set
  LinearModel adversarial_model;  // trained on the debiased training set
  EvalReport orig_on_orig, orig_on_adv;
  EvalReport adv_on_orig, adv_on_adv;
  DegradationReport original_degradation;     // orig-trained: orig -> adv test
  DegradationReport adversarial_degradation;  // adv-trained: orig -> adv test
};

/// Trains one model per training split and evaluates both on both test
/// splits, the four-cell experiment showing whether debiased training data
/// removes the length exploit.
BiasTransferResult evaluate_bias_transfer(const PairDataset& train_orig,
                                          const PairDataset& train_adv,
                                          const PairDataset& test_orig,
                                          const PairDataset& test_adv,
                                          std::span<const std::string> features,
                                          const LinearTrainConfig& config);

}  // namespace lenbias

#endif  // LENBIAS_BASELINE_HPP
