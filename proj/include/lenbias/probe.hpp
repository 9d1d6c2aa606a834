#ifndef LENBIAS_PROBE_HPP
#define LENBIAS_PROBE_HPP

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lenbias/corpus.hpp"

namespace lenbias {

/// One exported text representation plus the length being probed for.
struct RepresentationRecord {
  std::string id;
  Eigen::VectorXd vector;
  long length = 0;
};

/// JSONL with keys `id`, `vector`, and either `length` or `text` (length
/// computed via count_tokens). All vectors must share one dimension;
/// mismatches raise IntegrityError.
std::vector<RepresentationRecord> load_representations(
    const std::filesystem::path& path);
void write_representations(std::span<const RepresentationRecord> records,
                           const std::filesystem::path& path);

/// Equal-frequency sextile bins over training lengths. Five edges; a length
/// belongs to the first class whose edge is >= it, or class 5 above the
/// last edge.
struct LengthBins {
  std::vector<long> edges;  // strictly increasing, size 5
  int classify(long length) const;
};

/// Throws ConfigError when fewer than 6 distinct lengths are present.
LengthBins bin_lengths(std::span<const long> lengths);

/// Elementwise column maximum; the pooling used when callers export
/// per-token states. Throws ConfigError on an empty matrix.
Eigen::VectorXd max_pool_rows(const Eigen::MatrixXd& rows);

struct ProbeConfig {
  long hidden = 64;
  double learning_rate = 0.2;
  long epochs = 40;
  long batch_size = 32;
};

/// One-hidden-layer MLP over representations: sigmoid hidden layer, 6-way
/// softmax output predicting the length bin.
struct ProbeModel {
  LengthBins bins;
  Eigen::MatrixXd w1;  // hidden x d
  Eigen::VectorXd b1;  // hidden
  Eigen::MatrixXd w2;  // 6 x hidden
  Eigen::VectorXd b2;  // 6
  ProbeConfig config;

  Eigen::VectorXd predict_proba(const Eigen::VectorXd& x) const;
  /// Argmax class, lowest index on ties.
  int predict(const Eigen::VectorXd& x) const;
};

/// Mean softmax cross-entropy of the model on (X: n x d, classes) with
/// analytic gradients for every parameter block. Exposed for gradient
/// verification against finite differences.
struct ProbeGradients {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
};
double probe_loss_grad(const ProbeModel& model, const Eigen::MatrixXd& X,
                       std::span<const int> classes, ProbeGradients* grads);

/// Bins lengths, initializes weights from a seeded uniform range, and runs
/// minibatch gradient descent with a seeded shuffle each epoch. Fully
/// deterministic given (records order, config, seed). Throws ConfigError
/// when binning fails and TrainingError on non-finite loss.
ProbeModel train_probe(std::span<const RepresentationRecord> records,
                       const ProbeConfig& config, std::uint64_t seed);

struct ProbeReport {
  double accuracy = 0.0;
  /// Accuracy per class; empty for classes absent from the gold data.
  std::vector<std::optional<double>> per_class_accuracy;
  std::vector<long> bin_edges;
};

/// Throws ConfigError when record dimension does not match the model.
ProbeReport eval_probe(const ProbeModel& model,
                       std::span<const RepresentationRecord> records);

void save_probe(const ProbeModel& model, const std::filesystem::path& path);
ProbeModel load_probe(const std::filesystem::path& path);

}  // namespace lenbias

#endif  // LENBIAS_PROBE_HPP
