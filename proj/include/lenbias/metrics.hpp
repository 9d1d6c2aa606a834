#ifndef LENBIAS_METRICS_HPP
#define LENBIAS_METRICS_HPP

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lenbias/corpus.hpp"
#include "lenbias/stratify.hpp"

namespace lenbias {

struct ConfusionCounts {
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;
  long total() const { return tp + fp + tn + fn; }
};

/// gold and predicted are parallel 0/1 sequences.
ConfusionCounts count_confusion(std::span<const int> gold,
                                std::span<const int> predicted);

double accuracy(const ConfusionCounts& c);
/// Mean of positive and negative recall. Throws ConfigError ("undefined
/// recall") when either gold class is absent.
double balanced_accuracy(const ConfusionCounts& c);
/// Mean of positive-class and negative-class F1, with 0/0 F1 taken as 0.
double f1_macro(const ConfusionCounts& c);
/// F1 over per-class decisions pooled across both classes; equals accuracy
/// for single-label binary data.
double f1_micro(const ConfusionCounts& c);

// ---------------------------------------------------------------------------
// Ranking metrics.
// ---------------------------------------------------------------------------

struct RankedDoc {
  std::string doc_id;
  double score = 0.0;
  int rel = 0;
};

/// Average precision of one query: docs are ranked by score descending with
/// doc_id ascending as tiebreak, then AP = mean over relevant positions of
/// precision at that position. Returns nullopt when nothing is relevant.
std::optional<double> average_precision(std::vector<RankedDoc> docs);

/// Reciprocal rank of the first relevant doc under the same ordering;
/// nullopt when nothing is relevant.
std::optional<double> reciprocal_rank(std::vector<RankedDoc> docs);

// ---------------------------------------------------------------------------
// Prediction runs and reports.
// ---------------------------------------------------------------------------

/// Pair run file: TSV `id <TAB> score`. Hard labels are score >= threshold.
struct PairPrediction {
  std::string id;
  double score = 0.0;
};
using PairRun = std::vector<PairPrediction>;

/// IR run file: TSV `query_id <TAB> doc_id <TAB> score`.
struct IRPrediction {
  std::string query_id;
  std::string doc_id;
  double score = 0.0;
};
using IRRun = std::vector<IRPrediction>;

PairRun load_pair_run(const std::filesystem::path& path);
void write_pair_run(const PairRun& run, const std::filesystem::path& path);
IRRun load_ir_run(const std::filesystem::path& path);
void write_ir_run(const IRRun& run, const std::filesystem::path& path);

struct EvalReport {
  std::string dataset_name;
  std::string run_name;
  /// Insertion-ordered metric values, all in [0, 1].
  std::vector<std::pair<std::string, double>> metrics;
  /// Per-category recall when an assignment was supplied; entries are empty
  /// for categories with no gold positives.
  std::vector<std::optional<double>> recall_per_category;
  ConfusionCounts confusion;  // pair runs only

  /// Value of a named metric; throws ConfigError if absent.
  double metric(std::string_view name) const;
  bool has_metric(std::string_view name) const;
};

/// Scores a pair run against gold labels. The run must cover exactly the
/// dataset's ids: missing or unknown ids raise IntegrityError naming the
/// first few offenders. With a non-null assignment the report gains the
/// per-category recall sequence.
EvalReport evaluate_pair_run(const PairDataset& dataset, const PairRun& run,
                             double threshold = 0.5,
                             const CategoryAssignment* assignment = nullptr);

/// Scores an IR run: MAP and MRR over queries with at least one relevant
/// doc (others are skipped). Every (query, doc) in the dataset must be
/// scored; a known query with no scored docs raises IntegrityError.
EvalReport evaluate_ir_run(const IRDataset& dataset, const IRRun& run);

/// Recall over gold positives of each category. Gold positives missing from
/// the assignment raise IntegrityError.
std::vector<std::optional<double>> recall_by_category(
    const PairDataset& dataset, const PairRun& run, double threshold,
    const CategoryAssignment& assignment);

struct DegradationEntry {
  std::string metric;
  double original = 0.0;
  double adversarial = 0.0;
  double delta = 0.0;  // adversarial - original
  bool drop = false;   // delta < 0
};

struct DegradationReport {
  std::string original_run;
  std::string adversarial_run;
  std::vector<DegradationEntry> entries;
  const DegradationEntry& entry(std::string_view metric) const;
};

/// Pairs two reports metric-by-metric. Throws ConfigError when the metric
/// sets differ.
DegradationReport degradation(const EvalReport& original,
                              const EvalReport& adversarial);

}  // namespace lenbias

#endif  // LENBIAS_METRICS_HPP
