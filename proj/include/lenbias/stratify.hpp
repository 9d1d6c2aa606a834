#ifndef LENBIAS_STRATIFY_HPP
#define LENBIAS_STRATIFY_HPP

#include <string>
#include <unordered_map>
#include <vector>

#include "lenbias/corpus.hpp"
#include "lenbias/divergence.hpp"

namespace lenbias {

/// Quantile stratification of scored examples into k categories.
/// Category 0 holds the lowest-divergence examples; sentinel scores sort
/// above everything finite and therefore always land in the last category.
struct CategoryAssignment {
  int k = 0;
  /// boundaries[c] = highest score in category c, for c in [0, k-1).
  /// An example belongs to the first category whose boundary is >= its
  /// score; anything above the last boundary is in category k-1.
  std::vector<DivergenceScore> boundaries;
  /// Ids per category, in ascending (score, id) order within each.
  std::vector<std::vector<std::string>> members;

  int category_of(const std::string& id) const;
  bool contains(const std::string& id) const;

 private:
  friend CategoryAssignment stratify(std::vector<ScoredExample> scored, int k);
  friend CategoryAssignment assign_with_boundaries(
      const std::vector<ScoredExample>& scored,
      const std::vector<DivergenceScore>& boundaries);
  std::unordered_map<std::string, int> index_;
};

/// Sorts ascending by (score, id) and cuts into k contiguous blocks whose
/// sizes differ by at most one, larger blocks first: n = qk + r gives r
/// blocks of size q+1 followed by k-r of size q. Requires 1 <= k <= n;
/// throws ConfigError otherwise. Equal scores may straddle a boundary; the
/// id tiebreak keeps the cut deterministic.
CategoryAssignment stratify(std::vector<ScoredExample> scored, int k);

/// Buckets examples into the categories described by previously computed
/// boundaries instead of re-cutting quantiles. Used when applying a stored
/// split to new data.
CategoryAssignment assign_with_boundaries(
    const std::vector<ScoredExample>& scored,
    const std::vector<DivergenceScore>& boundaries);

struct CategoryLabelCounts {
  long positives = 0;
  long negatives = 0;
  long total() const { return positives + negatives; }
  /// positives / total; -1 for an empty category.
  double pos_ratio() const;
};

struct AuditReport {
  std::string dataset_name;
  int k = 0;
  std::vector<DivergenceScore> boundaries;
  std::vector<CategoryLabelCounts> per_category;  // pairwise datasets
  std::vector<long> groups_per_category;          // listwise datasets
  CategoryLabelCounts overall;
  long sentinel_count = 0;
};

AuditReport audit_pair_dataset(const PairDataset& dataset, int k);
AuditReport audit_ir_dataset(const IRDataset& dataset, int k);

}  // namespace lenbias

#endif  // LENBIAS_STRATIFY_HPP
