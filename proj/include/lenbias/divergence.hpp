#ifndef LENBIAS_DIVERGENCE_HPP
#define LENBIAS_DIVERGENCE_HPP

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lenbias/corpus.hpp"

namespace lenbias {

/// Relative length divergence value. Either a finite non-negative double or
/// the sentinel produced when a zero length (or zero mean) makes the ratio
/// undefined. The sentinel compares strictly greater than every finite
/// score, so sorting ascending puts all sentinel examples last.
class DivergenceScore {
 public:
  static DivergenceScore finite(double v);
  static DivergenceScore sentinel();

  bool is_sentinel() const { return sentinel_; }
  /// Finite value; must not be called on a sentinel.
  double value() const;

  /// Total order: finite by value, sentinel above everything finite,
  /// sentinel == sentinel.
  friend bool operator<(const DivergenceScore& x, const DivergenceScore& y);
  friend bool operator==(const DivergenceScore& x, const DivergenceScore& y);
  friend bool operator!=(const DivergenceScore& x, const DivergenceScore& y);
  friend bool operator<=(const DivergenceScore& x, const DivergenceScore& y);
  friend bool operator>(const DivergenceScore& x, const DivergenceScore& y);
  friend bool operator>=(const DivergenceScore& x, const DivergenceScore& y);

  /// Shortest round-trip decimal for finite scores, the literal string
  /// "SENTINEL" otherwise.
  std::string to_string() const;
  /// Inverse of to_string. Throws ParseError on anything else (including
  /// negative or non-finite numerics).
  static DivergenceScore parse(std::string_view text);

 private:
  DivergenceScore(double v, bool s) : value_(v), sentinel_(s) {}
  double value_ = 0.0;
  bool sentinel_ = false;
};

/// |la - lb| / min(la, lb); sentinel if min(la, lb) == 0.
/// Lengths must be non-negative.
DivergenceScore pairwise_divergence(long len_a, long len_b);

/// Mean pairwise divergence between one query and a set of docs.
/// Empty doc set -> nullopt (undefined). Any sentinel term, or a zero
/// query/doc length, makes the whole mean a sentinel.
std::optional<DivergenceScore> mean_group_divergence(
    long query_len, std::span<const long> doc_lens);

/// Listwise divergence of a query group: |m+ - m-| / min(m+, m-) where m+
/// and m- are the mean divergences against relevant and non-relevant docs.
/// Sentinel when either mean is undefined (no docs on that side), either
/// mean is itself a sentinel, or min(m+, m-) == 0.
DivergenceScore listwise_divergence(const QueryGroup& group);

struct ScoredExample {
  std::string id;  // pair id, or query id for listwise scoring
  DivergenceScore score;
};

std::vector<ScoredExample> score_dataset(const PairDataset& dataset);
std::vector<ScoredExample> score_dataset(const IRDataset& dataset);

}  // namespace lenbias

#endif  // LENBIAS_DIVERGENCE_HPP
