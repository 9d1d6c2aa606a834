#include "lenbias/divergence.hpp"

#include <cmath>
#include <cstdlib>

#include "lenbias/detail/util.hpp"
#include "lenbias/error.hpp"

namespace lenbias {

DivergenceScore DivergenceScore::finite(double v) {
  if (!std::isfinite(v) || v < 0.0)
    throw ConfigError("divergence value must be finite and non-negative");
  return DivergenceScore(v, false);
}

DivergenceScore DivergenceScore::sentinel() { return DivergenceScore(0.0, true); }

double DivergenceScore::value() const {
  if (sentinel_)
    throw std::logic_error("sentinel divergence has no finite value");
  return value_;
}

bool operator<(const DivergenceScore& x, const DivergenceScore& y) {
  if (x.sentinel_) return false;          // sentinel is maximal
  if (y.sentinel_) return true;
  return x.value_ < y.value_;
}

bool operator==(const DivergenceScore& x, const DivergenceScore& y) {
  if (x.sentinel_ || y.sentinel_) return x.sentinel_ == y.sentinel_;
  return x.value_ == y.value_;
}

bool operator!=(const DivergenceScore& x, const DivergenceScore& y) {
  return !(x == y);
}
bool operator<=(const DivergenceScore& x, const DivergenceScore& y) {
  return x < y || x == y;
}
bool operator>(const DivergenceScore& x, const DivergenceScore& y) {
  return y < x;
}
bool operator>=(const DivergenceScore& x, const DivergenceScore& y) {
  return y <= x;
}

std::string DivergenceScore::to_string() const {
  return sentinel_ ? "SENTINEL" : detail::format_double(value_);
}

DivergenceScore DivergenceScore::parse(std::string_view text) {
  if (text == "SENTINEL") return sentinel();
  double v = detail::parse_double_strict(text, "divergence");
  if (!std::isfinite(v) || v < 0.0)
    throw ParseError("divergence must be non-negative and finite, got '" +
                     std::string(text) + "'");
  return finite(v);
}

DivergenceScore pairwise_divergence(long len_a, long len_b) {
  if (len_a < 0 || len_b < 0)
    throw ConfigError("text lengths must be non-negative");
  long shorter = std::min(len_a, len_b);
  if (shorter == 0) return DivergenceScore::sentinel();
  return DivergenceScore::finite(static_cast<double>(std::labs(len_a - len_b)) /
                                 static_cast<double>(shorter));
}

std::optional<DivergenceScore> mean_group_divergence(
    long query_len, std::span<const long> doc_lens) {
  if (doc_lens.empty()) return std::nullopt;
  double sum = 0.0;
  for (long dl : doc_lens) {
    DivergenceScore d = pairwise_divergence(query_len, dl);
    if (d.is_sentinel()) return DivergenceScore::sentinel();
    sum += d.value();
  }
  return DivergenceScore::finite(sum / static_cast<double>(doc_lens.size()));
}

DivergenceScore listwise_divergence(const QueryGroup& group) {
  std::vector<long> pos_lens, neg_lens;
  for (const auto& doc : group.docs)
    (doc.rel ? pos_lens : neg_lens).push_back(doc.text.token_count);
  auto m_pos = mean_group_divergence(group.query.token_count, pos_lens);
  auto m_neg = mean_group_divergence(group.query.token_count, neg_lens);
  if (!m_pos || !m_neg) return DivergenceScore::sentinel();
  if (m_pos->is_sentinel() || m_neg->is_sentinel())
    return DivergenceScore::sentinel();
  double lo = std::min(m_pos->value(), m_neg->value());
  double hi = std::max(m_pos->value(), m_neg->value());
  if (lo == 0.0) return DivergenceScore::sentinel();
  return DivergenceScore::finite((hi - lo) / lo);
}

std::vector<ScoredExample> score_dataset(const PairDataset& dataset) {
  std::vector<ScoredExample> out;
  out.reserve(dataset.examples.size());
  for (const auto& ex : dataset.examples)
    out.push_back(
        {ex.id, pairwise_divergence(ex.a.token_count, ex.b.token_count)});
  return out;
}

std::vector<ScoredExample> score_dataset(const IRDataset& dataset) {
  std::vector<ScoredExample> out;
  out.reserve(dataset.groups.size());
  for (const auto& g : dataset.groups)
    out.push_back({g.query_id, listwise_divergence(g)});
  return out;
}

}  // namespace lenbias
