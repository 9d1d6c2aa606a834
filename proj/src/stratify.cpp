#include "lenbias/stratify.hpp"

#include <algorithm>

#include "lenbias/error.hpp"

namespace lenbias {

int CategoryAssignment::category_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end())
    throw IntegrityError("id '" + id + "' has no category assignment");
  return it->second;
}

bool CategoryAssignment::contains(const std::string& id) const {
  return index_.count(id) != 0;
}

namespace {

void sort_by_score_then_id(std::vector<ScoredExample>& scored) {
  std::sort(scored.begin(), scored.end(),
            [](const ScoredExample& x, const ScoredExample& y) {
              if (x.score != y.score) return x.score < y.score;
              return x.id < y.id;
            });
}

}  // namespace

CategoryAssignment stratify(std::vector<ScoredExample> scored, int k) {
  const long n = static_cast<long>(scored.size());
  if (k < 1 || k > n)
    throw ConfigError("k must satisfy 1 <= k <= n (k=" + std::to_string(k) +
                      ", n=" + std::to_string(n) + ")");
  sort_by_score_then_id(scored);
  for (long i = 1; i < n; ++i)
    if (scored[i].id == scored[i - 1].id)
      throw IntegrityError("duplicate id '" + scored[i].id +
                           "' in scored examples");

  CategoryAssignment out;
  out.k = k;
  out.members.resize(k);
  const long base = n / k;
  const long remainder = n % k;
  long cursor = 0;
  for (int c = 0; c < k; ++c) {
    long size = base + (c < remainder ? 1 : 0);
    out.members[c].reserve(size);
    for (long i = 0; i < size; ++i, ++cursor) {
      out.members[c].push_back(scored[cursor].id);
      out.index_.emplace(scored[cursor].id, c);
    }
    if (c < k - 1) out.boundaries.push_back(scored[cursor - 1].score);
  }
  return out;
}

CategoryAssignment assign_with_boundaries(
    const std::vector<ScoredExample>& scored,
    const std::vector<DivergenceScore>& boundaries) {
  if (boundaries.empty())
    throw ConfigError("need at least one category boundary");
  for (std::size_t i = 1; i < boundaries.size(); ++i)
    if (boundaries[i] < boundaries[i - 1])
      throw ConfigError("category boundaries must be non-decreasing");
  const int k = static_cast<int>(boundaries.size()) + 1;

  std::vector<ScoredExample> sorted = scored;
  sort_by_score_then_id(sorted);
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i].id == sorted[i - 1].id)
      throw IntegrityError("duplicate id '" + sorted[i].id +
                           "' in scored examples");

  CategoryAssignment out;
  out.k = k;
  out.boundaries = boundaries;
  out.members.resize(k);
  for (const auto& ex : sorted) {
    int c = k - 1;
    for (int b = 0; b < k - 1; ++b) {
      if (ex.score <= boundaries[b]) {
        c = b;
        break;
      }
    }
    out.members[c].push_back(ex.id);
    out.index_.emplace(ex.id, c);
  }
  return out;
}

double CategoryLabelCounts::pos_ratio() const {
  long n = total();
  if (n == 0) return -1.0;
  return static_cast<double>(positives) / static_cast<double>(n);
}

namespace {

template <typename LabelOf>
std::vector<CategoryLabelCounts> tally(const CategoryAssignment& assignment,
                                       LabelOf&& label_of) {
  std::vector<CategoryLabelCounts> counts(assignment.k);
  for (int c = 0; c < assignment.k; ++c)
    for (const auto& id : assignment.members[c]) {
      if (label_of(id))
        ++counts[c].positives;
      else
        ++counts[c].negatives;
    }
  return counts;
}

}  // namespace

AuditReport audit_pair_dataset(const PairDataset& dataset, int k) {
  auto scored = score_dataset(dataset);
  AuditReport report;
  report.dataset_name = dataset.name;
  report.k = k;
  for (const auto& s : scored)
    if (s.score.is_sentinel()) ++report.sentinel_count;

  auto assignment = stratify(scored, k);
  report.boundaries = assignment.boundaries;

  std::unordered_map<std::string, int> label;
  label.reserve(dataset.examples.size());
  for (const auto& ex : dataset.examples) label.emplace(ex.id, ex.label);
  report.per_category =
      tally(assignment, [&](const std::string& id) { return label.at(id); });
  for (const auto& c : report.per_category) {
    report.overall.positives += c.positives;
    report.overall.negatives += c.negatives;
  }
  return report;
}

AuditReport audit_ir_dataset(const IRDataset& dataset, int k) {
  auto scored = score_dataset(dataset);
  AuditReport report;
  report.dataset_name = dataset.name;
  report.k = k;
  for (const auto& s : scored)
    if (s.score.is_sentinel()) ++report.sentinel_count;

  auto assignment = stratify(scored, k);
  report.boundaries = assignment.boundaries;
  report.groups_per_category.resize(k);

  std::unordered_map<std::string, const QueryGroup*> by_id;
  for (const auto& g : dataset.groups) by_id.emplace(g.query_id, &g);
  report.per_category.resize(k);
  for (int c = 0; c < k; ++c) {
    report.groups_per_category[c] =
        static_cast<long>(assignment.members[c].size());
    for (const auto& qid : assignment.members[c]) {
      for (const auto& doc : by_id.at(qid)->docs) {
        if (doc.rel)
          ++report.per_category[c].positives;
        else
          ++report.per_category[c].negatives;
      }
    }
  }
  for (const auto& c : report.per_category) {
    report.overall.positives += c.positives;
    report.overall.negatives += c.negatives;
  }
  return report;
}

}  // namespace lenbias
