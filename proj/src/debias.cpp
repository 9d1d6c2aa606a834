#include "lenbias/debias.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "lenbias/detail/util.hpp"
#include "lenbias/error.hpp"
#include "lenbias/rng.hpp"

namespace lenbias {

namespace {

void check_coverage(const CategoryAssignment& categories,
                    const std::vector<std::string>& dataset_ids) {
  std::size_t assigned = 0;
  for (const auto& members : categories.members) assigned += members.size();
  if (assigned != dataset_ids.size())
    throw IntegrityError("category assignment covers " +
                         std::to_string(assigned) + " ids but the dataset has " +
                         std::to_string(dataset_ids.size()));
  for (const auto& id : dataset_ids)
    if (!categories.contains(id))
      throw IntegrityError("dataset id '" + id +
                           "' missing from the category assignment");
}

/// Survivors are the prefix of ids ordered by (keyed hash, id): a seeded
/// uniform subset that any reimplementation can reproduce from the manifest
/// alone.
std::vector<std::string> hash_prefix(const std::vector<std::string>& ids,
                                     std::uint64_t seed, long keep) {
  std::vector<std::string> order = ids;
  std::sort(order.begin(), order.end(),
            [seed](const std::string& x, const std::string& y) {
              auto hx = keyed_hash(seed, x);
              auto hy = keyed_hash(seed, y);
              if (hx != hy) return hx < hy;
              return x < y;
            });
  order.resize(keep);
  return order;
}

}  // namespace

SplitManifest build_pair_split(const PairDataset& dataset,
                               const CategoryAssignment& categories,
                               std::uint64_t seed,
                               std::optional<double> target_pos_ratio) {
  std::unordered_map<std::string, int> label;
  std::vector<std::string> ids;
  ids.reserve(dataset.examples.size());
  long pos_total = 0;
  for (const auto& ex : dataset.examples) {
    label.emplace(ex.id, ex.label);
    ids.push_back(ex.id);
    pos_total += ex.label;
  }
  check_coverage(categories, ids);

  const long n = static_cast<long>(dataset.examples.size());
  double t;
  if (target_pos_ratio) {
    t = *target_pos_ratio;
    if (!(t > 0.0 && t < 1.0))
      throw ConfigError("target pos-ratio must lie strictly inside (0, 1)");
  } else {
    if (pos_total == 0 || pos_total == n)
      throw ConfigError(
          "dataset has a single label; the overall pos-ratio target is "
          "degenerate");
    t = static_cast<double>(pos_total) / static_cast<double>(n);
  }

  SplitManifest manifest;
  manifest.source_dataset = dataset.name;
  manifest.mode = "pair";
  manifest.seed = seed;
  manifest.target_pos_ratio = t;
  manifest.category_boundaries = categories.boundaries;
  manifest.removed_per_category.resize(categories.k);

  for (int c = 0; c < categories.k; ++c) {
    if (categories.members[c].empty()) continue;
    std::vector<std::string> pos_ids, neg_ids;
    for (const auto& id : categories.members[c])
      (label.at(id) ? pos_ids : neg_ids).push_back(id);
    const long pos = static_cast<long>(pos_ids.size());
    const long neg = static_cast<long>(neg_ids.size());
    const double ratio =
        static_cast<double>(pos) / static_cast<double>(pos + neg);

    std::vector<std::string> kept_pos = pos_ids, kept_neg = neg_ids;
    if (ratio > t) {
      long keep = std::min(pos, detail::round_half_away(t / (1.0 - t) *
                                                        static_cast<double>(neg)));
      kept_pos = hash_prefix(pos_ids, seed, keep);
    } else {
      long keep = std::min(neg, detail::round_half_away((1.0 - t) / t *
                                                        static_cast<double>(pos)));
      kept_neg = hash_prefix(neg_ids, seed, keep);
    }
    manifest.removed_per_category[c].positives =
        pos - static_cast<long>(kept_pos.size());
    manifest.removed_per_category[c].negatives =
        neg - static_cast<long>(kept_neg.size());
    manifest.retained_ids.insert(manifest.retained_ids.end(), kept_pos.begin(),
                                 kept_pos.end());
    manifest.retained_ids.insert(manifest.retained_ids.end(), kept_neg.begin(),
                                 kept_neg.end());
  }
  std::sort(manifest.retained_ids.begin(), manifest.retained_ids.end());
  return manifest;
}

SplitManifest build_ir_split(const IRDataset& dataset,
                             const CategoryAssignment& categories,
                             std::uint64_t seed) {
  std::vector<std::string> ids;
  ids.reserve(dataset.groups.size());
  for (const auto& g : dataset.groups) ids.push_back(g.query_id);
  check_coverage(categories, ids);

  std::unordered_map<std::string, const QueryGroup*> by_id;
  for (const auto& g : dataset.groups) by_id.emplace(g.query_id, &g);

  SplitManifest manifest;
  manifest.source_dataset = dataset.name;
  manifest.mode = "ir";
  manifest.seed = seed;
  manifest.category_boundaries = categories.boundaries;
  manifest.removed_per_category.resize(categories.k);

  const int last = categories.k - 1;
  for (int c = 0; c < last; ++c)
    manifest.retained_ids.insert(manifest.retained_ids.end(),
                                 categories.members[c].begin(),
                                 categories.members[c].end());
  for (const auto& qid : categories.members[last])
    for (const auto& doc : by_id.at(qid)->docs) {
      if (doc.rel)
        ++manifest.removed_per_category[last].positives;
      else
        ++manifest.removed_per_category[last].negatives;
    }
  std::sort(manifest.retained_ids.begin(), manifest.retained_ids.end());
  return manifest;
}

namespace {

void check_mode(const SplitManifest& manifest, const std::string& expected) {
  if (manifest.mode != expected)
    throw IntegrityError("manifest mode is '" + manifest.mode +
                         "' but the dataset is " + expected + "wise");
}

void report_missing(std::vector<std::string> missing) {
  if (missing.empty()) return;
  std::string msg = "manifest retains ids absent from the dataset:";
  for (std::size_t i = 0; i < missing.size() && i < 10; ++i)
    msg += " " + missing[i];
  if (missing.size() > 10)
    msg += " (and " + std::to_string(missing.size() - 10) + " more)";
  throw IntegrityError(msg);
}

}  // namespace

PairDataset apply_pair_split(const PairDataset& dataset,
                             const SplitManifest& manifest) {
  check_mode(manifest, "pair");
  if (dataset.name != manifest.source_dataset)
    throw IntegrityError("manifest was built from '" + manifest.source_dataset +
                         "' but this dataset is '" + dataset.name + "'");
  std::unordered_set<std::string> keep(manifest.retained_ids.begin(),
                                       manifest.retained_ids.end());
  PairDataset out;
  out.name = dataset.name + ".adversarial";
  std::vector<std::string> missing;
  std::unordered_set<std::string> present;
  for (const auto& ex : dataset.examples) {
    present.insert(ex.id);
    if (keep.count(ex.id)) out.examples.push_back(ex);
  }
  for (const auto& id : manifest.retained_ids)
    if (!present.count(id)) missing.push_back(id);
  report_missing(std::move(missing));
  return out;
}

IRDataset apply_ir_split(const IRDataset& dataset,
                         const SplitManifest& manifest) {
  check_mode(manifest, "ir");
  if (dataset.name != manifest.source_dataset)
    throw IntegrityError("manifest was built from '" + manifest.source_dataset +
                         "' but this dataset is '" + dataset.name + "'");
  std::unordered_set<std::string> keep(manifest.retained_ids.begin(),
                                       manifest.retained_ids.end());
  IRDataset out;
  out.name = dataset.name + ".adversarial";
  std::vector<std::string> missing;
  std::unordered_set<std::string> present;
  for (const auto& g : dataset.groups) {
    present.insert(g.query_id);
    if (keep.count(g.query_id)) out.groups.push_back(g);
  }
  for (const auto& id : manifest.retained_ids)
    if (!present.count(id)) missing.push_back(id);
  report_missing(std::move(missing));
  return out;
}

}  // namespace lenbias
