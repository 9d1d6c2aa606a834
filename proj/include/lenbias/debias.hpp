#ifndef LENBIAS_DEBIAS_HPP
#define LENBIAS_DEBIAS_HPP

#include <cstdint>
#include <optional>

#include "lenbias/corpus.hpp"
#include "lenbias/manifest.hpp"
#include "lenbias/stratify.hpp"

namespace lenbias {

/// Builds an adversarial pair split: within every divergence category the
/// majority label is down-sampled until the category pos-ratio matches the
/// overall ratio of the input (or an explicit target). Selection of removed
/// examples is a deterministic function of (seed, id): survivors are the
/// prefix of ids ordered by keyed hash, so the same call always removes the
/// same examples.
SplitManifest build_pair_split(const PairDataset& dataset,
                               const CategoryAssignment& categories,
                               std::uint64_t seed,
                               std::optional<double> target_pos_ratio = {});

/// Builds an adversarial listwise split by discarding every query group in
/// the top divergence category whole. Groups with sentinel divergence sort
/// into that category and are always removed.
SplitManifest build_ir_split(const IRDataset& dataset,
                             const CategoryAssignment& categories,
                             std::uint64_t seed);

/// Materializes the subset a manifest describes. Throws IntegrityError if
/// any retained id is missing from the dataset or the manifest mode does
/// not match the dataset kind.
PairDataset apply_pair_split(const PairDataset& dataset,
                             const SplitManifest& manifest);
IRDataset apply_ir_split(const IRDataset& dataset,
                         const SplitManifest& manifest);

}  // namespace lenbias

#endif  // LENBIAS_DEBIAS_HPP
