#ifndef LENBIAS_MANIFEST_HPP
#define LENBIAS_MANIFEST_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lenbias/divergence.hpp"

namespace lenbias {

/// Record of one debiasing split: which examples were kept and why.
/// Applying the manifest to the source dataset must reproduce the split
/// exactly; apply_* functions verify ids and fail loudly on mismatch.
struct SplitManifest {
  std::string source_dataset;
  std::string mode;  // "pair" or "ir"
  std::uint64_t seed = 0;
  /// Pairwise splits record the pos-ratio the sampler aimed for; listwise
  /// splits have no ratio target and leave this empty.
  std::optional<double> target_pos_ratio;
  std::vector<DivergenceScore> category_boundaries;
  /// Retained pair ids, or retained query ids for listwise splits.
  /// Sorted lexicographically.
  std::vector<std::string> retained_ids;
  struct RemovedCounts {
    long positives = 0;
    long negatives = 0;
  };
  std::vector<RemovedCounts> removed_per_category;
};

void write_manifest(const SplitManifest& manifest,
                    const std::filesystem::path& path);
SplitManifest read_manifest(const std::filesystem::path& path);

}  // namespace lenbias

#endif  // LENBIAS_MANIFEST_HPP
