#include "lenbias/manifest.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"
#include "lenbias/detail/util.hpp"
#include "lenbias/error.hpp"

namespace lenbias {

namespace {

nlohmann::ordered_json boundary_to_json(const DivergenceScore& b) {
  if (b.is_sentinel()) return "SENTINEL";
  return b.value();
}

DivergenceScore boundary_from_json(const nlohmann::json& j) {
  if (j.is_string()) return DivergenceScore::parse(j.get<std::string>());
  if (j.is_number()) return DivergenceScore::finite(j.get<double>());
  throw ParseError("manifest boundary must be a number or \"SENTINEL\"");
}

}  // namespace

void write_manifest(const SplitManifest& manifest,
                    const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["source_dataset"] = manifest.source_dataset;
  j["mode"] = manifest.mode;
  j["seed"] = manifest.seed;
  if (manifest.target_pos_ratio)
    j["target_pos_ratio"] = *manifest.target_pos_ratio;
  else
    j["target_pos_ratio"] = nullptr;
  auto& bounds = j["category_boundaries"] = nlohmann::ordered_json::array();
  for (const auto& b : manifest.category_boundaries)
    bounds.push_back(boundary_to_json(b));
  auto sorted_ids = manifest.retained_ids;
  std::sort(sorted_ids.begin(), sorted_ids.end());
  j["retained_ids"] = sorted_ids;
  auto& removed = j["removed_counts_per_category"] =
      nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < manifest.removed_per_category.size(); ++c) {
    nlohmann::ordered_json entry;
    entry["category"] = "CAT" + std::to_string(c + 1);
    entry["positives_removed"] = manifest.removed_per_category[c].positives;
    entry["negatives_removed"] = manifest.removed_per_category[c].negatives;
    removed.push_back(std::move(entry));
  }
  auto out = detail::open_output(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

SplitManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError(path.string() + ": expected an object");
  for (const char* key :
       {"source_dataset", "mode", "seed", "target_pos_ratio",
        "category_boundaries", "retained_ids", "removed_counts_per_category"})
    if (!j.contains(key))
      throw ParseError(path.string() + ": missing key '" + std::string(key) +
                       "'");

  SplitManifest m;
  try {
    m.source_dataset = j["source_dataset"].get<std::string>();
    m.mode = j["mode"].get<std::string>();
    m.seed = j["seed"].get<std::uint64_t>();
    if (!j["target_pos_ratio"].is_null())
      m.target_pos_ratio = j["target_pos_ratio"].get<double>();
    for (const auto& b : j["category_boundaries"])
      m.category_boundaries.push_back(boundary_from_json(b));
    m.retained_ids = j["retained_ids"].get<std::vector<std::string>>();
    for (const auto& entry : j["removed_counts_per_category"])
      m.removed_per_category.push_back(
          {entry.at("positives_removed").get<long>(),
           entry.at("negatives_removed").get<long>()});
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }

  if (m.mode != "pair" && m.mode != "ir")
    throw IntegrityError(path.string() + ": mode must be 'pair' or 'ir'");
  if (m.target_pos_ratio &&
      !(*m.target_pos_ratio > 0.0 && *m.target_pos_ratio < 1.0))
    throw IntegrityError(path.string() + ": target_pos_ratio outside (0, 1)");
  if (m.mode == "pair" && !m.target_pos_ratio)
    throw IntegrityError(path.string() + ": pair manifests need a target ratio");
  for (const auto& r : m.removed_per_category)
    if (r.positives < 0 || r.negatives < 0)
      throw IntegrityError(path.string() + ": negative removal count");
  std::sort(m.retained_ids.begin(), m.retained_ids.end());
  for (std::size_t i = 1; i < m.retained_ids.size(); ++i)
    if (m.retained_ids[i] == m.retained_ids[i - 1])
      throw IntegrityError(path.string() + ": duplicate retained id '" +
                           m.retained_ids[i] + "'");
  return m;
}

}  // namespace lenbias
