#include "lenbias/corpus.hpp"

#include <algorithm>
#include <cstdint>
#include <random>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "json.hpp"
#include "lenbias/detail/util.hpp"
#include "lenbias/error.hpp"
#include "lenbias/rng.hpp"

namespace lenbias {

namespace {

bool is_unicode_space(char32_t c) {
  return (c >= 0x09 && c <= 0x0D) || c == 0x20 || c == 0x85 || c == 0xA0 ||
         c == 0x1680 || (c >= 0x2000 && c <= 0x200A) || c == 0x2028 ||
         c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000;
}

// Decodes one UTF-8 sequence starting at i, advancing i. A malformed
// sequence consumes exactly one byte and yields a non-space placeholder, so
// arbitrary binary never splits words and never swallows a following space.
char32_t next_codepoint(std::string_view s, std::size_t& i) {
  const auto byte = [&](std::size_t k) {
    return static_cast<unsigned char>(s[k]);
  };
  unsigned char b0 = byte(i);
  std::size_t need = 0;
  char32_t cp = 0;
  if (b0 < 0x80) {
    ++i;
    return b0;
  } else if ((b0 & 0xE0) == 0xC0) {
    need = 1;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    need = 2;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    need = 3;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0x110000 + b0;  // outside Unicode, never whitespace
  }
  for (std::size_t k = 1; k <= need; ++k) {
    if (i + k >= s.size() || (byte(i + k) & 0xC0) != 0x80) {
      ++i;
      return 0x110000 + b0;
    }
    cp = (cp << 6) | (byte(i + k) & 0x3F);
  }
  // Reject overlong encodings and out-of-range values the same way.
  static constexpr char32_t kMin[4] = {0, 0x80, 0x800, 0x10000};
  if (cp < kMin[need] || cp > 0x10FFFF) {
    ++i;
    return 0x110000 + b0;
  }
  i += need + 1;
  return cp;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  std::size_t word_start = std::string_view::npos;
  while (i < text.size()) {
    std::size_t at = i;
    char32_t cp = next_codepoint(text, i);
    if (is_unicode_space(cp)) {
      if (word_start != std::string_view::npos) {
        tokens.emplace_back(text.substr(word_start, at - word_start));
        word_start = std::string_view::npos;
      }
    } else if (word_start == std::string_view::npos) {
      word_start = at;
    }
  }
  if (word_start != std::string_view::npos)
    tokens.emplace_back(text.substr(word_start));
  return tokens;
}

int count_tokens(std::string_view text) {
  int count = 0;
  std::size_t i = 0;
  bool in_word = false;
  while (i < text.size()) {
    char32_t cp = next_codepoint(text, i);
    bool space = is_unicode_space(cp);
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

double jaccard_overlap(std::string_view a, std::string_view b) {
  auto ta = tokenize(a);
  auto tb = tokenize(b);
  std::unordered_set<std::string> sa(ta.begin(), ta.end());
  std::unordered_set<std::string> sb(tb.begin(), tb.end());
  if (sa.empty() && sb.empty()) return 1.0;
  long shared = 0;
  for (const auto& w : sa)
    if (sb.count(w)) ++shared;
  long unioned = static_cast<long>(sa.size() + sb.size()) - shared;
  return static_cast<double>(shared) / static_cast<double>(unioned);
}

TextRecord make_text(std::string raw) {
  TextRecord rec;
  rec.token_count = count_tokens(raw);
  rec.raw = std::move(raw);
  return rec;
}

PairFormat parse_pair_format(std::string_view name) {
  if (name == "tsv") return PairFormat::tsv;
  if (name == "jsonl") return PairFormat::jsonl;
  throw ConfigError("unknown pair format '" + std::string(name) +
                    "' (expected tsv or jsonl)");
}

namespace {

int parse_label_field(std::string_view text, const std::string& context) {
  if (text == "0") return 0;
  if (text == "1") return 1;
  throw ParseError(context + ": label must be 0 or 1, got '" +
                   std::string(text) + "'");
}

void check_new_id(std::unordered_set<std::string>& seen, const std::string& id,
                  const std::string& context) {
  if (id.empty()) throw ParseError(context + ": empty id");
  if (!seen.insert(id).second)
    throw IntegrityError(context + ": duplicate id '" + id + "'");
}

PairDataset load_pair_tsv(const std::filesystem::path& path) {
  PairDataset ds;
  ds.name = path.stem().string();
  std::unordered_set<std::string> seen;
  auto lines = detail::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::string context = path.filename().string() + ":" + std::to_string(i + 1);
    auto fields = detail::split_tab(lines[i]);
    if (fields.size() != 4)
      throw ParseError(context + ": expected 4 tab-separated fields, got " +
                       std::to_string(fields.size()));
    PairExample ex;
    ex.id = std::string(fields[0]);
    check_new_id(seen, ex.id, context);
    ex.a = make_text(std::string(fields[1]));
    ex.b = make_text(std::string(fields[2]));
    ex.label = parse_label_field(fields[3], context);
    ds.examples.push_back(std::move(ex));
  }
  if (ds.examples.empty())
    throw IntegrityError(path.string() + ": dataset is empty");
  return ds;
}

PairDataset load_pair_jsonl(const std::filesystem::path& path) {
  PairDataset ds;
  ds.name = path.stem().string();
  std::unordered_set<std::string> seen;
  auto lines = detail::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::string context = path.filename().string() + ":" + std::to_string(i + 1);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(context + ": " + e.what());
    }
    if (!j.is_object()) throw ParseError(context + ": expected a JSON object");
    for (const char* key : {"id", "text_a", "text_b", "label"})
      if (!j.contains(key))
        throw ParseError(context + ": missing key '" + std::string(key) + "'");
    if (!j["id"].is_string() || !j["text_a"].is_string() ||
        !j["text_b"].is_string())
      throw ParseError(context + ": id/text_a/text_b must be strings");
    if (!j["label"].is_number_integer())
      throw ParseError(context + ": label must be an integer");
    long label = j["label"].get<long>();
    if (label != 0 && label != 1)
      throw ParseError(context + ": label must be 0 or 1, got " +
                       std::to_string(label));
    PairExample ex;
    ex.id = j["id"].get<std::string>();
    check_new_id(seen, ex.id, context);
    ex.a = make_text(j["text_a"].get<std::string>());
    ex.b = make_text(j["text_b"].get<std::string>());
    ex.label = static_cast<int>(label);
    ds.examples.push_back(std::move(ex));
  }
  if (ds.examples.empty())
    throw IntegrityError(path.string() + ": dataset is empty");
  return ds;
}

void require_tsv_safe(const std::string& text, const std::string& context) {
  if (text.find_first_of("\t\n\r") != std::string::npos)
    throw IntegrityError(context +
                         ": text contains tab or newline and cannot be "
                         "written as TSV; use jsonl");
}

}  // namespace

PairDataset load_pair_dataset(const std::filesystem::path& path,
                              PairFormat format) {
  return format == PairFormat::tsv ? load_pair_tsv(path)
                                   : load_pair_jsonl(path);
}

void write_pair_dataset(const PairDataset& dataset,
                        const std::filesystem::path& path, PairFormat format) {
  auto out = detail::open_output(path);
  if (format == PairFormat::tsv) {
    for (const auto& ex : dataset.examples) {
      require_tsv_safe(ex.id, "id '" + ex.id + "'");
      require_tsv_safe(ex.a.raw, "example '" + ex.id + "'");
      require_tsv_safe(ex.b.raw, "example '" + ex.id + "'");
      out << ex.id << '\t' << ex.a.raw << '\t' << ex.b.raw << '\t' << ex.label
          << '\n';
    }
  } else {
    for (const auto& ex : dataset.examples) {
      nlohmann::ordered_json j;
      j["id"] = ex.id;
      j["text_a"] = ex.a.raw;
      j["text_b"] = ex.b.raw;
      j["label"] = ex.label;
      out << j.dump() << '\n';
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

namespace {

// Two-column TSV (id, text) keyed by the first column.
std::vector<std::pair<std::string, std::string>> load_two_col(
    const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::string>> rows;
  std::unordered_set<std::string> seen;
  auto lines = detail::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::string context = path.filename().string() + ":" + std::to_string(i + 1);
    auto fields = detail::split_tab(lines[i]);
    if (fields.size() != 2)
      throw ParseError(context + ": expected 2 tab-separated fields, got " +
                       std::to_string(fields.size()));
    std::string id(fields[0]);
    check_new_id(seen, id, context);
    rows.emplace_back(std::move(id), std::string(fields[1]));
  }
  return rows;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

}  // namespace

IRDataset load_ir_dataset(const std::filesystem::path& queries_path,
                          const std::filesystem::path& docs_path,
                          const std::filesystem::path& qrels_path) {
  auto query_rows = load_two_col(queries_path);
  auto doc_rows = load_two_col(docs_path);
  std::unordered_map<std::string, const std::string*> queries, docs;
  for (const auto& [id, text] : query_rows) queries.emplace(id, &text);
  for (const auto& [id, text] : doc_rows) docs.emplace(id, &text);

  IRDataset ds;
  ds.name = qrels_path.stem().string();
  std::unordered_map<std::string, std::size_t> group_index;
  std::unordered_set<std::string> seen_pairs;
  auto lines = detail::read_lines(qrels_path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::string context =
        qrels_path.filename().string() + ":" + std::to_string(i + 1);
    auto fields = split_ws(lines[i]);
    if (fields.size() != 4)
      throw ParseError(context +
                       ": expected 'query_id iter doc_id rel', got " +
                       std::to_string(fields.size()) + " fields");
    std::string qid(fields[0]);
    std::string did(fields[2]);
    long rel = detail::parse_long_strict(fields[3], context);
    auto qit = queries.find(qid);
    if (qit == queries.end())
      throw IntegrityError(context + ": unknown query id '" + qid + "'");
    if (!docs.count(did))
      throw IntegrityError(context + ": unknown doc id '" + did + "'");
    if (!seen_pairs.insert(qid + '\t' + did).second)
      throw IntegrityError(context + ": duplicate qrels entry " + qid + " / " +
                           did);
    auto [git, inserted] = group_index.emplace(qid, ds.groups.size());
    if (inserted) {
      QueryGroup g;
      g.query_id = qid;
      g.query = make_text(*qit->second);
      ds.groups.push_back(std::move(g));
    }
    ScoredDoc doc;
    doc.doc_id = did;
    doc.text = make_text(*docs.at(did));
    doc.rel = rel > 0 ? 1 : 0;
    ds.groups[git->second].docs.push_back(std::move(doc));
  }
  if (ds.groups.empty())
    throw IntegrityError(qrels_path.string() + ": no qrels entries");
  return ds;
}

void write_ir_dataset(const IRDataset& dataset,
                      const std::filesystem::path& queries_path,
                      const std::filesystem::path& docs_path,
                      const std::filesystem::path& qrels_path) {
  auto queries = detail::open_output(queries_path);
  auto docs = detail::open_output(docs_path);
  auto qrels = detail::open_output(qrels_path);
  std::unordered_map<std::string, std::string> doc_text;
  std::vector<const ScoredDoc*> doc_order;
  for (const auto& g : dataset.groups) {
    require_tsv_safe(g.query.raw, "query '" + g.query_id + "'");
    queries << g.query_id << '\t' << g.query.raw << '\n';
    for (const auto& d : g.docs) {
      auto [it, inserted] = doc_text.emplace(d.doc_id, d.text.raw);
      if (inserted)
        doc_order.push_back(&d);
      else if (it->second != d.text.raw)
        throw IntegrityError("doc id '" + d.doc_id +
                             "' appears with two different texts");
      qrels << g.query_id << " 0 " << d.doc_id << ' ' << d.rel << '\n';
    }
  }
  for (const ScoredDoc* d : doc_order) {
    require_tsv_safe(d->text.raw, "doc '" + d->doc_id + "'");
    docs << d->doc_id << '\t' << d->text.raw << '\n';
  }
  if (!queries || !docs || !qrels)
    throw IoError("failed writing listwise dataset files");
}

// ---------------------------------------------------------------------------
// Synthetic corpus generation.
// ---------------------------------------------------------------------------

namespace {

struct LengthChoice {
  int m = 0;        // shorter length
  long d_lo = 0;    // smallest feasible |la - lb|
  long d_hi = 0;    // largest feasible |la - lb|
};

// Integer deltas d with d/m inside [lo, hi): d in [ceil(lo*m), ceil(hi*m)-1].
std::vector<LengthChoice> feasible_lengths(const SynthCategorySpec& cat,
                                           int min_len, int max_len) {
  std::vector<LengthChoice> out;
  for (int m = min_len; m <= max_len; ++m) {
    long d_lo = static_cast<long>(std::ceil(cat.div_lo * m));
    if (static_cast<double>(d_lo) / m < cat.div_lo) ++d_lo;  // guard FP dust
    long d_hi = static_cast<long>(std::ceil(cat.div_hi * m)) - 1;
    while (d_hi >= 0 && static_cast<double>(d_hi) / m >= cat.div_hi) --d_hi;
    if (d_hi >= d_lo) out.push_back({m, d_lo, d_hi});
  }
  return out;
}

void validate_spec(const SynthSpec& spec) {
  if (spec.categories.empty())
    throw ConfigError("synthetic spec needs at least one category");
  if (spec.min_len < 1 || spec.max_len < spec.min_len)
    throw ConfigError("synthetic spec needs 1 <= min_len <= max_len");
  if (spec.vocab_size < 2) throw ConfigError("vocab_size too small");
  auto check_range = [](double lo, double hi, const char* what) {
    if (!(0.0 <= lo && lo <= hi && hi <= 1.0))
      throw ConfigError(std::string("invalid ") + what + " overlap range");
  };
  check_range(spec.pos_overlap_lo, spec.pos_overlap_hi, "positive");
  check_range(spec.neg_overlap_lo, spec.neg_overlap_hi, "negative");
  for (std::size_t i = 0; i < spec.categories.size(); ++i) {
    const auto& cat = spec.categories[i];
    if (cat.count < 1)
      throw ConfigError("category " + std::to_string(i) + ": count must be >= 1");
    if (!(cat.pos_ratio >= 0.0 && cat.pos_ratio <= 1.0))
      throw ConfigError("category " + std::to_string(i) +
                        ": pos_ratio outside [0, 1]");
    if (!(cat.div_lo >= 0.0 && cat.div_hi > cat.div_lo))
      throw ConfigError("category " + std::to_string(i) +
                        ": divergence band must satisfy 0 <= lo < hi");
    if (i > 0 && cat.div_lo < spec.categories[i - 1].div_hi)
      throw ConfigError("category " + std::to_string(i) +
                        ": divergence bands must be increasing and disjoint");
  }
}

// n distinct word indices in [0, vocab); rejection sampling is cheap because
// vocab is much larger than any pair's word budget.
std::vector<long> draw_distinct(std::mt19937_64& rng, long vocab, long n) {
  std::vector<long> out;
  out.reserve(n);
  std::unordered_set<long> used;
  while (static_cast<long>(out.size()) < n) {
    long w = static_cast<long>(bounded(rng, static_cast<std::uint64_t>(vocab)));
    if (used.insert(w).second) out.push_back(w);
  }
  return out;
}

std::string join_words(const std::vector<long>& ids) {
  std::string text;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) text += ' ';
    text += 'w';
    text += std::to_string(ids[i]);
  }
  return text;
}

}  // namespace

PairDataset synth_biased_corpus(const SynthSpec& spec, std::uint64_t seed) {
  validate_spec(spec);
  PairDataset ds;
  ds.name = spec.name;
  long total = 0;
  for (const auto& cat : spec.categories) total += cat.count;
  ds.examples.reserve(total);

  for (std::size_t ci = 0; ci < spec.categories.size(); ++ci) {
    const auto& cat = spec.categories[ci];
    auto choices = feasible_lengths(cat, spec.min_len, spec.max_len);
    if (choices.empty())
      throw ConfigError("category " + std::to_string(ci) +
                        ": no lengths in [" + std::to_string(spec.min_len) +
                        ", " + std::to_string(spec.max_len) +
                        "] realize divergence band [" +
                        detail::format_double(cat.div_lo) + ", " +
                        detail::format_double(cat.div_hi) + ")");
    std::string stem = spec.name + "#cat" + std::to_string(ci);
    std::mt19937_64 rng_labels(derive_seed(seed, stem + "#labels"));
    std::mt19937_64 rng_lengths(derive_seed(seed, stem + "#lengths"));
    std::mt19937_64 rng_text(derive_seed(seed, stem + "#text"));

    long n_pos = detail::round_half_away(cat.pos_ratio * cat.count);
    std::vector<int> labels(cat.count, 0);
    std::fill(labels.begin(), labels.begin() + n_pos, 1);
    shuffle_inplace(labels, rng_labels);

    for (long j = 0; j < cat.count; ++j) {
      const auto& choice = choices[bounded(rng_lengths, choices.size())];
      long d = choice.d_lo +
               static_cast<long>(bounded(
                   rng_lengths,
                   static_cast<std::uint64_t>(choice.d_hi - choice.d_lo + 1)));
      bool swapped = bounded(rng_lengths, 2) == 1;
      long la = choice.m, lb = choice.m + d;
      if (swapped) std::swap(la, lb);

      int label = labels[j];
      double f = label == 1 ? uniform_range(rng_text, spec.pos_overlap_lo,
                                            spec.pos_overlap_hi)
                            : uniform_range(rng_text, spec.neg_overlap_lo,
                                            spec.neg_overlap_hi);
      long s = detail::round_half_away(f * (la + lb) / (1.0 + f));
      s = std::clamp(s, 0L, std::min(la, lb));
      long words_needed = la + lb - s;
      if (words_needed > spec.vocab_size)
        throw ConfigError("vocab_size " + std::to_string(spec.vocab_size) +
                          " too small for a pair needing " +
                          std::to_string(words_needed) + " distinct words");
      auto words = draw_distinct(rng_text, spec.vocab_size, words_needed);
      std::vector<long> wa(words.begin(), words.begin() + s);
      std::vector<long> wb = wa;
      wa.insert(wa.end(), words.begin() + s, words.begin() + la);
      wb.insert(wb.end(), words.begin() + la, words.end());
      shuffle_inplace(wa, rng_text);
      shuffle_inplace(wb, rng_text);

      PairExample ex;
      ex.a = make_text(join_words(wa));
      ex.b = make_text(join_words(wb));
      ex.label = label;
      ds.examples.push_back(std::move(ex));
    }
  }

  std::mt19937_64 rng_shuffle(derive_seed(seed, spec.name + "#shuffle"));
  shuffle_inplace(ds.examples, rng_shuffle);
  int width = 1;
  for (long v = total - 1; v >= 10; v /= 10) ++width;
  for (long idx = 0; idx < total; ++idx) {
    std::string num = std::to_string(idx);
    ds.examples[idx].id =
        "ex" + std::string(width - num.size(), '0') + num;
  }
  return ds;
}

SynthSpec synth_preset(std::string_view preset, long per_category) {
  if (per_category < 1) throw ConfigError("per-category count must be >= 1");
  std::vector<double> ratios;
  if (preset == "qqp-like")
    ratios = {0.41, 0.45, 0.38, 0.24};
  else if (preset == "twitter-like")
    ratios = {0.32, 0.30, 0.25, 0.22};
  else if (preset == "trecqa-like")
    ratios = {0.16, 0.14, 0.11, 0.12};
  else if (preset == "microblog-like")
    ratios = {0.20, 0.10, 0.072, 0.09};
  else
    throw ConfigError("unknown preset '" + std::string(preset) +
                      "' (expected qqp-like, twitter-like, trecqa-like or "
                      "microblog-like)");
  SynthSpec spec;
  spec.name = std::string(preset);
  const double bands[5] = {0.0, 0.25, 0.55, 1.0, 2.5};
  for (int i = 0; i < 4; ++i)
    spec.categories.push_back(
        {per_category, ratios[i], bands[i], bands[i + 1]});
  return spec;
}

}  // namespace lenbias
