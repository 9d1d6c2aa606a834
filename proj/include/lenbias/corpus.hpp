#ifndef LENBIAS_CORPUS_HPP
#define LENBIAS_CORPUS_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lenbias {

/// Maximal runs of non-whitespace characters in a UTF-8 string. Splits on
/// every Unicode whitespace codepoint; punctuation stays attached to the
/// surrounding word. Malformed byte sequences count as word bytes.
std::vector<std::string> tokenize(std::string_view text);

/// tokenize(text).size() without materializing the tokens.
int count_tokens(std::string_view text);

/// |words(a) ∩ words(b)| / |words(a) ∪ words(b)| over distinct words;
/// 1.0 when both texts are empty.
double jaccard_overlap(std::string_view a, std::string_view b);

/// A single text with its cached word count. Counts are always recomputed
/// from the raw string on construction, never trusted from input files.
struct TextRecord {
  std::string raw;
  int token_count = 0;
};

TextRecord make_text(std::string raw);

struct PairExample {
  std::string id;
  TextRecord a;
  TextRecord b;
  int label = 0;  // 1 = positive, 0 = negative
};

struct PairDataset {
  std::string name;
  std::vector<PairExample> examples;
};

struct ScoredDoc {
  std::string doc_id;
  TextRecord text;
  int rel = 0;  // 1 = relevant, 0 = non-relevant
};

struct QueryGroup {
  std::string query_id;
  TextRecord query;
  std::vector<ScoredDoc> docs;
};

struct IRDataset {
  std::string name;
  std::vector<QueryGroup> groups;
};

enum class PairFormat { tsv, jsonl };

PairFormat parse_pair_format(std::string_view name);

/// Loads a pair dataset.
///
/// TSV: four tab-separated columns `id, text_a, text_b, label`, UTF-8, no
/// header, label in {0,1}. JSONL: one object per line with keys `id`,
/// `text_a`, `text_b`, `label`.
///
/// Throws ParseError (with the line number) on malformed rows and
/// IntegrityError on duplicate ids or an empty dataset.
PairDataset load_pair_dataset(const std::filesystem::path& path,
                              PairFormat format);

void write_pair_dataset(const PairDataset& dataset,
                        const std::filesystem::path& path, PairFormat format);

/// Loads a listwise dataset from TREC-style files: queries TSV
/// (`query_id, text`), docs TSV (`doc_id, text`), and a whitespace-separated
/// qrels file `query_id iter doc_id rel` (iter ignored, rel > 0 means
/// relevant). One group per query id appearing in qrels, docs in qrels
/// order; docs never mentioned for a query are excluded from its group.
IRDataset load_ir_dataset(const std::filesystem::path& queries_path,
                          const std::filesystem::path& docs_path,
                          const std::filesystem::path& qrels_path);

void write_ir_dataset(const IRDataset& dataset,
                      const std::filesystem::path& queries_path,
                      const std::filesystem::path& docs_path,
                      const std::filesystem::path& qrels_path);

// ---------------------------------------------------------------------------
// Synthetic biased corpora.
//
// Each category plants its pairs inside a disjoint divergence band, so the
// generated examples land in the intended category when the corpus is later
// sorted and split. Labels are drawn independently of the length draws;
// positives additionally share planted word overlap so a signal unrelated
// to length survives debiasing.
// ---------------------------------------------------------------------------

struct SynthCategorySpec {
  long count = 0;
  double pos_ratio = 0.5;
  // Realized pairwise divergence lands in [div_lo, div_hi).
  double div_lo = 0.0;
  double div_hi = 1.0;
};

struct SynthSpec {
  std::string name = "synthetic";
  std::vector<SynthCategorySpec> categories;
  long vocab_size = 2000;
  int min_len = 5;   // bounds for the shorter text of a pair
  int max_len = 25;
  // Target Jaccard overlap ranges by label; the realized overlap is
  // additionally capped by what the pair's lengths admit.
  double pos_overlap_lo = 0.05;
  double pos_overlap_hi = 0.80;
  double neg_overlap_lo = 0.00;
  double neg_overlap_hi = 0.50;
};

/// Deterministic function of (spec, seed): same inputs give byte-identical
/// datasets. Throws ConfigError if the length ranges cannot realize the
/// requested divergence bands or the bands are not increasing and disjoint.
PairDataset synth_biased_corpus(const SynthSpec& spec, std::uint64_t seed);

/// Category ratio presets mirroring common public matching datasets.
/// `preset` is one of "qqp-like", "twitter-like", "trecqa-like",
/// "microblog-like". Band layout and lengths use the defaults above.
SynthSpec synth_preset(std::string_view preset, long per_category);

}  // namespace lenbias

#endif  // LENBIAS_CORPUS_HPP
