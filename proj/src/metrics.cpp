#include "lenbias/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "lenbias/detail/util.hpp"
#include "lenbias/error.hpp"

namespace lenbias {

ConfusionCounts count_confusion(std::span<const int> gold,
                                std::span<const int> predicted) {
  if (gold.size() != predicted.size())
    throw ConfigError("gold and predicted label sequences differ in length");
  ConfusionCounts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if ((gold[i] != 0 && gold[i] != 1) || (predicted[i] != 0 && predicted[i] != 1))
      throw ConfigError("labels must be 0 or 1");
    if (gold[i] == 1)
      ++(predicted[i] == 1 ? c.tp : c.fn);
    else
      ++(predicted[i] == 1 ? c.fp : c.tn);
  }
  return c;
}

double accuracy(const ConfusionCounts& c) {
  if (c.total() == 0) throw ConfigError("accuracy of an empty evaluation");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

double balanced_accuracy(const ConfusionCounts& c) {
  if (c.tp + c.fn == 0 || c.tn + c.fp == 0)
    throw ConfigError(
        "undefined recall: balanced accuracy needs both gold classes present");
  double recall_pos =
      static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  double recall_neg =
      static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
  return (recall_pos + recall_neg) / 2.0;
}

namespace {

// 2*tp / (2*tp + fp + fn) with the 0/0 case defined as 0.
double f1_one_class(long tp, long fp, long fn) {
  long denom = 2 * tp + fp + fn;
  if (denom == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace

double f1_macro(const ConfusionCounts& c) {
  if (c.total() == 0) throw ConfigError("macro-F1 of an empty evaluation");
  double f1_pos = f1_one_class(c.tp, c.fp, c.fn);
  double f1_neg = f1_one_class(c.tn, c.fn, c.fp);
  return (f1_pos + f1_neg) / 2.0;
}

double f1_micro(const ConfusionCounts& c) {
  if (c.total() == 0) throw ConfigError("micro-F1 of an empty evaluation");
  // Pool per-class decisions: class 1 contributes (tp, fp, fn), class 0
  // contributes (tn, fn, fp). For single-label binary data this reduces to
  // accuracy; spelled out so the convention is visible.
  long pooled_tp = c.tp + c.tn;
  long pooled_fp = c.fp + c.fn;
  long pooled_fn = c.fn + c.fp;
  return f1_one_class(pooled_tp, pooled_fp, pooled_fn);
}

namespace {

void rank_docs(std::vector<RankedDoc>& docs) {
  std::sort(docs.begin(), docs.end(), [](const RankedDoc& x, const RankedDoc& y) {
    if (x.score != y.score) return x.score > y.score;
    return x.doc_id < y.doc_id;
  });
}

}  // namespace

std::optional<double> average_precision(std::vector<RankedDoc> docs) {
  rank_docs(docs);
  long hits = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (docs[i].rel) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  if (hits == 0) return std::nullopt;
  return sum / static_cast<double>(hits);
}

std::optional<double> reciprocal_rank(std::vector<RankedDoc> docs) {
  rank_docs(docs);
  for (std::size_t i = 0; i < docs.size(); ++i)
    if (docs[i].rel) return 1.0 / static_cast<double>(i + 1);
  return std::nullopt;
}

namespace {

double parse_score(std::string_view text, const std::string& context) {
  double v = detail::parse_double_strict(text, context);
  if (!std::isfinite(v))
    throw ParseError(context + ": score must be finite");
  return v;
}

}  // namespace

PairRun load_pair_run(const std::filesystem::path& path) {
  PairRun run;
  std::unordered_set<std::string> seen;
  auto lines = detail::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::string context = path.filename().string() + ":" + std::to_string(i + 1);
    auto fields = detail::split_tab(lines[i]);
    if (fields.size() != 2)
      throw ParseError(context + ": expected 'id<TAB>score', got " +
                       std::to_string(fields.size()) + " fields");
    std::string id(fields[0]);
    if (id.empty()) throw ParseError(context + ": empty id");
    if (!seen.insert(id).second)
      throw IntegrityError(context + ": duplicate id '" + id + "'");
    run.push_back({std::move(id), parse_score(fields[1], context)});
  }
  if (run.empty()) throw IntegrityError(path.string() + ": empty run");
  return run;
}

void write_pair_run(const PairRun& run, const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  for (const auto& p : run)
    out << p.id << '\t' << detail::format_double(p.score) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

IRRun load_ir_run(const std::filesystem::path& path) {
  IRRun run;
  std::unordered_set<std::string> seen;
  auto lines = detail::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::string context = path.filename().string() + ":" + std::to_string(i + 1);
    auto fields = detail::split_tab(lines[i]);
    if (fields.size() != 3)
      throw ParseError(context +
                       ": expected 'query_id<TAB>doc_id<TAB>score', got " +
                       std::to_string(fields.size()) + " fields");
    std::string qid(fields[0]), did(fields[1]);
    if (qid.empty() || did.empty()) throw ParseError(context + ": empty id");
    if (!seen.insert(qid + '\t' + did).second)
      throw IntegrityError(context + ": duplicate entry " + qid + " / " + did);
    run.push_back({std::move(qid), std::move(did), parse_score(fields[2], context)});
  }
  if (run.empty()) throw IntegrityError(path.string() + ": empty run");
  return run;
}

void write_ir_run(const IRRun& run, const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  for (const auto& p : run)
    out << p.query_id << '\t' << p.doc_id << '\t'
        << detail::format_double(p.score) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

double EvalReport::metric(std::string_view name) const {
  for (const auto& [key, value] : metrics)
    if (key == name) return value;
  throw ConfigError("report has no metric named '" + std::string(name) + "'");
}

bool EvalReport::has_metric(std::string_view name) const {
  for (const auto& [key, value] : metrics)
    if (key == name) return true;
  return false;
}

namespace {

[[noreturn]] void id_mismatch(const char* what,
                              const std::vector<std::string>& offenders) {
  std::string msg = std::string(what) + ":";
  for (std::size_t i = 0; i < offenders.size() && i < 10; ++i)
    msg += " " + offenders[i];
  if (offenders.size() > 10)
    msg += " (and " + std::to_string(offenders.size() - 10) + " more)";
  throw IntegrityError(msg);
}

std::unordered_map<std::string, double> index_run(const PairRun& run,
                                                  const PairDataset& dataset) {
  std::unordered_map<std::string, double> scores;
  scores.reserve(run.size());
  for (const auto& p : run) scores.emplace(p.id, p.score);

  std::unordered_set<std::string> ds_ids;
  ds_ids.reserve(dataset.examples.size());
  std::vector<std::string> offenders;
  for (const auto& ex : dataset.examples) {
    ds_ids.insert(ex.id);
    if (!scores.count(ex.id)) offenders.push_back(ex.id);
  }
  if (!offenders.empty()) id_mismatch("run is missing predictions", offenders);
  for (const auto& p : run)
    if (!ds_ids.count(p.id)) offenders.push_back(p.id);
  if (!offenders.empty())
    id_mismatch("run predicts ids absent from the dataset", offenders);
  return scores;
}

}  // namespace

EvalReport evaluate_pair_run(const PairDataset& dataset, const PairRun& run,
                             double threshold,
                             const CategoryAssignment* assignment) {
  auto scores = index_run(run, dataset);
  std::vector<int> gold, pred;
  gold.reserve(dataset.examples.size());
  pred.reserve(dataset.examples.size());
  for (const auto& ex : dataset.examples) {
    gold.push_back(ex.label);
    pred.push_back(scores.at(ex.id) >= threshold ? 1 : 0);
  }
  EvalReport report;
  report.dataset_name = dataset.name;
  report.confusion = count_confusion(gold, pred);
  report.metrics = {
      {"accuracy", accuracy(report.confusion)},
      {"balanced_accuracy", balanced_accuracy(report.confusion)},
      {"f1_macro", f1_macro(report.confusion)},
      {"f1_micro", f1_micro(report.confusion)},
  };
  if (assignment)
    report.recall_per_category =
        recall_by_category(dataset, run, threshold, *assignment);
  return report;
}

EvalReport evaluate_ir_run(const IRDataset& dataset, const IRRun& run) {
  std::unordered_map<std::string, double> scores;
  scores.reserve(run.size());
  for (const auto& p : run) scores.emplace(p.query_id + '\t' + p.doc_id, p.score);

  std::unordered_set<std::string> known;
  std::vector<std::string> offenders;
  for (const auto& g : dataset.groups)
    for (const auto& d : g.docs) {
      std::string key = g.query_id + '\t' + d.doc_id;
      known.insert(key);
      if (!scores.count(key)) offenders.push_back(g.query_id + "/" + d.doc_id);
    }
  if (!offenders.empty()) id_mismatch("run is missing predictions", offenders);
  for (const auto& p : run)
    if (!known.count(p.query_id + '\t' + p.doc_id))
      offenders.push_back(p.query_id + "/" + p.doc_id);
  if (!offenders.empty())
    id_mismatch("run predicts query/doc pairs absent from the dataset",
                offenders);

  double ap_sum = 0.0, rr_sum = 0.0;
  long evaluated = 0;
  for (const auto& g : dataset.groups) {
    std::vector<RankedDoc> docs;
    docs.reserve(g.docs.size());
    for (const auto& d : g.docs)
      docs.push_back({d.doc_id, scores.at(g.query_id + '\t' + d.doc_id), d.rel});
    auto ap = average_precision(docs);
    auto rr = reciprocal_rank(std::move(docs));
    if (!ap) continue;  // no relevant docs: excluded from both means
    ap_sum += *ap;
    rr_sum += *rr;
    ++evaluated;
  }
  if (evaluated == 0)
    throw ConfigError("no query has a relevant document; MAP/MRR undefined");

  EvalReport report;
  report.dataset_name = dataset.name;
  report.metrics = {
      {"map", ap_sum / static_cast<double>(evaluated)},
      {"mrr", rr_sum / static_cast<double>(evaluated)},
  };
  return report;
}

std::vector<std::optional<double>> recall_by_category(
    const PairDataset& dataset, const PairRun& run, double threshold,
    const CategoryAssignment& assignment) {
  std::unordered_map<std::string, double> scores;
  scores.reserve(run.size());
  for (const auto& p : run) scores.emplace(p.id, p.score);

  std::vector<long> tp(assignment.k, 0), gold_pos(assignment.k, 0);
  for (const auto& ex : dataset.examples) {
    if (ex.label != 1) continue;
    int c = assignment.category_of(ex.id);  // throws if unassigned
    ++gold_pos[c];
    auto it = scores.find(ex.id);
    if (it == scores.end())
      id_mismatch("run is missing predictions", {ex.id});
    if (it->second >= threshold) ++tp[c];
  }
  std::vector<std::optional<double>> recall(assignment.k);
  for (int c = 0; c < assignment.k; ++c)
    if (gold_pos[c] > 0)
      recall[c] = static_cast<double>(tp[c]) / static_cast<double>(gold_pos[c]);
  return recall;
}

const DegradationEntry& DegradationReport::entry(std::string_view metric) const {
  for (const auto& e : entries)
    if (e.metric == metric) return e;
  throw ConfigError("degradation report has no metric named '" +
                    std::string(metric) + "'");
}

DegradationReport degradation(const EvalReport& original,
                              const EvalReport& adversarial) {
  if (original.metrics.size() != adversarial.metrics.size())
    throw ConfigError("cannot pair reports with different metric sets");
  for (const auto& [name, value] : original.metrics)
    if (!adversarial.has_metric(name))
      throw ConfigError("cannot pair reports: '" + name +
                        "' missing from one side");
  DegradationReport report;
  report.original_run = original.run_name;
  report.adversarial_run = adversarial.run_name;
  for (const auto& [name, value] : original.metrics) {
    DegradationEntry e;
    e.metric = name;
    e.original = value;
    e.adversarial = adversarial.metric(name);
    e.delta = e.adversarial - e.original;
    e.drop = e.delta < 0.0;
    report.entries.push_back(std::move(e));
  }
  return report;
}

}  // namespace lenbias
