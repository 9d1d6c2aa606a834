// lenbias: audit length-divergence bias in textual matching datasets,
// build adversarial (bias-free) splits, and measure what length-heuristic
// models can exploit before and after debiasing.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lenbias/baseline.hpp"
#include "lenbias/corpus.hpp"
#include "lenbias/debias.hpp"
#include "lenbias/detail/util.hpp"
#include "lenbias/divergence.hpp"
#include "lenbias/error.hpp"
#include "lenbias/manifest.hpp"
#include "lenbias/metrics.hpp"
#include "lenbias/probe.hpp"
#include "lenbias/stratify.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace lenbias;

namespace {

struct GlobalOpts {
  std::uint64_t seed = 13;
  int k = 4;
  std::string out = ".";
  std::string format = "tsv";
  bool force = false;
  std::string config_path;
};

// ---------------------------------------------------------------------------
// Output plumbing.
// ---------------------------------------------------------------------------

fs::path out_path(const GlobalOpts& g, const std::string& filename) {
  fs::path p = fs::path(g.out) / filename;
  if (fs::exists(p) && !g.force)
    throw IoError("refusing to overwrite " + p.string() + " (pass --force)");
  return p;
}

void write_json_file(const ordered_json& j, const fs::path& p) {
  auto out = detail::open_output(p);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + p.string());
  std::cout << "wrote " << p.string() << '\n';
}

void write_text_file(const std::string& text, const fs::path& p) {
  auto out = detail::open_output(p);
  out << text;
  if (!out) throw IoError("failed writing " + p.string());
  std::cout << "wrote " << p.string() << '\n';
}

std::string ratio2(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", r);
  return buf;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

// Seed and k ride along in every artifact so a reader can reproduce it.
ordered_json provenance(const std::string& command, const GlobalOpts& g) {
  ordered_json c;
  c["command"] = command;
  c["seed"] = g.seed;
  c["k"] = g.k;
  c["format"] = g.format;
  return c;
}

// ---------------------------------------------------------------------------
// Dataset input options shared by audit / split / eval.
// ---------------------------------------------------------------------------

struct InputOpts {
  std::string mode = "pair";
  std::string input;    // pair dataset
  std::string queries;  // listwise dataset
  std::string docs;
  std::string qrels;
};

void add_input_options(CLI::App* sub, InputOpts& in) {
  sub->add_option("--mode", in.mode, "Dataset kind")
      ->check(CLI::IsMember({"pair", "ir"}))
      ->capture_default_str();
  sub->add_option("--input", in.input, "Pair dataset file (pair mode)");
  sub->add_option("--queries", in.queries, "Queries TSV (ir mode)");
  sub->add_option("--docs", in.docs, "Docs TSV (ir mode)");
  sub->add_option("--qrels", in.qrels, "TREC qrels file (ir mode)");
}

void check_input(const InputOpts& in) {
  if (in.mode == "pair") {
    if (in.input.empty())
      throw ConfigError("pair mode needs --input");
  } else {
    if (in.queries.empty() || in.docs.empty() || in.qrels.empty())
      throw ConfigError("ir mode needs --queries, --docs and --qrels");
  }
}

void echo_input(ordered_json& prov, const InputOpts& in) {
  prov["mode"] = in.mode;
  if (in.mode == "pair") {
    prov["input"] = in.input;
  } else {
    prov["queries"] = in.queries;
    prov["docs"] = in.docs;
    prov["qrels"] = in.qrels;
  }
}

PairDataset load_pair_input(const InputOpts& in, const GlobalOpts& g) {
  return load_pair_dataset(in.input, parse_pair_format(g.format));
}

IRDataset load_ir_input(const InputOpts& in) {
  return load_ir_dataset(in.queries, in.docs, in.qrels);
}

// ---------------------------------------------------------------------------
// audit
// ---------------------------------------------------------------------------

std::string render_audit_table(const AuditReport& r, bool listwise) {
  const std::size_t w = 10;
  std::string text = "dataset: " + r.dataset_name + "\n";
  auto row = [&](const std::string& label, auto value_of,
                 const std::string& all) {
    std::string line = pad_right(label, 9);
    for (int c = 0; c < r.k; ++c) line += pad_left(value_of(c), w);
    line += pad_left(all, w);
    return line + "\n";
  };
  std::string header = pad_right("", 9);
  for (int c = 0; c < r.k; ++c)
    header += pad_left("CAT" + std::to_string(c + 1), w);
  header += pad_left("ALL", w);
  text += header + "\n";
  if (listwise)
    text += row(
        "groups",
        [&](int c) { return std::to_string(r.groups_per_category[c]); },
        std::to_string([&] {
          long total = 0;
          for (long gc : r.groups_per_category) total += gc;
          return total;
        }()));
  const char* pos_label = listwise ? "rel" : "pos";
  const char* neg_label = listwise ? "nonrel" : "neg";
  text += row(
      pos_label,
      [&](int c) { return std::to_string(r.per_category[c].positives); },
      std::to_string(r.overall.positives));
  text += row(
      neg_label,
      [&](int c) { return std::to_string(r.per_category[c].negatives); },
      std::to_string(r.overall.negatives));
  text += row(
      "total", [&](int c) { return std::to_string(r.per_category[c].total()); },
      std::to_string(r.overall.total()));
  text += row(
      "posratio",
      [&](int c) {
        double ratio = r.per_category[c].pos_ratio();
        return ratio < 0 ? std::string("-") : ratio2(ratio);
      },
      ratio2(r.overall.pos_ratio()));
  std::string line = pad_right("boundary", 9);
  for (int c = 0; c < r.k - 1; ++c)
    line += pad_left(r.boundaries[c].is_sentinel()
                         ? std::string("SENTINEL")
                         : fixed4(r.boundaries[c].value()),
                     w);
  line += pad_left("-", w);
  text += line + "\n";
  if (r.sentinel_count > 0)
    text += "sentinel divergences: " + std::to_string(r.sentinel_count) + "\n";
  return text;
}

ordered_json audit_to_json(const AuditReport& r, bool listwise) {
  ordered_json j;
  j["dataset"] = r.dataset_name;
  j["k"] = r.k;
  auto categories = ordered_json::array();
  for (int c = 0; c < r.k; ++c) {
    ordered_json cat;
    cat["name"] = "CAT" + std::to_string(c + 1);
    if (listwise) cat["groups"] = r.groups_per_category[c];
    cat[listwise ? "relevant" : "positives"] = r.per_category[c].positives;
    cat[listwise ? "non_relevant" : "negatives"] = r.per_category[c].negatives;
    cat["total"] = r.per_category[c].total();
    double ratio = r.per_category[c].pos_ratio();
    if (ratio < 0)
      cat["pos_ratio"] = nullptr;
    else
      cat["pos_ratio"] = ratio;
    if (c < r.k - 1) {
      if (r.boundaries[c].is_sentinel())
        cat["boundary"] = "SENTINEL";
      else
        cat["boundary"] = r.boundaries[c].value();
    }
    categories.push_back(std::move(cat));
  }
  j["categories"] = std::move(categories);
  ordered_json overall;
  overall[listwise ? "relevant" : "positives"] = r.overall.positives;
  overall[listwise ? "non_relevant" : "negatives"] = r.overall.negatives;
  overall["total"] = r.overall.total();
  overall["pos_ratio"] = r.overall.pos_ratio();
  j["overall"] = std::move(overall);
  j["sentinel_count"] = r.sentinel_count;
  return j;
}

void write_divergence_csv(const std::vector<ScoredExample>& scored,
                          const char* id_column, const fs::path& p) {
  auto out = detail::open_output(p);
  out << id_column << ",divergence\n";
  for (const auto& s : scored) out << s.id << ',' << s.score.to_string() << '\n';
  if (!out) throw IoError("failed writing " + p.string());
  std::cout << "wrote " << p.string() << '\n';
}

void cmd_audit(const GlobalOpts& g, const InputOpts& in) {
  check_input(in);
  ordered_json prov = provenance("audit", g);
  echo_input(prov, in);

  AuditReport report;
  std::vector<ScoredExample> scored;
  bool listwise = in.mode == "ir";
  if (listwise) {
    IRDataset ds = load_ir_input(in);
    report = audit_ir_dataset(ds, g.k);
    scored = score_dataset(ds);
  } else {
    PairDataset ds = load_pair_input(in, g);
    report = audit_pair_dataset(ds, g.k);
    scored = score_dataset(ds);
  }

  std::string table = render_audit_table(report, listwise);
  std::cout << table;
  ordered_json j;
  j["config"] = prov;
  ordered_json body = audit_to_json(report, listwise);
  for (auto& [key, value] : body.items()) j[key] = value;
  write_json_file(j, out_path(g, report.dataset_name + ".audit.json"));
  write_text_file(table, out_path(g, report.dataset_name + ".audit.txt"));
  write_divergence_csv(scored, listwise ? "query_id" : "id",
                       out_path(g, report.dataset_name + ".divergence.csv"));
}

// ---------------------------------------------------------------------------
// split
// ---------------------------------------------------------------------------

void cmd_split(const GlobalOpts& g, const InputOpts& in,
               std::optional<double> target, bool materialize) {
  check_input(in);
  ordered_json prov = provenance("split", g);
  echo_input(prov, in);
  if (target) prov["target"] = *target;
  prov["materialize"] = materialize;

  SplitManifest manifest;
  std::string name;
  if (in.mode == "ir") {
    if (target)
      throw ConfigError("--target applies only to pair mode");
    IRDataset ds = load_ir_input(in);
    auto assignment = stratify(score_dataset(ds), g.k);
    manifest = build_ir_split(ds, assignment, g.seed);
    name = ds.name;
    if (materialize) {
      IRDataset subset = apply_ir_split(ds, manifest);
      write_ir_dataset(subset,
                       out_path(g, name + ".adversarial.queries.tsv"),
                       out_path(g, name + ".adversarial.docs.tsv"),
                       out_path(g, name + ".adversarial.qrels.txt"));
      std::cout << "wrote " << (fs::path(g.out) / (name + ".adversarial.queries.tsv")).string()
                << " (+docs,+qrels)\n";
    }
  } else {
    PairDataset ds = load_pair_input(in, g);
    auto assignment = stratify(score_dataset(ds), g.k);
    manifest = build_pair_split(ds, assignment, g.seed, target);
    name = ds.name;
    if (materialize) {
      PairDataset subset = apply_pair_split(ds, manifest);
      fs::path p = out_path(g, name + ".adversarial." + g.format);
      write_pair_dataset(subset, p, parse_pair_format(g.format));
      std::cout << "wrote " << p.string() << '\n';
    }
  }

  long removed_pos = 0, removed_neg = 0;
  for (const auto& r : manifest.removed_per_category) {
    removed_pos += r.positives;
    removed_neg += r.negatives;
  }
  std::cout << "retained " << manifest.retained_ids.size() << " ids; removed "
            << removed_pos << (in.mode == "ir" ? " relevant" : " positives")
            << " and " << removed_neg
            << (in.mode == "ir" ? " non-relevant docs" : " negatives") << '\n';
  if (manifest.target_pos_ratio)
    std::cout << "target pos-ratio: "
              << detail::format_double(*manifest.target_pos_ratio) << '\n';

  fs::path mp = out_path(g, name + ".manifest.json");
  write_manifest(manifest, mp);
  std::cout << "wrote " << mp.string() << '\n';
  ordered_json meta;
  meta["config"] = prov;
  write_json_file(meta, out_path(g, name + ".manifest.meta.json"));
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

ordered_json report_to_json(const EvalReport& r) {
  ordered_json j;
  ordered_json metrics;
  for (const auto& [name, value] : r.metrics) metrics[name] = value;
  j["metrics"] = std::move(metrics);
  if (r.confusion.total() > 0) {
    ordered_json c;
    c["tp"] = r.confusion.tp;
    c["fp"] = r.confusion.fp;
    c["tn"] = r.confusion.tn;
    c["fn"] = r.confusion.fn;
    j["confusion"] = std::move(c);
  }
  if (!r.recall_per_category.empty()) {
    auto recall = ordered_json::array();
    for (const auto& v : r.recall_per_category) {
      if (v)
        recall.push_back(*v);
      else
        recall.push_back(nullptr);
    }
    j["recall_by_category"] = std::move(recall);
  }
  return j;
}

ordered_json degradation_to_json(const DegradationReport& d) {
  auto entries = ordered_json::array();
  for (const auto& e : d.entries) {
    ordered_json row;
    row["metric"] = e.metric;
    row["original"] = e.original;
    row["adversarial"] = e.adversarial;
    row["delta"] = e.delta;
    row["drop"] = e.drop;
    entries.push_back(std::move(row));
  }
  return entries;
}

std::string render_eval_table(const EvalReport& r) {
  std::string text = "dataset: " + r.dataset_name;
  if (!r.run_name.empty()) text += "   run: " + r.run_name;
  text += "\n";
  for (const auto& [name, value] : r.metrics)
    text += pad_right(name, 19) + fixed4(value) + "\n";
  if (r.confusion.total() > 0)
    text += "confusion: tp=" + std::to_string(r.confusion.tp) +
            " fp=" + std::to_string(r.confusion.fp) +
            " tn=" + std::to_string(r.confusion.tn) +
            " fn=" + std::to_string(r.confusion.fn) + "\n";
  if (!r.recall_per_category.empty()) {
    text += "recall by category:";
    for (std::size_t c = 0; c < r.recall_per_category.size(); ++c) {
      text += " CAT" + std::to_string(c + 1) + "=";
      text += r.recall_per_category[c] ? fixed4(*r.recall_per_category[c])
                                       : std::string("UNDEFINED");
    }
    text += "\n";
  }
  return text;
}

std::string render_degradation_table(const DegradationReport& d) {
  std::string text = pad_right("metric", 19) + pad_left("full", 10) +
                     pad_left("subset", 10) + pad_left("delta", 10) + "\n";
  for (const auto& e : d.entries)
    text += pad_right(e.metric, 19) + pad_left(fixed4(e.original), 10) +
            pad_left(fixed4(e.adversarial), 10) +
            pad_left(fixed4(e.delta), 10) + "\n";
  return text;
}

void cmd_eval(const GlobalOpts& g, const InputOpts& in, const std::string& run_path,
              double threshold, bool by_category,
              const std::string& manifest_path) {
  check_input(in);
  ordered_json prov = provenance("eval", g);
  echo_input(prov, in);
  prov["run"] = run_path;
  prov["threshold"] = threshold;
  prov["by_category"] = by_category;
  if (!manifest_path.empty()) prov["manifest"] = manifest_path;

  std::string run_stem = fs::path(run_path).stem().string();
  ordered_json j;
  j["config"] = prov;
  std::string text;

  if (in.mode == "ir") {
    if (by_category)
      throw ConfigError("--by-category applies only to pair mode");
    IRDataset ds = load_ir_input(in);
    IRRun run = load_ir_run(run_path);
    EvalReport full = evaluate_ir_run(ds, run);
    full.run_name = run_stem;
    j["dataset"] = ds.name;
    j["run"] = run_stem;
    j["full"] = report_to_json(full);
    text = render_eval_table(full);
    if (!manifest_path.empty()) {
      SplitManifest manifest = read_manifest(manifest_path);
      IRDataset subset = apply_ir_split(ds, manifest);
      std::unordered_set<std::string> keep(manifest.retained_ids.begin(),
                                           manifest.retained_ids.end());
      IRRun subset_run;
      for (const auto& p : run)
        if (keep.count(p.query_id)) subset_run.push_back(p);
      EvalReport sub = evaluate_ir_run(subset, subset_run);
      sub.run_name = run_stem;
      j["subset"] = report_to_json(sub);
      DegradationReport d = degradation(full, sub);
      j["degradation"] = degradation_to_json(d);
      text += "\nfull vs subset:\n" + render_degradation_table(d);
    }
  } else {
    PairDataset ds = load_pair_input(in, g);
    PairRun run = load_pair_run(run_path);
    std::optional<CategoryAssignment> assignment;
    if (by_category) assignment = stratify(score_dataset(ds), g.k);
    EvalReport full = evaluate_pair_run(
        ds, run, threshold, assignment ? &*assignment : nullptr);
    full.run_name = run_stem;
    j["dataset"] = ds.name;
    j["run"] = run_stem;
    j["full"] = report_to_json(full);
    text = render_eval_table(full);
    if (assignment) {
      auto csv = detail::open_output(out_path(g, run_stem + ".recall.csv"));
      csv << "category,recall\n";
      for (std::size_t c = 0; c < full.recall_per_category.size(); ++c)
        csv << "CAT" << c + 1 << ','
            << (full.recall_per_category[c]
                    ? detail::format_double(*full.recall_per_category[c])
                    : std::string("UNDEFINED"))
            << '\n';
      if (!csv) throw IoError("failed writing recall csv");
      std::cout << "wrote "
                << (fs::path(g.out) / (run_stem + ".recall.csv")).string()
                << '\n';
    }
    if (!manifest_path.empty()) {
      SplitManifest manifest = read_manifest(manifest_path);
      PairDataset subset = apply_pair_split(ds, manifest);
      std::unordered_set<std::string> keep(manifest.retained_ids.begin(),
                                           manifest.retained_ids.end());
      PairRun subset_run;
      for (const auto& p : run)
        if (keep.count(p.id)) subset_run.push_back(p);
      EvalReport sub = evaluate_pair_run(subset, subset_run, threshold);
      sub.run_name = run_stem;
      j["subset"] = report_to_json(sub);
      DegradationReport d = degradation(full, sub);
      j["degradation"] = degradation_to_json(d);
      text += "\nfull vs subset:\n" + render_degradation_table(d);
    }
  }

  std::cout << text;
  write_json_file(j, out_path(g, run_stem + ".eval.json"));
  write_text_file(text, out_path(g, run_stem + ".eval.txt"));
}

// ---------------------------------------------------------------------------
// baseline
// ---------------------------------------------------------------------------

struct BaselineTrainOpts {
  std::string input;
  std::string model = "threshold";
  std::string features = "divergence";
  std::string name = "baseline";
  double lr = 0.5;
  long epochs = 400;
  double l2 = 1e-4;
};

std::vector<std::string> split_csv(const std::string& csv) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    std::size_t comma = csv.find(',', start);
    if (comma == std::string::npos) comma = csv.size();
    if (comma > start) out.push_back(csv.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

void cmd_baseline_train(const GlobalOpts& g, const BaselineTrainOpts& o) {
  if (o.input.empty()) throw ConfigError("baseline train needs --input");
  ordered_json prov = provenance("baseline train", g);
  prov["input"] = o.input;
  prov["model"] = o.model;
  prov["features"] = o.features;
  prov["lr"] = o.lr;
  prov["epochs"] = o.epochs;
  prov["l2"] = o.l2;

  PairDataset train = load_pair_dataset(o.input, parse_pair_format(g.format));
  BaselineModel model;
  if (o.model == "threshold") {
    ThresholdModel t = fit_threshold(train);
    std::cout << "tau=" << detail::format_double(t.tau)
              << " train_ba=" << fixed4(t.train_ba) << '\n';
    model = t;
  } else {
    LinearTrainConfig config{o.lr, o.epochs, o.l2};
    LinearModel m = train_linear(train, split_csv(o.features), config);
    std::cout << "trained linear model on " << train.examples.size()
              << " examples\n";
    model = std::move(m);
  }
  fs::path mp = out_path(g, o.name + ".model.json");
  save_model(model, mp);
  std::cout << "wrote " << mp.string() << '\n';
  ordered_json meta;
  meta["config"] = prov;
  write_json_file(meta, out_path(g, o.name + ".model.meta.json"));
}

void cmd_baseline_eval(const GlobalOpts& g, const std::string& model_path,
                       const std::string& input, std::string name) {
  if (input.empty()) throw ConfigError("baseline eval needs --input");
  if (model_path.empty()) throw ConfigError("baseline eval needs --model-file");
  ordered_json prov = provenance("baseline eval", g);
  prov["model_file"] = model_path;
  prov["input"] = input;

  PairDataset ds = load_pair_dataset(input, parse_pair_format(g.format));
  if (name.empty()) name = ds.name;
  BaselineModel model = load_model(model_path);
  PairRun run = predict_run(model, ds);
  fs::path rp = out_path(g, name + ".run.tsv");
  write_pair_run(run, rp);
  std::cout << "wrote " << rp.string() << '\n';
  ordered_json meta;
  meta["config"] = prov;
  write_json_file(meta, out_path(g, name + ".run.meta.json"));
}

// ---------------------------------------------------------------------------
// probe
// ---------------------------------------------------------------------------

ordered_json probe_report_to_json(const ProbeReport& r) {
  ordered_json j;
  j["accuracy"] = r.accuracy;
  auto per_class = ordered_json::array();
  for (const auto& v : r.per_class_accuracy) {
    if (v)
      per_class.push_back(*v);
    else
      per_class.push_back(nullptr);
  }
  j["per_class_accuracy"] = std::move(per_class);
  j["bin_edges"] = r.bin_edges;
  return j;
}

void cmd_probe_train(const GlobalOpts& g, const std::string& reps_path,
                     const ProbeConfig& config, const std::string& name) {
  if (reps_path.empty()) throw ConfigError("probe train needs --representations");
  ordered_json prov = provenance("probe train", g);
  prov["representations"] = reps_path;
  prov["hidden"] = config.hidden;
  prov["lr"] = config.learning_rate;
  prov["epochs"] = config.epochs;
  prov["batch"] = config.batch_size;

  auto records = load_representations(reps_path);
  ProbeModel model = train_probe(records, config, g.seed);
  ProbeReport train_report = eval_probe(model, records);
  std::cout << "train accuracy: " << fixed4(train_report.accuracy) << '\n';

  fs::path mp = out_path(g, name + ".probe.json");
  save_probe(model, mp);
  std::cout << "wrote " << mp.string() << '\n';
  ordered_json j;
  j["config"] = prov;
  j["train"] = probe_report_to_json(train_report);
  write_json_file(j, out_path(g, name + ".probe-report.json"));
}

void cmd_probe_eval(const GlobalOpts& g, const std::string& model_path,
                    const std::string& reps_path, std::string name) {
  if (reps_path.empty()) throw ConfigError("probe eval needs --representations");
  if (model_path.empty()) throw ConfigError("probe eval needs --model-file");
  ordered_json prov = provenance("probe eval", g);
  prov["model_file"] = model_path;
  prov["representations"] = reps_path;

  ProbeModel model = load_probe(model_path);
  auto records = load_representations(reps_path);
  ProbeReport report = eval_probe(model, records);
  std::cout << "accuracy: " << fixed4(report.accuracy) << '\n';
  if (name.empty()) name = fs::path(reps_path).stem().string();
  ordered_json j;
  j["config"] = prov;
  j["eval"] = probe_report_to_json(report);
  write_json_file(j, out_path(g, name + ".probe-report.json"));
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

SynthSpec spec_from_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  SynthSpec spec;
  try {
    spec.name = j.value("name", spec.name);
    spec.vocab_size = j.value("vocab_size", spec.vocab_size);
    spec.min_len = j.value("min_len", spec.min_len);
    spec.max_len = j.value("max_len", spec.max_len);
    if (j.contains("pos_overlap")) {
      spec.pos_overlap_lo = j["pos_overlap"].at(0).get<double>();
      spec.pos_overlap_hi = j["pos_overlap"].at(1).get<double>();
    }
    if (j.contains("neg_overlap")) {
      spec.neg_overlap_lo = j["neg_overlap"].at(0).get<double>();
      spec.neg_overlap_hi = j["neg_overlap"].at(1).get<double>();
    }
    if (!j.contains("categories") || !j["categories"].is_array())
      throw ParseError(path + ": needs a 'categories' array");
    for (const auto& cat : j["categories"]) {
      SynthCategorySpec c;
      c.count = cat.at("count").get<long>();
      c.pos_ratio = cat.at("pos_ratio").get<double>();
      c.div_lo = cat.at("div_lo").get<double>();
      c.div_hi = cat.at("div_hi").get<double>();
      spec.categories.push_back(c);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return spec;
}

void cmd_synth(const GlobalOpts& g, const std::string& preset,
               const std::string& spec_path, long per_category,
               std::string name) {
  ordered_json prov = provenance("synth", g);
  SynthSpec spec;
  if (!spec_path.empty()) {
    if (!preset.empty())
      throw ConfigError("--preset and --spec are mutually exclusive");
    spec = spec_from_json_file(spec_path);
    prov["spec"] = spec_path;
  } else if (!preset.empty()) {
    spec = synth_preset(preset, per_category);
    prov["preset"] = preset;
    prov["n"] = per_category;
  } else {
    throw ConfigError("synth needs --preset or --spec");
  }
  if (!name.empty()) spec.name = name;
  prov["name"] = spec.name;

  PairDataset ds = synth_biased_corpus(spec, g.seed);
  fs::path dp = out_path(g, spec.name + "." + g.format);
  write_pair_dataset(ds, dp, parse_pair_format(g.format));
  std::cout << "wrote " << dp.string() << " (" << ds.examples.size()
            << " examples)\n";

  ordered_json meta;
  meta["config"] = prov;
  auto categories = ordered_json::array();
  for (const auto& c : spec.categories) {
    ordered_json cat;
    cat["count"] = c.count;
    cat["pos_ratio"] = c.pos_ratio;
    cat["div_lo"] = c.div_lo;
    cat["div_hi"] = c.div_hi;
    categories.push_back(std::move(cat));
  }
  meta["categories"] = std::move(categories);
  meta["vocab_size"] = spec.vocab_size;
  meta["min_len"] = spec.min_len;
  meta["max_len"] = spec.max_len;
  meta["pos_overlap"] = {spec.pos_overlap_lo, spec.pos_overlap_hi};
  meta["neg_overlap"] = {spec.neg_overlap_lo, spec.neg_overlap_hi};
  write_json_file(meta, out_path(g, spec.name + ".meta.json"));
}

// ---------------------------------------------------------------------------
// --config expansion: values from the JSON file become options placed before
// the user's own flags, so explicit flags win.
// ---------------------------------------------------------------------------

std::vector<std::string> config_to_args(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError(path + ": config must be a JSON object");
  std::vector<std::string> args;
  for (const auto& [key, value] : j.items()) {
    if (key == "command") continue;  // provenance echo, not an option
    std::string flag = "--" + key;
    for (auto& ch : flag)
      if (ch == '_') ch = '-';
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_string()) {
      args.push_back(flag + "=" + value.get<std::string>());
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& item : value) {
        if (!joined.empty()) joined += ",";
        joined += item.is_string() ? item.get<std::string>() : item.dump();
      }
      args.push_back(flag + "=" + joined);
    } else {
      args.push_back(flag + "=" + value.dump());
    }
  }
  return args;
}

std::vector<std::string> expand_args(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      config_path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;
  auto extra = config_to_args(config_path);
  // Insert after the leading subcommand tokens, before any user flag.
  std::size_t insert_at = 0;
  while (insert_at < args.size() && args[insert_at][0] != '-') ++insert_at;
  args.insert(args.begin() + insert_at, extra.begin(), extra.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"length-divergence bias auditing toolkit"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOpts g;
  app.add_option("--seed", g.seed, "Seed for all randomized steps")
      ->capture_default_str();
  app.add_option("--k", g.k, "Number of divergence categories")
      ->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--format", g.format, "Pair dataset file format")
      ->check(CLI::IsMember({"tsv", "jsonl"}))
      ->capture_default_str();
  app.add_flag("--force", g.force, "Overwrite existing output files");
  app.add_option("--config", g.config_path,
                 "JSON file of option values (explicit flags win)");

  // audit
  auto* audit = app.add_subcommand("audit", "Divergence-stratified label audit");
  audit->fallthrough();
  InputOpts audit_in;
  add_input_options(audit, audit_in);

  // split
  auto* split = app.add_subcommand("split", "Build an adversarial split");
  split->fallthrough();
  InputOpts split_in;
  add_input_options(split, split_in);
  double split_target = 0.0;
  auto* target_opt = split->add_option(
      "--target", split_target,
      "Pos-ratio target for pair mode (default: overall ratio)");
  bool materialize = false;
  split->add_flag("--materialize", materialize,
                  "Also write the retained subset as dataset files");

  // eval
  auto* eval = app.add_subcommand("eval", "Score a prediction run");
  eval->fallthrough();
  InputOpts eval_in;
  add_input_options(eval, eval_in);
  std::string run_path;
  eval->add_option("--run", run_path, "Prediction run TSV")->required();
  double threshold = 0.5;
  eval->add_option("--threshold", threshold, "Hard-label cutoff on scores")
      ->capture_default_str();
  bool by_category = false;
  eval->add_flag("--by-category", by_category,
                 "Report recall per divergence category");
  std::string eval_manifest;
  eval->add_option("--manifest", eval_manifest,
                   "Also evaluate the manifest's retained subset");

  // baseline
  auto* baseline =
      app.add_subcommand("baseline", "Length-heuristic reference models");
  baseline->require_subcommand(1);
  baseline->fallthrough();
  auto* btrain = baseline->add_subcommand("train", "Fit a baseline model");
  btrain->fallthrough();
  BaselineTrainOpts bt;
  btrain->add_option("--input", bt.input, "Training pair dataset");
  btrain->add_option("--model", bt.model, "Model family")
      ->check(CLI::IsMember({"threshold", "linear"}))
      ->capture_default_str();
  btrain->add_option("--features", bt.features,
                     "Comma-separated feature names (linear model)")
      ->capture_default_str();
  btrain->add_option("--name", bt.name, "Output name stem")
      ->capture_default_str();
  btrain->add_option("--lr", bt.lr, "Learning rate")->capture_default_str();
  btrain->add_option("--epochs", bt.epochs, "Training epochs")
      ->capture_default_str();
  btrain->add_option("--l2", bt.l2, "L2 penalty on weights")
      ->capture_default_str();
  auto* beval = baseline->add_subcommand("eval", "Write a prediction run");
  beval->fallthrough();
  std::string beval_model, beval_input, beval_name;
  beval->add_option("--model-file", beval_model, "Trained model JSON");
  beval->add_option("--input", beval_input, "Pair dataset to score");
  beval->add_option("--name", beval_name,
                    "Output name stem (default: dataset name)");

  // probe
  auto* probe = app.add_subcommand("probe", "Length probe over representations");
  probe->require_subcommand(1);
  probe->fallthrough();
  auto* ptrain = probe->add_subcommand("train", "Train the length probe");
  ptrain->fallthrough();
  std::string ptrain_reps, ptrain_name = "probe";
  ProbeConfig probe_config;
  ptrain->add_option("--representations", ptrain_reps,
                     "Representations JSONL (id, vector, length|text)");
  ptrain->add_option("--hidden", probe_config.hidden, "Hidden width")
      ->capture_default_str();
  ptrain->add_option("--lr", probe_config.learning_rate, "Learning rate")
      ->capture_default_str();
  ptrain->add_option("--epochs", probe_config.epochs, "Training epochs")
      ->capture_default_str();
  ptrain->add_option("--batch", probe_config.batch_size, "Minibatch size")
      ->capture_default_str();
  ptrain->add_option("--name", ptrain_name, "Output name stem")
      ->capture_default_str();
  auto* peval = probe->add_subcommand("eval", "Evaluate a trained probe");
  peval->fallthrough();
  std::string peval_model, peval_reps, peval_name;
  peval->add_option("--model-file", peval_model, "Trained probe JSON");
  peval->add_option("--representations", peval_reps, "Representations JSONL");
  peval->add_option("--name", peval_name,
                    "Output name stem (default: representations name)");

  // synth
  auto* synth =
      app.add_subcommand("synth", "Generate a synthetic biased corpus");
  synth->fallthrough();
  std::string synth_preset_name, synth_spec_path, synth_name;
  long synth_n = 10000;
  synth->add_option("--preset", synth_preset_name,
                    "qqp-like, twitter-like, trecqa-like or microblog-like");
  synth->add_option("--spec", synth_spec_path, "Full spec as a JSON file");
  synth->add_option("--n", synth_n, "Examples per category (with --preset)")
      ->capture_default_str();
  synth->add_option("--name", synth_name, "Dataset name override");

  try {
    auto args = expand_args(argc, argv);
    std::vector<const char*> cargs;
    cargs.push_back(argv[0]);
    for (const auto& a : args) cargs.push_back(a.c_str());
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }

  try {
    if (app.got_subcommand(audit)) {
      cmd_audit(g, audit_in);
    } else if (app.got_subcommand(split)) {
      cmd_split(g, split_in,
                target_opt->count() ? std::optional<double>(split_target)
                                    : std::nullopt,
                materialize);
    } else if (app.got_subcommand(eval)) {
      cmd_eval(g, eval_in, run_path, threshold, by_category, eval_manifest);
    } else if (app.got_subcommand(baseline)) {
      if (baseline->got_subcommand(btrain))
        cmd_baseline_train(g, bt);
      else
        cmd_baseline_eval(g, beval_model, beval_input, beval_name);
    } else if (app.got_subcommand(probe)) {
      if (probe->got_subcommand(ptrain))
        cmd_probe_train(g, ptrain_reps, probe_config, ptrain_name);
      else
        cmd_probe_eval(g, peval_model, peval_reps, peval_name);
    } else if (app.got_subcommand(synth)) {
      cmd_synth(g, synth_preset_name, synth_spec_path, synth_n, synth_name);
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
