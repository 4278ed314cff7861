#ifndef FORGE_EVAL_HPP
#define FORGE_EVAL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/core.hpp"
#include "forge/parsing.hpp"

namespace forge::evalkit {

using core::AdversarialClass;
using core::ContentRecord;
using core::SafetyClass;
using core::Verdict;

struct Confusion {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

  Confusion& operator+=(const Confusion& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }

  std::uint64_t total() const { return tp + fp + fn + tn; }

  void add(bool actual_positive, bool predicted_positive) {
    if (actual_positive)
      predicted_positive ? ++tp : ++fn;
    else
      predicted_positive ? ++fp : ++tn;
  }
};

enum class DegenerateFlag { no_predicted_positives, no_actual_positives, no_actual_negatives };

inline std::string to_string(DegenerateFlag f) {
  switch (f) {
    case DegenerateFlag::no_predicted_positives: return "no_predicted_positives";
    case DegenerateFlag::no_actual_positives: return "no_actual_positives";
    case DegenerateFlag::no_actual_negatives: return "no_actual_negatives";
  }
  throw std::logic_error("bad flag");
}

struct MetricSet {
  double precision = 0, recall = 0, f1 = 0, fpr = 0;
  std::set<DegenerateFlag> degenerate_flags;
};

// Degenerate denominators yield 0 plus a flag instead of NaN.
inline MetricSet metrics(const Confusion& c) {
  MetricSet m;
  if (c.tp + c.fp == 0)
    m.degenerate_flags.insert(DegenerateFlag::no_predicted_positives);
  else
    m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn == 0)
    m.degenerate_flags.insert(DegenerateFlag::no_actual_positives);
  else
    m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (c.fp + c.tn == 0)
    m.degenerate_flags.insert(DegenerateFlag::no_actual_negatives);
  else
    m.fpr = static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
  if (m.precision + m.recall > 0)
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

inline double f1_from_pr(double precision, double recall) {
  if (precision + recall == 0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

enum class MetricSelection { recall_only, f1_suite };

struct BenchmarkMeta {
  std::string name;
  bool positive_only = false;
  std::size_t size = 0;
};

inline MetricSelection select_metric(const BenchmarkMeta& meta) {
  if (meta.size == 0) throw std::invalid_argument("empty benchmark: " + meta.name);
  return meta.positive_only ? MetricSelection::recall_only : MetricSelection::f1_suite;
}

// ---- chunking for short-context classifiers ----

struct ChunkPolicy {
  std::size_t chunk_size = 512;
  std::size_t overlap = 64;

  void validate() const {
    if (chunk_size == 0 || overlap >= chunk_size)
      throw std::invalid_argument("chunk policy requires 0 <= overlap < chunk_size");
  }

  std::size_t stride() const { return chunk_size - overlap; }
};

struct Chunk {
  std::size_t start = 0;  // token offset
  std::vector<std::string> tokens;
};

inline std::vector<Chunk> chunk(const std::vector<std::string>& tokens,
                                const ChunkPolicy& policy) {
  policy.validate();
  std::vector<Chunk> chunks;
  if (tokens.size() <= policy.chunk_size) {
    chunks.push_back({0, tokens});
    return chunks;
  }
  for (std::size_t start = 0;; start += policy.stride()) {
    std::size_t end = std::min(start + policy.chunk_size, tokens.size());
    chunks.push_back({start, {tokens.begin() + static_cast<std::ptrdiff_t>(start),
                              tokens.begin() + static_cast<std::ptrdiff_t>(end)}});
    if (end >= tokens.size()) break;
  }
  return chunks;
}

using ChunkScorer = std::function<double(const std::vector<std::string>& chunk_tokens)>;

// Maximum probability across chunks decides the document score.
inline double chunked_score(const std::vector<std::string>& tokens, const ChunkScorer& scorer,
                            const ChunkPolicy& policy) {
  double best = 0.0;
  bool first = true;
  for (const auto& c : chunk(tokens, policy)) {
    double s;
    try {
      s = scorer(c.tokens);
    } catch (const std::exception& e) {
      throw std::runtime_error("scorer failed on chunk at token " + std::to_string(c.start) +
                               ": " + e.what());
    }
    if (first || s > best) best = s;
    first = false;
  }
  return best;
}

// ---- eval runner ----

enum class ParsePolicy { fail_closed, fail_open, error };

inline ParsePolicy parse_policy_from_string(const std::string& s) {
  if (s == "fail-closed" || s == "fail_closed") return ParsePolicy::fail_closed;
  if (s == "fail-open" || s == "fail_open") return ParsePolicy::fail_open;
  if (s == "error") return ParsePolicy::error;
  throw std::invalid_argument("unknown parse policy: " + s);
}

struct DimensionReport {
  Confusion confusion;
  MetricSet metric_set;
  MetricSelection selection = MetricSelection::f1_suite;
};

struct BenchmarkReport {
  BenchmarkMeta meta;
  DimensionReport safety;
  DimensionReport adversarial;
  std::size_t parse_failures = 0;
};

struct EvalReport {
  std::map<std::string, BenchmarkReport> per_benchmark;
  DimensionReport aggregate_safety;      // pooled (micro) confusion
  DimensionReport aggregate_adversarial;
  MetricSet macro_safety;                // mean of per-benchmark metric sets
  MetricSet macro_adversarial;
  std::size_t parse_failures = 0;
  std::string model_id;
  std::string mode;
  bool complete = true;
};

struct LabeledPrediction {
  std::string benchmark;
  SafetyClass gold_safety = SafetyClass::safe;
  AdversarialClass gold_adversarial = AdversarialClass::non_adversarial;
  std::optional<Verdict> verdict;  // nullopt = unparseable subject output
};

// Subject returns the raw model output for a record; parsing happens here so the
// parse-failure policy is applied uniformly.
using Subject = std::function<std::string(const ContentRecord&)>;

inline EvalReport run_eval(const std::vector<LabeledPrediction>& predictions,
                           const std::map<std::string, bool>& positive_only_benchmarks = {},
                           ParsePolicy policy = ParsePolicy::fail_closed) {
  EvalReport report;
  for (const auto& p : predictions) {
    auto& bench = report.per_benchmark[p.benchmark];
    bench.meta.name = p.benchmark;
    if (auto it = positive_only_benchmarks.find(p.benchmark);
        it != positive_only_benchmarks.end())
      bench.meta.positive_only = it->second;
    ++bench.meta.size;

    bool pred_unsafe, pred_adv;
    if (p.verdict) {
      pred_unsafe = p.verdict->safety == SafetyClass::unsafe_;
      pred_adv = p.verdict->adversarial == AdversarialClass::adversarial;
    } else {
      ++bench.parse_failures;
      ++report.parse_failures;
      switch (policy) {
        case ParsePolicy::fail_closed:
          pred_unsafe = true;
          pred_adv = true;
          break;
        case ParsePolicy::fail_open:
          pred_unsafe = false;
          pred_adv = false;
          break;
        case ParsePolicy::error:
          throw std::runtime_error("unparseable prediction in benchmark " + p.benchmark);
      }
    }
    bench.safety.confusion.add(p.gold_safety == SafetyClass::unsafe_, pred_unsafe);
    bench.adversarial.confusion.add(p.gold_adversarial == AdversarialClass::adversarial,
                                    pred_adv);
  }

  double macro_n = 0;
  MetricSet macro_s{}, macro_a{};
  for (auto& [name, bench] : report.per_benchmark) {
    bench.safety.metric_set = metrics(bench.safety.confusion);
    bench.adversarial.metric_set = metrics(bench.adversarial.confusion);
    auto sel = select_metric(bench.meta);
    bench.safety.selection = sel;
    bench.adversarial.selection = sel;
    report.aggregate_safety.confusion += bench.safety.confusion;
    report.aggregate_adversarial.confusion += bench.adversarial.confusion;
    macro_s.precision += bench.safety.metric_set.precision;
    macro_s.recall += bench.safety.metric_set.recall;
    macro_s.f1 += bench.safety.metric_set.f1;
    macro_s.fpr += bench.safety.metric_set.fpr;
    macro_a.precision += bench.adversarial.metric_set.precision;
    macro_a.recall += bench.adversarial.metric_set.recall;
    macro_a.f1 += bench.adversarial.metric_set.f1;
    macro_a.fpr += bench.adversarial.metric_set.fpr;
    macro_n += 1;
  }
  if (macro_n > 0) {
    for (auto* m : {&macro_s, &macro_a}) {
      m->precision /= macro_n;
      m->recall /= macro_n;
      m->f1 /= macro_n;
      m->fpr /= macro_n;
    }
  }
  report.macro_safety = macro_s;
  report.macro_adversarial = macro_a;
  report.aggregate_safety.metric_set = metrics(report.aggregate_safety.confusion);
  report.aggregate_adversarial.metric_set = metrics(report.aggregate_adversarial.confusion);
  return report;
}

inline LabeledPrediction prediction_from_output(const ContentRecord& record,
                                                const std::string& benchmark,
                                                const std::string& raw_output, bool reasoning) {
  LabeledPrediction p;
  p.benchmark = benchmark;
  p.gold_safety = record.safety;
  p.gold_adversarial = record.adversarial;
  try {
    p.verdict = reasoning ? parsing::parse_reasoning(raw_output)
                          : parsing::parse_non_reasoning(raw_output);
  } catch (const parsing::ParseError&) {
    p.verdict = std::nullopt;
  }
  return p;
}

// ---- report rendering ----

inline nlohmann::json to_json(const MetricSet& m) {
  auto flags = nlohmann::json::array();
  for (auto f : m.degenerate_flags) flags.push_back(to_string(f));
  return {{"precision", m.precision}, {"recall", m.recall},     {"f1", m.f1},
          {"fpr", m.fpr},             {"degenerate_flags", flags}};
}

inline nlohmann::json to_json(const Confusion& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json per;
  for (const auto& [name, bench] : r.per_benchmark) {
    per[name] = {
        {"size", bench.meta.size},
        {"positive_only", bench.meta.positive_only},
        {"metric", bench.safety.selection == MetricSelection::recall_only ? "recall" : "f1"},
        {"parse_failures", bench.parse_failures},
        {"safety", {{"confusion", to_json(bench.safety.confusion)},
                    {"metrics", to_json(bench.safety.metric_set)}}},
        {"adversarial", {{"confusion", to_json(bench.adversarial.confusion)},
                         {"metrics", to_json(bench.adversarial.metric_set)}}},
    };
  }
  return {{"per_benchmark", per},
          {"aggregate",
           {{"safety", {{"confusion", to_json(r.aggregate_safety.confusion)},
                        {"metrics", to_json(r.aggregate_safety.metric_set)}}},
            {"adversarial", {{"confusion", to_json(r.aggregate_adversarial.confusion)},
                             {"metrics", to_json(r.aggregate_adversarial.metric_set)}}}}},
          {"macro",
           {{"safety", to_json(r.macro_safety)}, {"adversarial", to_json(r.macro_adversarial)}}},
          {"parse_failures", r.parse_failures},
          {"model_id", r.model_id},
          {"mode", r.mode},
          {"complete", r.complete}};
}

// Aligned-column text table, one row per benchmark plus the pooled aggregate.
inline std::string render_table(const EvalReport& r) {
  std::ostringstream out;
  out << std::left << std::setw(24) << "Benchmark" << std::right;
  for (const char* h : {"S-Prec", "S-Rec", "S-F1", "S-FPR", "A-Prec", "A-Rec", "A-F1", "A-FPR"})
    out << std::setw(8) << h;
  out << "\n";
  auto row = [&](const std::string& name, const MetricSet& s, const MetricSet& a) {
    out << std::left << std::setw(24) << name << std::right << std::fixed
        << std::setprecision(2);
    for (double v : {s.precision, s.recall, s.f1, s.fpr, a.precision, a.recall, a.f1, a.fpr})
      out << std::setw(8) << v;
    out << "\n";
  };
  for (const auto& [name, bench] : r.per_benchmark)
    row(name, bench.safety.metric_set, bench.adversarial.metric_set);
  row("AGGREGATE (pooled)", r.aggregate_safety.metric_set, r.aggregate_adversarial.metric_set);
  row("AGGREGATE (macro)", r.macro_safety, r.macro_adversarial);
  return out.str();
}

}  // namespace forge::evalkit

#endif  // FORGE_EVAL_HPP
