// forge: command-line front end for the guardrail data toolkit.

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "forge/benchkit.hpp"
#include "forge/core.hpp"
#include "forge/curation.hpp"
#include "forge/eval.hpp"
#include "forge/gateway.hpp"
#include "forge/parsing.hpp"
#include "forge/taxonomy.hpp"
#include "forge/templating.hpp"

namespace {

using forge::core::ContentRecord;

std::vector<ContentRecord> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open input file: " + path);
  std::vector<ContentRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      records.push_back(forge::core::record_from_line(line));
    } catch (const std::exception& e) {
      throw std::runtime_error("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return records;
}

void write_records(const std::string& path, const std::vector<ContentRecord>& records) {
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!path.empty() && path != "-") {
    file.open(path);
    if (!file) throw std::runtime_error("cannot open output file: " + path);
    out = &file;
  }
  for (const auto& r : records) *out << forge::core::record_to_line(r) << "\n";
}

// Pseudo-translator for offline runs: tags each body with the target language.
struct TaggingTranslator : forge::benchkit::TranslationProvider {
  std::string translate(const std::string& text, const std::string& lang) override {
    return "[" + lang + "] " + text;
  }
};

int cmd_stats(const std::string& input) {
  auto records = read_records(input);
  auto table = forge::core::dataset_stats(records);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [key, count] : table) {
    rows.push_back({{"safety", forge::core::to_string(key.safety)},
                    {"adversarial", forge::core::to_string(key.adversarial)},
                    {"kind", forge::core::to_string(key.kind)},
                    {"count", count}});
  }
  std::cout << nlohmann::json{{"total", records.size()}, {"cells", rows}}.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forge: guardrail data curation and evaluation toolkit"};
  app.require_subcommand(1);

  try {
    // ---- stats ----
    auto* stats = app.add_subcommand("stats", "Summarize a JSONL corpus by label quadrant and kind");
    std::string stats_input;
    stats->add_option("--input", stats_input, "JSONL corpus")->required();

    // ---- curate / dedup ----
    std::string cur_input, cur_output;
    double cur_sem = 0.7, cur_rouge = 0.9;
    bool cur_decisions = false;
    for (auto* cmd : {app.add_subcommand("curate", "Validate and near-duplicate filter a corpus"),
                      app.add_subcommand("dedup", "Near-duplicate and refusal filter a corpus")}) {
      cmd->add_option("--input", cur_input, "JSONL corpus")->required();
      cmd->add_option("--output", cur_output, "output JSONL (default stdout)");
      cmd->add_option("--semantic-threshold", cur_sem, "cosine similarity threshold");
      cmd->add_option("--rouge-threshold", cur_rouge, "ROUGE-L F1 threshold");
      cmd->add_flag("--decisions", cur_decisions, "print per-record decisions to stderr");
    }

    // ---- augment ----
    auto* augment = app.add_subcommand("augment", "Apply a text perturbation to every record");
    std::string aug_input, aug_output, aug_transform = "char_noise";
    double aug_rate = 0.1;
    std::uint64_t aug_seed = 0;
    augment->add_option("--input", aug_input, "JSONL corpus")->required();
    augment->add_option("--output", aug_output, "output JSONL (default stdout)");
    augment->add_option("--transform", aug_transform,
                        "char_noise|typo|leetspeak|reorder (paraphrase needs a provider)");
    augment->add_option("--rate", aug_rate, "perturbation rate in [0,1]");
    augment->add_option("--seed", aug_seed, "RNG seed");

    // ---- render ----
    auto* render = app.add_subcommand("render", "Render the moderation chat prompt for a record");
    std::string ren_input, ren_text, ren_mode = "non_reasoning", ren_system;
    std::size_t ren_index = 0;
    render->add_option("--input", ren_input, "JSONL corpus (renders --index)");
    render->add_option("--text", ren_text, "standalone text instead of --input");
    render->add_option("--index", ren_index, "record index within --input");
    render->add_option("--mode", ren_mode, "reasoning|non_reasoning");
    render->add_option("--system", ren_system, "optional system text");

    // ---- reason ----
    auto* reason = app.add_subcommand(
        "reason", "Emit reasoning-synthesis prompts, one JSON object per record");
    std::string rsn_input, rsn_output, rsn_dimension = "safety";
    reason->add_option("--input", rsn_input, "JSONL corpus")->required();
    reason->add_option("--output", rsn_output, "output JSONL (default stdout)");
    reason->add_option("--dimension", rsn_dimension, "safety|adversarial");

    // ---- eval ----
    auto* eval = app.add_subcommand("eval", "Score prediction rows into a metric report");
    std::string ev_input, ev_mode = "non_reasoning", ev_policy = "fail-closed",
                ev_format = "json";
    std::vector<std::string> ev_positive_only;
    eval->add_option("--predictions", ev_input,
                     "JSONL rows: {benchmark, safety, adversarial, output}")
        ->required();
    eval->add_option("--mode", ev_mode, "parser for the output field: reasoning|non_reasoning");
    eval->add_option("--policy", ev_policy, "fail-closed|fail-open|error");
    eval->add_option("--positive-only", ev_positive_only,
                     "benchmark names scored by recall only (repeatable)");
    eval->add_option("--format", ev_format, "json|table");

    // ---- inject ----
    auto* inject = app.add_subcommand("inject", "Build long-context injection records");
    std::string in_payload, in_bucket = "8k-16k", in_position = "middle", in_output,
                in_padder_dir;
    bool in_replicate = false;
    bool in_unsafe = false, in_adversarial = true;
    std::vector<std::string> in_categories;
    inject->add_option("--payload", in_payload, "payload text to hide in filler");
    inject->add_option("--bucket", in_bucket, "8k-16k|16k-24k|24k-32k");
    inject->add_option("--position", in_position,
                       "begin|middle|end|metadata_section|comment_thread or fraction in [0,1]");
    inject->add_option("--output", in_output, "output JSONL (default stdout)");
    inject->add_option("--padder-dir", in_padder_dir, "directory of .txt filler paragraphs");
    inject->add_flag("--replicate", in_replicate, "emit the full 282-record corpus");
    inject->add_flag("--unsafe", in_unsafe, "label the payload unsafe");
    inject->add_flag("--adversarial,!--non-adversarial", in_adversarial,
                     "payload adversarial label (default adversarial)");
    inject->add_option("--category", in_categories, "O-codes when --unsafe (repeatable)");

    // ---- translate ----
    auto* translate = app.add_subcommand("translate", "Produce a translated twin corpus");
    std::string tr_input, tr_output, tr_language, tr_provider = "tag";
    translate->add_option("--input", tr_input, "JSONL corpus (English)")->required();
    translate->add_option("--output", tr_output, "output JSONL (default stdout)");
    translate->add_option("--language", tr_language, "fr|fr-CA|de|ja|nl|es|pt-BR|it")->required();
    translate->add_option("--provider", tr_provider, "tag|identity");

    // ---- serve ----
    auto* serve = app.add_subcommand("serve", "Run the moderation gateway HTTP service");
    std::string sv_upstream, sv_mode = "non_reasoning", sv_policy = "fail_closed";
    int sv_port = 8080;
    bool sv_echo = false;
    serve->add_option("--upstream", sv_upstream, "upstream completion endpoint URL");
    serve->add_option("--port", sv_port, "listen port");
    serve->add_option("--mode", sv_mode, "default moderation mode");
    serve->add_option("--policy", sv_policy, "fail_closed|fail_open|error");
    serve->add_flag("--echo", sv_echo, "serve a fixed safe verdict without an upstream");

    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      int code = app.exit(e);
      return code == 0 ? 0 : 2;  // usage problems exit 2, --help exits 0
    }

    if (stats->parsed()) return cmd_stats(stats_input);

    if (app.get_subcommand("curate")->parsed() || app.get_subcommand("dedup")->parsed()) {
      auto records = read_records(cur_input);
      for (const auto& r : records) r.validate();
      forge::curation::FilterConfig config;
      config.semantic_threshold = cur_sem;
      config.rouge_threshold = cur_rouge;
      forge::curation::HashEmbedder embedder;
      auto result = forge::curation::dedup_stream(records, embedder, config);
      if (cur_decisions) {
        for (std::size_t i = 0; i < result.decisions.size(); ++i) {
          const auto& d = result.decisions[i];
          std::cerr << records[i].id << "\t" << forge::curation::to_string(d.cause);
          if (d.matched_id) std::cerr << "\t" << *d.matched_id;
          std::cerr << "\n";
        }
      }
      write_records(cur_output, result.kept);
      std::cerr << "kept " << result.kept.size() << " of " << records.size() << " records\n";
      return 0;
    }

    if (augment->parsed()) {
      auto transform = forge::curation::transform_from_string(aug_transform);
      auto records = read_records(aug_input);
      std::vector<ContentRecord> out;
      for (std::size_t i = 0; i < records.size(); ++i)
        out.push_back(forge::curation::augment_record(records[i], transform, aug_rate,
                                                      aug_seed + i));
      write_records(aug_output, out);
      return 0;
    }

    if (render->parsed()) {
      forge::templating::ModerationRequest request;
      if (!ren_text.empty()) {
        request.content = forge::core::Content::standalone(ren_text);
      } else if (!ren_input.empty()) {
        auto records = read_records(ren_input);
        if (ren_index >= records.size())
          throw std::runtime_error("--index out of range: corpus has " +
                                   std::to_string(records.size()) + " records");
        request.content = records[ren_index].content;
      } else {
        throw CLI::ValidationError("render", "either --text or --input is required");
      }
      request.mode = forge::templating::mode_from_string(ren_mode);
      if (!ren_system.empty()) request.system_text = ren_system;
      std::cout << forge::templating::render_chat(request);
      return 0;
    }

    if (reason->parsed()) {
      using forge::templating::Dimension;
      Dimension dim;
      if (rsn_dimension == "safety")
        dim = Dimension::safety;
      else if (rsn_dimension == "adversarial")
        dim = Dimension::adversarial;
      else
        throw CLI::ValidationError("reason", "--dimension must be safety or adversarial");
      auto records = read_records(rsn_input);
      std::ostream* out = &std::cout;
      std::ofstream file;
      if (!rsn_output.empty() && rsn_output != "-") {
        file.open(rsn_output);
        if (!file) throw std::runtime_error("cannot open output file: " + rsn_output);
        out = &file;
      }
      for (const auto& r : records) {
        forge::templating::SynthesisTemplateKey key;
        key.dimension = dim;
        key.kind = r.content.kind == forge::core::ContentKind::standalone
                       ? forge::core::ContentKind::standalone
                       : forge::core::ContentKind::conversation;
        std::vector<std::string> violated;
        if (dim == Dimension::safety) {
          key.label_positive = r.safety == forge::core::SafetyClass::unsafe_;
          if (key.label_positive) violated = r.categories;
        } else {
          key.label_positive = r.adversarial == forge::core::AdversarialClass::adversarial;
        }
        auto prompt = forge::templating::populate_synthesis_prompt(key, r.content, violated);
        *out << nlohmann::json{{"id", r.id}, {"prompt", prompt}}.dump() << "\n";
      }
      return 0;
    }

    if (eval->parsed()) {
      std::ifstream in(ev_input);
      if (!in) throw std::runtime_error("cannot open predictions file: " + ev_input);
      const bool reasoning = forge::templating::mode_from_string(ev_mode) ==
                             forge::templating::Mode::reasoning;
      std::vector<forge::evalkit::LabeledPrediction> predictions;
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
          auto row = nlohmann::json::parse(line);
          ContentRecord stub;
          stub.safety = forge::core::safety_from_string(row.at("safety").get<std::string>());
          stub.adversarial =
              forge::core::adversarial_from_string(row.at("adversarial").get<std::string>());
          predictions.push_back(forge::evalkit::prediction_from_output(
              stub, row.at("benchmark").get<std::string>(),
              row.at("output").get<std::string>(), reasoning));
        } catch (const std::exception& e) {
          throw std::runtime_error("line " + std::to_string(lineno) + ": " + e.what());
        }
      }
      std::map<std::string, bool> positive_only;
      for (const auto& b : ev_positive_only) positive_only[b] = true;
      auto report = forge::evalkit::run_eval(predictions, positive_only,
                                             forge::evalkit::parse_policy_from_string(ev_policy));
      if (ev_format == "table")
        std::cout << forge::evalkit::render_table(report);
      else
        std::cout << forge::evalkit::to_json(report).dump(2) << "\n";
      return 0;
    }

    if (inject->parsed()) {
      std::unique_ptr<forge::benchkit::CyclicPadder> padder;
      if (!in_padder_dir.empty())
        padder = std::make_unique<forge::benchkit::CyclicPadder>(
            forge::benchkit::CyclicPadder::from_directory(in_padder_dir));
      else
        padder = std::make_unique<forge::benchkit::CyclicPadder>();
      std::vector<ContentRecord> out;
      if (in_replicate) {
        out = forge::benchkit::replicate_long_context_corpus(*padder);
      } else {
        if (in_payload.empty())
          throw CLI::ValidationError("inject", "--payload is required unless --replicate");
        forge::benchkit::InjectionSpec spec;
        spec.payload = in_payload;
        spec.target_bucket = forge::benchkit::TokenBucket::parse(in_bucket);
        try {
          spec.position = forge::benchkit::position_from_string(in_position);
        } catch (const std::invalid_argument&) {
          spec.position = std::stod(in_position);
        }
        spec.payload_labels.safety = in_unsafe ? forge::core::SafetyClass::unsafe_
                                               : forge::core::SafetyClass::safe;
        spec.payload_labels.categories = in_categories;
        spec.payload_labels.adversarial = in_adversarial
                                              ? forge::core::AdversarialClass::adversarial
                                              : forge::core::AdversarialClass::non_adversarial;
        out.push_back(forge::benchkit::build_long_context("", spec, *padder));
      }
      write_records(in_output, out);
      return 0;
    }

    if (translate->parsed()) {
      std::unique_ptr<forge::benchkit::TranslationProvider> provider;
      if (tr_provider == "tag")
        provider = std::make_unique<TaggingTranslator>();
      else if (tr_provider == "identity")
        provider = std::make_unique<forge::benchkit::IdentityTranslator>();
      else
        throw CLI::ValidationError("translate", "--provider must be tag or identity");
      auto records = read_records(tr_input);
      std::vector<ContentRecord> out;
      for (const auto& r : records)
        out.push_back(forge::benchkit::translate_record(r, tr_language, *provider));
      write_records(tr_output, out);
      return 0;
    }

    if (serve->parsed()) {
      forge::gateway::GatewayConfig config;
      config.upstream_url = sv_upstream;
      config.port = sv_port;
      config.default_mode = forge::templating::mode_from_string(sv_mode);
      config.parse_policy = forge::gateway::policy_from_string(sv_policy);
      std::shared_ptr<forge::gateway::Upstream> upstream;
      if (sv_echo)
        upstream = std::make_shared<forge::gateway::ScriptedUpstream>("safe\nnon_adversarial");
      else if (!sv_upstream.empty())
        upstream = std::make_shared<forge::gateway::HttpUpstream>(config);
      else
        throw CLI::ValidationError("serve", "--upstream is required unless --echo");
      forge::gateway::Service service(config, upstream);
      std::cerr << "listening on " << config.bind_address << ":" << config.port << "\n";
      if (!service.listen()) throw std::runtime_error("failed to bind port " +
                                                      std::to_string(config.port));
      return 0;
    }

    throw CLI::ValidationError("forge", "unknown subcommand");
  } catch (const CLI::Error& e) {
    std::cerr << "error\t" << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error\t" << e.what() << "\n";
    return 1;
  }
}
