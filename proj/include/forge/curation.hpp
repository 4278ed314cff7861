#ifndef FORGE_CURATION_HPP
#define FORGE_CURATION_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "forge/core.hpp"
#include "forge/taxonomy.hpp"

namespace forge::curation {

using core::ContentRecord;

// ---- ROUGE-L ----

// Lowercase, split on whitespace and punctuation boundaries.
inline std::vector<std::string> rouge_tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(cur);
  return tokens;
}

template <typename Seq>
std::size_t lcs_length(const Seq& a, const Seq& b) {
  const std::size_t n = a.size(), m = b.size();
  if (n == 0 || m == 0) return 0;
  std::vector<std::size_t> prev(m + 1, 0), cur(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

// F1 = 2PR/(P+R) with P = LCS/|candidate|, R = LCS/|reference|.
template <typename Seq>
double rouge_l_f1(const Seq& candidate, const Seq& reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  const double lcs = static_cast<double>(lcs_length(candidate, reference));
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(candidate.size());
  const double r = lcs / static_cast<double>(reference.size());
  return 2.0 * p * r / (p + r);
}

inline double rouge_l_f1_text(const std::string& candidate, const std::string& reference) {
  return rouge_l_f1(rouge_tokenize(candidate), rouge_tokenize(reference));
}

// ---- providers ----

struct EmbeddingProvider {
  virtual ~EmbeddingProvider() = default;
  // Unit-norm vectors, fixed dimension.
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
};

struct GenerationProvider {
  virtual ~GenerationProvider() = default;
  virtual std::string complete(const std::string& prompt, double temperature,
                               std::size_t max_tokens) = 0;
};

// Deterministic local embedder: hashed bag-of-words, L2-normalized.
class HashEmbedder : public EmbeddingProvider {
 public:
  explicit HashEmbedder(std::size_t dim = 256) : dim_(dim) {}

  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
      std::vector<double> v(dim_, 0.0);
      for (const auto& tok : rouge_tokenize(t)) v[hasher_(tok) % dim_] += 1.0;
      double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
      if (norm > 0)
        for (auto& x : v) x /= norm;
      else
        v[0] = 1.0;
      out.push_back(std::move(v));
    }
    return out;
  }

 private:
  std::size_t dim_;
  std::hash<std::string> hasher_;
};

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("embedding dimension mismatch");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// ---- filtering ----

struct FilterConfig {
  double semantic_threshold = 0.7;
  double rouge_threshold = 0.9;
  std::vector<std::string> refusal_keywords = default_refusal_keywords();

  static std::vector<std::string> default_refusal_keywords() {
    return {"i cannot assist",   "i can't assist",   "i cannot help",
            "i can't help",      "i'm sorry, but i", "i am sorry, but i",
            "i cannot provide",  "i can't provide",  "i cannot comply",
            "i won't be able",   "as an ai, i cannot", "i must decline"};
  }

  void validate() const {
    if (semantic_threshold < 0 || semantic_threshold > 1 || rouge_threshold < 0 ||
        rouge_threshold > 1)
      throw std::invalid_argument("filter thresholds must be within [0,1]");
  }
};

enum class FilterCause { kept, semantic_duplicate, syntactic_duplicate, refusal };

inline std::string to_string(FilterCause c) {
  switch (c) {
    case FilterCause::kept: return "kept";
    case FilterCause::semantic_duplicate: return "semantic_duplicate";
    case FilterCause::syntactic_duplicate: return "syntactic_duplicate";
    case FilterCause::refusal: return "refusal";
  }
  throw std::logic_error("bad filter cause");
}

struct FilterDecision {
  bool keep = false;
  FilterCause cause = FilterCause::kept;
  std::optional<std::string> matched_id;
  std::optional<double> score;
};

inline std::string record_text(const ContentRecord& r) {
  if (r.content.kind == core::ContentKind::standalone) return r.content.text.value_or("");
  std::string out;
  for (const auto& t : *r.content.turns) {
    if (!out.empty()) out += "\n";
    out += t.text;
  }
  return out;
}

// Linear-scan index over accepted records. Embeddings are cached on insert.
class CorpusIndex {
 public:
  struct Entry {
    std::string id;
    std::string text;
    std::vector<std::string> tokens;
    std::vector<double> embedding;
  };

  void insert(const ContentRecord& r, std::vector<double> embedding) {
    std::string text = record_text(r);
    entries_.push_back({r.id, text, rouge_tokenize(text), std::move(embedding)});
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<Entry> entries_;
};

inline bool matches_refusal(const std::string& text, const std::vector<std::string>& keywords) {
  std::string lower;
  lower.reserve(text.size());
  for (unsigned char c : text) lower.push_back(static_cast<char>(std::tolower(c)));
  for (const auto& kw : keywords) {
    if (lower.find(kw) != std::string::npos) return true;
  }
  return false;
}

// Semantic pass first, then ROUGE-L, then refusal keywords; strict > comparisons.
inline FilterDecision filter_record(const ContentRecord& record, CorpusIndex& index,
                                    EmbeddingProvider& embedder, const FilterConfig& config) {
  config.validate();
  const std::string text = record_text(record);
  auto embedding = embedder.embed({text}).at(0);

  double best_sem = -1.0;
  const CorpusIndex::Entry* best_sem_entry = nullptr;
  for (const auto& e : index.entries()) {
    double s = cosine(embedding, e.embedding);
    if (s > best_sem) {
      best_sem = s;
      best_sem_entry = &e;
    }
  }
  if (best_sem_entry && best_sem > config.semantic_threshold)
    return {false, FilterCause::semantic_duplicate, best_sem_entry->id, best_sem};

  const auto tokens = rouge_tokenize(text);
  double best_rouge = -1.0;
  const CorpusIndex::Entry* best_rouge_entry = nullptr;
  for (const auto& e : index.entries()) {
    double s = rouge_l_f1(tokens, e.tokens);
    if (s > best_rouge) {
      best_rouge = s;
      best_rouge_entry = &e;
    }
  }
  if (best_rouge_entry && best_rouge > config.rouge_threshold)
    return {false, FilterCause::syntactic_duplicate, best_rouge_entry->id, best_rouge};

  if (matches_refusal(text, config.refusal_keywords))
    return {false, FilterCause::refusal, std::nullopt, std::nullopt};

  index.insert(record, std::move(embedding));
  return {true, FilterCause::kept, std::nullopt, std::nullopt};
}

struct DedupResult {
  std::vector<ContentRecord> kept;
  std::vector<FilterDecision> decisions;  // 1:1 with input order
};

inline DedupResult dedup_stream(const std::vector<ContentRecord>& records,
                                EmbeddingProvider& embedder, const FilterConfig& config) {
  DedupResult result;
  CorpusIndex index;
  for (const auto& r : records) {
    auto decision = filter_record(r, index, embedder, config);
    if (decision.keep) result.kept.push_back(r);
    result.decisions.push_back(std::move(decision));
  }
  return result;
}

// ---- augmentation ----

enum class Transform { char_noise, typo, leetspeak, paraphrase, reorder };

inline Transform transform_from_string(const std::string& s) {
  if (s == "char_noise") return Transform::char_noise;
  if (s == "typo") return Transform::typo;
  if (s == "leetspeak") return Transform::leetspeak;
  if (s == "paraphrase") return Transform::paraphrase;
  if (s == "reorder") return Transform::reorder;
  throw std::invalid_argument("unknown transform: " + s);
}

namespace detail {

inline std::optional<char> leet_char(char c) {
  switch (std::tolower(static_cast<unsigned char>(c))) {
    case 'a': return '4';
    case 'e': return '3';
    case 'i': return '1';
    case 'o': return '0';
    case 's': return '5';
    case 't': return '7';
    default: return std::nullopt;
  }
}

// QWERTY horizontal neighbors.
inline char keyboard_neighbor(char c, std::mt19937& rng) {
  static const char* rows[] = {"qwertyuiop", "asdfghjkl", "zxcvbnm", "1234567890"};
  char lower = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (const char* row : rows) {
    const char* pos = std::strchr(row, lower);
    if (!pos) continue;
    std::size_t idx = static_cast<std::size_t>(pos - row);
    std::size_t len = std::strlen(row);
    std::vector<char> cand;
    if (idx > 0) cand.push_back(row[idx - 1]);
    if (idx + 1 < len) cand.push_back(row[idx + 1]);
    return cand[rng() % cand.size()];
  }
  return c;
}

// Pick round(rate * n) distinct indices, deterministically for a fixed rng state.
inline std::vector<std::size_t> pick_indices(std::size_t n, double rate, std::mt19937& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  auto k = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
  idx.resize(std::min(k, n));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace detail

inline std::string augment(const std::string& text, Transform transform, double rate,
                           std::uint64_t seed, GenerationProvider* provider = nullptr) {
  if (rate < 0.0 || rate > 1.0) throw std::invalid_argument("rate must be within [0,1]");
  if (transform == Transform::paraphrase) {
    if (!provider)
      throw std::invalid_argument("paraphrase transform requires a generation provider");
    return provider->complete("Paraphrase the following text, preserving its meaning:\n\n" + text,
                              0.7, 2048);
  }
  if (rate == 0.0) return text;
  std::mt19937 rng(static_cast<std::uint32_t>(seed));
  std::string out = text;

  switch (transform) {
    case Transform::leetspeak: {
      std::vector<std::size_t> eligible;
      for (std::size_t i = 0; i < out.size(); ++i)
        if (detail::leet_char(out[i])) eligible.push_back(i);
      for (std::size_t k : detail::pick_indices(eligible.size(), rate, rng))
        out[eligible[k]] = *detail::leet_char(out[eligible[k]]);
      break;
    }
    case Transform::char_noise: {
      static const char alphabet[] = "abcdefghijklmnopqrstuvwxyz";
      std::vector<std::size_t> eligible;
      for (std::size_t i = 0; i < out.size(); ++i)
        if (std::isalpha(static_cast<unsigned char>(out[i]))) eligible.push_back(i);
      for (std::size_t k : detail::pick_indices(eligible.size(), rate, rng))
        out[eligible[k]] = alphabet[rng() % 26];
      break;
    }
    case Transform::typo: {
      std::vector<std::size_t> eligible;
      for (std::size_t i = 0; i < out.size(); ++i)
        if (std::isalnum(static_cast<unsigned char>(out[i]))) eligible.push_back(i);
      auto picks = detail::pick_indices(eligible.size(), rate, rng);
      // Apply right to left so insertions do not shift pending positions.
      for (auto it = picks.rbegin(); it != picks.rend(); ++it) {
        std::size_t i = eligible[*it];
        if (rng() % 2 == 0 && i + 1 < out.size() &&
            std::isalnum(static_cast<unsigned char>(out[i + 1]))) {
          std::swap(out[i], out[i + 1]);
        } else {
          out.insert(out.begin() + static_cast<std::ptrdiff_t>(i) + 1,
                     detail::keyboard_neighbor(out[i], rng));
        }
      }
      break;
    }
    case Transform::reorder: {
      // Clause-level segments split at , ; . boundaries.
      std::vector<std::string> segments;
      std::string cur;
      for (char c : out) {
        cur.push_back(c);
        if (c == ',' || c == ';' || c == '.') {
          segments.push_back(cur);
          cur.clear();
        }
      }
      if (!cur.empty()) segments.push_back(cur);
      if (segments.size() > 1) {
        std::shuffle(segments.begin(), segments.end(), rng);
        out.clear();
        for (std::size_t i = 0; i < segments.size(); ++i) {
          std::string seg = segments[i];
          if (i > 0 && !seg.empty() && seg.front() != ' ') out += " ";
          while (!seg.empty() && seg.front() == ' ') seg.erase(seg.begin());
          out += seg;
        }
      }
      break;
    }
    case Transform::paraphrase:
      break;  // handled above
  }
  return out;
}

// Labels and metadata are carried over untouched; only text bodies are perturbed.
inline ContentRecord augment_record(const ContentRecord& record, Transform transform, double rate,
                                    std::uint64_t seed, GenerationProvider* provider = nullptr) {
  ContentRecord out = record;
  if (out.content.kind == core::ContentKind::standalone) {
    out.content.text = augment(*out.content.text, transform, rate, seed, provider);
  } else {
    std::uint64_t turn_seed = seed;
    for (auto& t : *out.content.turns)
      t.text = augment(t.text, transform, rate, turn_seed++, provider);
  }
  return out;
}

// ---- generation orchestration ----

struct GenerationSpec {
  std::optional<std::string> category;   // safety O-code
  std::optional<std::string> strategy;   // adversarial technique
  std::string content_format = "ask_question";
  std::size_t count = 1;
  double temperature = 1.0;
};

inline const std::vector<std::pair<std::string, std::string>>& content_formats() {
  static const std::vector<std::pair<std::string, std::string>> formats = {
      {"ask_question",
       "Inquiries posed with a desire for information or clarification with either a genuine or "
       "malicious intention."},
      {"statement",
       "A clear and concise declaration or assertion of a fact, opinion, or position on a "
       "particular matter."},
      {"tweet",
       "Short messages posted on Twitter, limited to a specific character count, often used to "
       "share thoughts, news, or engage with others."},
      {"instruction",
       "Directions or guidelines explaining how to perform a specific task or process, often "
       "step-by-step and clear."},
      {"real_life_experiences_shared_by_people",
       "Personal anecdotes or stories shared by individuals, often reflecting genuine "
       "experiences and emotions, narrated in the first person."},
      {"short_story",
       "A brief, self-contained narrative with a beginning, middle, and end, often focusing on "
       "a single theme or event."},
      {"responding_to_someone",
       "Replies or comments addressing another person's statement or question, providing "
       "feedback, answers, or additional information."},
      {"social_post_reply",
       "Comments or responses to posts on social media platforms, often short and engaging with "
       "the original content."},
      {"email",
       "Electronic messages sent via email platforms, ranging from casual to formal "
       "communication, including greetings, body content, and signatures."},
      {"forum_post",
       "Contributions to online discussion forums, where users post messages to start or "
       "participate in discussions on specific topics."},
      {"announcement",
       "Official statements made to inform a group of people about important news, updates, or "
       "events."},
  };
  return formats;
}

inline bool is_known_content_format(const std::string& name) {
  return std::any_of(content_formats().begin(), content_formats().end(),
                     [&](const auto& f) { return f.first == name; });
}

inline std::vector<ContentRecord> generate_batch(const GenerationSpec& spec,
                                                 GenerationProvider& provider,
                                                 std::size_t max_retries = 2) {
  if (!spec.category && !spec.strategy)
    throw std::invalid_argument("generation spec needs a category or a strategy");
  if (!is_known_content_format(spec.content_format))
    throw std::invalid_argument("unknown content format: " + spec.content_format);

  std::string format_desc;
  for (const auto& [name, desc] : content_formats())
    if (name == spec.content_format) format_desc = desc;

  std::string target;
  if (spec.category) {
    const auto& cat = taxonomy::lookup_category(*spec.category);
    target = "unsafe content violating " + cat.code + ": " + cat.name + " (" + cat.should_not + ")";
  } else {
    const auto& strategies = taxonomy::adversarial_strategies();
    auto it = std::find_if(strategies.begin(), strategies.end(),
                           [&](const auto& s) { return s.technique == *spec.strategy; });
    if (it == strategies.end())
      throw std::invalid_argument("unknown adversarial technique: " + *spec.strategy);
    target = "an adversarial prompt using the \"" + it->technique + "\" technique (" +
             it->category + " / " + it->strategy + ")";
  }

  std::vector<ContentRecord> out;
  for (std::size_t i = 0; i < spec.count; ++i) {
    std::string prompt = "Generate one example of " + target + " written as " +
                         spec.content_format + ": " + format_desc +
                         "\nRespond with the example text only. Variant " + std::to_string(i + 1) +
                         ".";
    std::string text;
    std::size_t attempt = 0;
    for (;;) {
      try {
        text = provider.complete(prompt, spec.temperature, 1024);
        break;
      } catch (const std::exception&) {
        if (++attempt > max_retries) throw;
      }
    }
    ContentRecord r;
    r.id = "gen-" + spec.content_format + "-" + std::to_string(i);
    r.content = core::Content::standalone(text);
    if (spec.category) {
      r.safety = core::SafetyClass::unsafe_;
      r.categories = {*spec.category};
      r.adversarial = core::AdversarialClass::non_adversarial;
    } else {
      r.safety = core::SafetyClass::safe;
      r.adversarial = core::AdversarialClass::adversarial;
      r.strategy_technique = spec.strategy;
    }
    r.content_format = spec.content_format;
    r.token_count = core::count_tokens(text);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace forge::curation

#endif  // FORGE_CURATION_HPP
