#ifndef FORGE_CORE_HPP
#define FORGE_CORE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace forge::core {

using json = nlohmann::json;

enum class SafetyClass { safe, unsafe_ };
enum class AdversarialClass { adversarial, non_adversarial };

inline std::string to_string(SafetyClass c) {
  return c == SafetyClass::safe ? "safe" : "unsafe";
}

inline std::string to_string(AdversarialClass c) {
  return c == AdversarialClass::adversarial ? "adversarial" : "non_adversarial";
}

inline SafetyClass safety_from_string(const std::string& s) {
  if (s == "safe") return SafetyClass::safe;
  if (s == "unsafe") return SafetyClass::unsafe_;
  throw std::invalid_argument("unknown safety class: " + s);
}

inline AdversarialClass adversarial_from_string(const std::string& s) {
  if (s == "adversarial") return AdversarialClass::adversarial;
  if (s == "non_adversarial") return AdversarialClass::non_adversarial;
  throw std::invalid_argument("unknown adversarial class: " + s);
}

enum class Role { system, user, assistant, tool };

inline std::string to_string(Role r) {
  switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    case Role::tool: return "tool";
  }
  throw std::logic_error("bad role");
}

inline Role role_from_string(const std::string& s) {
  if (s == "system") return Role::system;
  if (s == "user") return Role::user;
  if (s == "assistant") return Role::assistant;
  if (s == "tool") return Role::tool;
  throw std::invalid_argument("unknown role: " + s);
}

struct Turn {
  Role role = Role::user;
  std::string text;
  std::optional<std::string> tool_name;
  std::optional<std::string> tool_args;

  bool is_tool_invocation() const { return tool_name.has_value(); }
  bool operator==(const Turn&) const = default;
};

enum class ContentKind { standalone, conversation, agentic };

inline std::string to_string(ContentKind k) {
  switch (k) {
    case ContentKind::standalone: return "standalone";
    case ContentKind::conversation: return "conversation";
    case ContentKind::agentic: return "agentic";
  }
  throw std::logic_error("bad kind");
}

inline ContentKind kind_from_string(const std::string& s) {
  if (s == "standalone") return ContentKind::standalone;
  if (s == "conversation") return ContentKind::conversation;
  if (s == "agentic") return ContentKind::agentic;
  throw std::invalid_argument("unknown content kind: " + s);
}

// Either a standalone text or an ordered list of turns, matching kind.
struct Content {
  ContentKind kind = ContentKind::standalone;
  std::optional<std::string> text;
  std::optional<std::vector<Turn>> turns;

  static Content standalone(std::string t) {
    Content c;
    c.kind = ContentKind::standalone;
    c.text = std::move(t);
    return c;
  }

  static Content conversation(std::vector<Turn> t) {
    Content c;
    c.kind = ContentKind::conversation;
    c.turns = std::move(t);
    return c;
  }

  static Content agentic(std::vector<Turn> t) {
    Content c;
    c.kind = ContentKind::agentic;
    c.turns = std::move(t);
    return c;
  }

  void validate() const {
    if (kind == ContentKind::standalone) {
      if (!text || turns) throw std::invalid_argument("standalone content must carry text only");
      return;
    }
    if (text || !turns) throw std::invalid_argument(to_string(kind) + " content must carry turns only");
    if (turns->empty()) throw std::invalid_argument("turn list must not be empty");
    if (kind == ContentKind::agentic) {
      bool has_tool = false;
      for (const auto& t : *turns) {
        if (t.role == Role::tool || t.is_tool_invocation()) has_tool = true;
      }
      if (!has_tool) throw std::invalid_argument("agentic content requires at least one tool turn");
    } else {
      // Conversation: optional leading system turn, then strict user/assistant alternation.
      std::size_t i = 0;
      if ((*turns)[0].role == Role::system) i = 1;
      Role expect = Role::user;
      for (; i < turns->size(); ++i) {
        if ((*turns)[i].role != expect)
          throw std::invalid_argument("conversation turns must alternate user/assistant");
        expect = expect == Role::user ? Role::assistant : Role::user;
      }
    }
  }

  bool operator==(const Content&) const = default;
};

struct ContentRecord {
  std::string id;
  Content content;
  SafetyClass safety = SafetyClass::safe;
  std::vector<std::string> categories;  // O-codes, nonempty iff unsafe
  AdversarialClass adversarial = AdversarialClass::non_adversarial;
  std::optional<std::string> strategy_category;
  std::optional<std::string> strategy;
  std::optional<std::string> strategy_technique;
  std::optional<std::string> content_format;
  std::string language = "en";
  std::uint64_t token_count = 0;

  static constexpr std::uint64_t kMaxTokens = 32000;

  void validate() const {
    content.validate();
    if ((safety == SafetyClass::unsafe_) != !categories.empty())
      throw std::invalid_argument("categories must be nonempty iff record is unsafe");
    if (token_count > kMaxTokens)
      throw std::invalid_argument("token_count exceeds 32000 token bound");
  }

  bool operator==(const ContentRecord&) const = default;
};

struct Verdict {
  SafetyClass safety = SafetyClass::safe;
  std::vector<std::string> categories;
  AdversarialClass adversarial = AdversarialClass::non_adversarial;
  std::optional<std::string> safety_reasoning;
  std::optional<std::string> adversarial_reasoning;

  bool operator==(const Verdict&) const = default;
};

enum class Quadrant { safe_nonadv, unsafe_nonadv, safe_adv, unsafe_adv };

inline std::string to_string(Quadrant q) {
  switch (q) {
    case Quadrant::safe_nonadv: return "safe_nonadv";
    case Quadrant::unsafe_nonadv: return "unsafe_nonadv";
    case Quadrant::safe_adv: return "safe_adv";
    case Quadrant::unsafe_adv: return "unsafe_adv";
  }
  throw std::logic_error("bad quadrant");
}

inline Quadrant quadrant(SafetyClass s, AdversarialClass a) {
  if (s == SafetyClass::safe)
    return a == AdversarialClass::adversarial ? Quadrant::safe_adv : Quadrant::safe_nonadv;
  return a == AdversarialClass::adversarial ? Quadrant::unsafe_adv : Quadrant::unsafe_nonadv;
}

inline Quadrant quadrant(const ContentRecord& r) { return quadrant(r.safety, r.adversarial); }

// Whitespace token counter; callers may plug their own.
inline std::uint64_t count_tokens(const std::string& text) {
  std::uint64_t n = 0;
  bool in_tok = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      in_tok = false;
    } else if (!in_tok) {
      in_tok = true;
      ++n;
    }
  }
  return n;
}

using TokenCounter = std::uint64_t (*)(const std::string&);

struct StatsKey {
  SafetyClass safety;
  AdversarialClass adversarial;
  ContentKind kind;
  auto operator<=>(const StatsKey&) const = default;
};

using StatsTable = std::map<StatsKey, std::uint64_t>;

template <typename Range>
StatsTable dataset_stats(const Range& records) {
  StatsTable table;
  for (const ContentRecord& r : records) {
    ++table[StatsKey{r.safety, r.adversarial, r.content.kind}];
  }
  return table;
}

// ---- JSON serialization (one ContentRecord per JSONL line) ----

inline json to_json(const Turn& t) {
  json j{{"role", to_string(t.role)}, {"text", t.text}};
  if (t.tool_name) j["tool_name"] = *t.tool_name;
  if (t.tool_args) j["tool_args"] = *t.tool_args;
  return j;
}

inline Turn turn_from_json(const json& j) {
  Turn t;
  t.role = role_from_string(j.at("role").get<std::string>());
  t.text = j.at("text").get<std::string>();
  if (j.contains("tool_name")) t.tool_name = j["tool_name"].get<std::string>();
  if (j.contains("tool_args")) t.tool_args = j["tool_args"].get<std::string>();
  return t;
}

inline json to_json(const Content& c) {
  json j{{"kind", to_string(c.kind)}};
  if (c.text) j["text"] = *c.text;
  if (c.turns) {
    json arr = json::array();
    for (const auto& t : *c.turns) arr.push_back(to_json(t));
    j["turns"] = arr;
  }
  return j;
}

inline Content content_from_json(const json& j) {
  Content c;
  c.kind = kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("text")) c.text = j["text"].get<std::string>();
  if (j.contains("turns")) {
    std::vector<Turn> turns;
    for (const auto& t : j["turns"]) turns.push_back(turn_from_json(t));
    c.turns = std::move(turns);
  }
  return c;
}

inline json to_json(const ContentRecord& r) {
  json j{{"id", r.id},
         {"content", to_json(r.content)},
         {"safety", to_string(r.safety)},
         {"categories", r.categories},
         {"adversarial", to_string(r.adversarial)},
         {"language", r.language},
         {"token_count", r.token_count}};
  if (r.strategy_category) j["strategy_category"] = *r.strategy_category;
  if (r.strategy) j["strategy"] = *r.strategy;
  if (r.strategy_technique) j["strategy_technique"] = *r.strategy_technique;
  if (r.content_format) j["content_format"] = *r.content_format;
  return j;
}

inline ContentRecord record_from_json(const json& j) {
  ContentRecord r;
  r.id = j.at("id").get<std::string>();
  r.content = content_from_json(j.at("content"));
  r.safety = safety_from_string(j.at("safety").get<std::string>());
  r.categories = j.value("categories", std::vector<std::string>{});
  r.adversarial = adversarial_from_string(j.at("adversarial").get<std::string>());
  if (j.contains("strategy_category")) r.strategy_category = j["strategy_category"].get<std::string>();
  if (j.contains("strategy")) r.strategy = j["strategy"].get<std::string>();
  if (j.contains("strategy_technique")) r.strategy_technique = j["strategy_technique"].get<std::string>();
  if (j.contains("content_format")) r.content_format = j["content_format"].get<std::string>();
  r.language = j.value("language", std::string("en"));
  r.token_count = j.value("token_count", std::uint64_t{0});
  return r;
}

inline std::string record_to_line(const ContentRecord& r) { return to_json(r).dump(); }

inline ContentRecord record_from_line(const std::string& line) {
  return record_from_json(json::parse(line));
}

}  // namespace forge::core

#endif  // FORGE_CORE_HPP
