#ifndef FORGE_PARSING_HPP
#define FORGE_PARSING_HPP

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <regex>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/core.hpp"
#include "forge/taxonomy.hpp"
#include "forge/templating.hpp"

namespace forge::parsing {

using core::AdversarialClass;
using core::SafetyClass;
using core::Verdict;

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == '\n') {
      lines.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return lines;
}

inline std::vector<std::string> parse_category_list(const std::string& text) {
  std::vector<std::string> codes;
  static const std::regex code_re("O[0-9]+");
  for (auto it = std::sregex_iterator(text.begin(), text.end(), code_re);
       it != std::sregex_iterator(); ++it) {
    std::string code = it->str();
    if (!taxonomy::is_known_category(code))
      throw ParseError("unknown safety category code: " + code);
    codes.push_back(code);
  }
  return codes;
}

}  // namespace detail

// Two-line format: "safe" or "unsafe <codes>", then "adversarial"/"non_adversarial".
inline Verdict parse_non_reasoning(const std::string& text) {
  std::vector<std::string> lines;
  for (const auto& raw : detail::split_lines(text)) {
    auto l = detail::trim(raw);
    if (!l.empty()) lines.push_back(l);
  }
  if (lines.empty()) throw ParseError("line 1 missing: empty output");
  if (lines.size() < 2) throw ParseError("line 2 missing: no adversarial assessment");

  Verdict v;
  const std::string& line1 = lines[0];
  if (line1 == "safe") {
    v.safety = SafetyClass::safe;
  } else if (line1.rfind("unsafe", 0) == 0) {
    v.safety = SafetyClass::unsafe_;
    std::string rest = line1.substr(6);
    if (!rest.empty() && rest[0] == ':') rest = rest.substr(1);  // lenient colon
    if (!rest.empty() && !std::isspace(static_cast<unsigned char>(rest[0])) && rest[0] != 'O')
      throw ParseError("line 1 garbled: " + line1);
    v.categories = detail::parse_category_list(rest);
    if (v.categories.empty())
      throw ParseError("line 1 garbled: unsafe verdict without categories");
  } else {
    throw ParseError("line 1 garbled: " + line1);
  }

  const std::string& line2 = lines[1];
  if (line2 == "adversarial")
    v.adversarial = AdversarialClass::adversarial;
  else if (line2 == "non_adversarial")
    v.adversarial = AdversarialClass::non_adversarial;
  else
    throw ParseError("line 2 garbled: " + line2);

  if (lines.size() > 2) throw ParseError("trailing content after line 2: " + lines[2]);
  return v;
}

inline std::string format_non_reasoning(const Verdict& v) {
  std::string out = core::to_string(v.safety);
  if (v.safety == SafetyClass::unsafe_) {
    out += " ";
    for (std::size_t i = 0; i < v.categories.size(); ++i) {
      if (i) out += ", ";
      out += v.categories[i];
    }
  }
  out += "\n" + core::to_string(v.adversarial);
  return out;
}

namespace detail {

// Five-field reasoning format. Fields carried as "key: value" (optionally quoted keys),
// order-insensitive; a value runs until the next known key or end of text.
inline const std::vector<std::string>& reasoning_fields() {
  static const std::vector<std::string> fields = {
      "safety_risks_assessment_reasoning", "safety_risks_class", "safety_risks_categories",
      "adversarial_attacks_assessment_reasoning", "adversarial_attacks_class"};
  return fields;
}

struct FieldHit {
  std::size_t key_pos;
  std::size_t value_pos;
  std::string name;
};

inline std::vector<FieldHit> locate_fields(const std::string& text) {
  std::vector<FieldHit> hits;
  for (const auto& name : reasoning_fields()) {
    std::size_t best = std::string::npos, value_pos = 0;
    std::size_t pos = 0;
    while ((pos = text.find(name, pos)) != std::string::npos) {
      std::size_t after = pos + name.size();
      std::size_t key_start = pos;
      if (key_start > 0 && text[key_start - 1] == '"') --key_start;
      std::size_t p = after;
      if (p < text.size() && text[p] == '"') ++p;
      while (p < text.size() && (text[p] == ' ' || text[p] == '\t')) ++p;
      if (p < text.size() && text[p] == ':') {
        best = key_start;
        value_pos = p + 1;
        break;
      }
      pos = after;
    }
    if (best != std::string::npos) hits.push_back({best, value_pos, name});
  }
  std::sort(hits.begin(), hits.end(),
            [](const FieldHit& a, const FieldHit& b) { return a.key_pos < b.key_pos; });
  return hits;
}

inline std::string strip_value(std::string v) {
  v = trim(v);
  while (!v.empty() && (v.back() == ',' || v.back() == ';')) v = trim(v.substr(0, v.size() - 1));
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
  return trim(v);
}

}  // namespace detail

inline Verdict parse_reasoning(const std::string& text) {
  auto hits = detail::locate_fields(text);
  std::map<std::string, std::string> values;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    std::size_t end = i + 1 < hits.size() ? hits[i + 1].key_pos : text.size();
    values[hits[i].name] = detail::strip_value(text.substr(hits[i].value_pos, end - hits[i].value_pos));
  }
  for (const auto& name : detail::reasoning_fields()) {
    if (!values.count(name)) throw ParseError("missing field: " + name);
  }

  Verdict v;
  const std::string& safety_tok = values["safety_risks_class"];
  if (safety_tok == "safe")
    v.safety = SafetyClass::safe;
  else if (safety_tok == "unsafe")
    v.safety = SafetyClass::unsafe_;
  else
    throw ParseError("invalid safety_risks_class token: " + safety_tok);

  const std::string& adv_tok = values["adversarial_attacks_class"];
  if (adv_tok == "adversarial")
    v.adversarial = AdversarialClass::adversarial;
  else if (adv_tok == "non_adversarial")
    v.adversarial = AdversarialClass::non_adversarial;
  else
    throw ParseError("invalid adversarial_attacks_class token: " + adv_tok);

  auto codes = detail::parse_category_list(values["safety_risks_categories"]);
  if (v.safety == SafetyClass::unsafe_) {
    if (codes.empty())
      throw ParseError("safety_risks_categories empty for unsafe verdict");
    v.categories = std::move(codes);
  }
  v.safety_reasoning = values["safety_risks_assessment_reasoning"];
  v.adversarial_reasoning = values["adversarial_attacks_assessment_reasoning"];
  return v;
}

// ---- synthesis validation ----

enum class ValidationFailure {
  missing_reasoning_tag,
  missing_result_tag,
  bad_step_count,
  bad_step1_prefix,
  label_mismatch,
  unparseable_result,
};

inline std::string to_string(ValidationFailure f) {
  switch (f) {
    case ValidationFailure::missing_reasoning_tag: return "missing_reasoning_tag";
    case ValidationFailure::missing_result_tag: return "missing_result_tag";
    case ValidationFailure::bad_step_count: return "bad_step_count";
    case ValidationFailure::bad_step1_prefix: return "bad_step1_prefix";
    case ValidationFailure::label_mismatch: return "label_mismatch";
    case ValidationFailure::unparseable_result: return "unparseable_result";
  }
  throw std::logic_error("bad validation failure");
}

struct ValidationReport {
  bool format_ok = false;
  int steps_found = 0;
  bool step1_prefix_ok = false;
  std::optional<std::string> result_label;
  bool label_aligned = false;
  std::vector<ValidationFailure> failures;

  bool passed() const { return failures.empty(); }
};

inline nlohmann::json to_json(const ValidationReport& r) {
  nlohmann::json j{{"format_ok", r.format_ok},
                   {"steps_found", r.steps_found},
                   {"step1_prefix_ok", r.step1_prefix_ok},
                   {"label_aligned", r.label_aligned}};
  if (r.result_label) j["result_label"] = *r.result_label;
  auto arr = nlohmann::json::array();
  for (auto f : r.failures) arr.push_back(to_string(f));
  j["failures"] = arr;
  return j;
}

inline ValidationReport validate_synthesis(const std::string& text,
                                           const std::string& expected_label,
                                           core::ContentKind kind,
                                           templating::Dimension dimension) {
  ValidationReport rep;

  // (a) exactly one reasoning block
  std::size_t r_open = text.find("<reasoning>");
  std::size_t r_close = text.find("</reasoning>");
  bool reasoning_ok = r_open != std::string::npos && r_close != std::string::npos &&
                      r_open < r_close &&
                      text.find("<reasoning>", r_open + 1) == std::string::npos;
  if (!reasoning_ok) rep.failures.push_back(ValidationFailure::missing_reasoning_tag);

  // (b) step markers, numbered consecutively from 1; search the reasoning block when
  // present, the whole text otherwise.
  std::string step_scope = reasoning_ok
                               ? text.substr(r_open + 11, r_close - (r_open + 11))
                               : text;
  static const std::regex step_re("(^|\n)## Step ([0-9]+)");
  std::vector<int> step_numbers;
  std::vector<std::size_t> step_body_pos;
  for (auto it = std::sregex_iterator(step_scope.begin(), step_scope.end(), step_re);
       it != std::sregex_iterator(); ++it) {
    step_numbers.push_back(std::stoi((*it)[2].str()));
    step_body_pos.push_back(static_cast<std::size_t>(it->position(0) + it->length(0)));
  }
  rep.steps_found = static_cast<int>(step_numbers.size());
  bool steps_ok = !step_numbers.empty() && step_numbers.size() <= 5;
  for (std::size_t i = 0; steps_ok && i < step_numbers.size(); ++i)
    if (step_numbers[i] != static_cast<int>(i) + 1) steps_ok = false;
  if (!steps_ok) rep.failures.push_back(ValidationFailure::bad_step_count);

  // (c) mandated Step 1 prefix
  if (!step_numbers.empty() && step_numbers[0] == 1) {
    std::string body = step_scope.substr(step_body_pos[0]);
    std::size_t b = 0;
    while (b < body.size() && (body[b] == ':' || body[b] == ' ' || body[b] == '\n')) ++b;
    body = body.substr(b);
    rep.step1_prefix_ok = body.rfind(templating::step1_prefix(kind, dimension), 0) == 0;
  }
  if (!rep.step1_prefix_ok) rep.failures.push_back(ValidationFailure::bad_step1_prefix);

  // (d) result tag and label alignment
  std::size_t t_open = text.find("<result>");
  std::size_t t_close = text.find("</result>");
  if (t_open == std::string::npos || t_close == std::string::npos || t_open >= t_close) {
    rep.failures.push_back(ValidationFailure::missing_result_tag);
  } else {
    std::string label = detail::trim(text.substr(t_open + 8, t_close - (t_open + 8)));
    bool known = label == "safe" || label == "unsafe" || label == "adversarial" ||
                 label == "non_adversarial";
    if (!known) {
      rep.failures.push_back(ValidationFailure::unparseable_result);
    } else {
      rep.result_label = label;
      rep.label_aligned = label == expected_label;
      if (!rep.label_aligned) rep.failures.push_back(ValidationFailure::label_mismatch);
    }
  }

  rep.format_ok = reasoning_ok && steps_ok && rep.step1_prefix_ok &&
                  rep.result_label.has_value();
  return rep;
}

}  // namespace forge::parsing

#endif  // FORGE_PARSING_HPP
