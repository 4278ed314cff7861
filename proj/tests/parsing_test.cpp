#include <catch2/catch_amalgamated.hpp>

#include "forge/parsing.hpp"

using namespace forge::parsing;
using forge::core::AdversarialClass;
using forge::core::ContentKind;
using forge::core::SafetyClass;
using forge::core::Verdict;
using forge::templating::Dimension;

TEST_CASE("non-reasoning output parses in both label shapes") {
  auto safe = parse_non_reasoning("safe\nnon_adversarial");
  REQUIRE(safe.safety == SafetyClass::safe);
  REQUIRE(safe.categories.empty());
  REQUIRE(safe.adversarial == AdversarialClass::non_adversarial);

  auto unsafe = parse_non_reasoning("unsafe O1, O10\nadversarial");
  REQUIRE(unsafe.safety == SafetyClass::unsafe_);
  REQUIRE(unsafe.categories == std::vector<std::string>{"O1", "O10"});
  REQUIRE(unsafe.adversarial == AdversarialClass::adversarial);
}

TEST_CASE("non-reasoning parser tolerates surrounding whitespace and blank lines") {
  auto v = parse_non_reasoning("\n  unsafe: O14 \n\n  adversarial  \n");
  REQUIRE(v.safety == SafetyClass::unsafe_);
  REQUIRE(v.categories == std::vector<std::string>{"O14"});
  REQUIRE(v.adversarial == AdversarialClass::adversarial);
}

TEST_CASE("non-reasoning parse errors name the offending line") {
  auto expect_error = [](const std::string& text, const std::string& needle) {
    try {
      parse_non_reasoning(text);
      FAIL("expected ParseError for: " << text);
    } catch (const ParseError& e) {
      INFO(text);
      REQUIRE(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_error("", "line 1");
  expect_error("safe", "line 2");
  expect_error("harmful\nadversarial", "line 1");
  expect_error("unsafe\nadversarial", "line 1");             // unsafe without categories
  expect_error("unsafe O99\nadversarial", "O99");            // unknown category
  expect_error("safe\nmaybe", "line 2");
  expect_error("safe\nnon_adversarial\nextra", "trailing");
  expect_error("safeguard\nadversarial", "line 1");          // prefix but not the token
}

TEST_CASE("format and parse are inverse for non-reasoning verdicts") {
  for (auto s : {SafetyClass::safe, SafetyClass::unsafe_}) {
    for (auto a : {AdversarialClass::adversarial, AdversarialClass::non_adversarial}) {
      Verdict v;
      v.safety = s;
      if (s == SafetyClass::unsafe_) v.categories = {"O3", "O15"};
      v.adversarial = a;
      auto back = parse_non_reasoning(format_non_reasoning(v));
      REQUIRE(back.safety == v.safety);
      REQUIRE(back.categories == v.categories);
      REQUIRE(back.adversarial == v.adversarial);
    }
  }
}

static const char* kReasoningSample =
    "safety_risks_assessment_reasoning: The content describes how to build a weapon, which "
    "falls squarely under security threats.\n"
    "safety_risks_class: unsafe\n"
    "safety_risks_categories: O10, O14\n"
    "adversarial_attacks_assessment_reasoning: The request is phrased as a roleplay scenario "
    "designed to sidestep the refusal.\n"
    "adversarial_attacks_class: adversarial";

TEST_CASE("reasoning output parses all five fields") {
  auto v = parse_reasoning(kReasoningSample);
  REQUIRE(v.safety == SafetyClass::unsafe_);
  REQUIRE(v.categories == std::vector<std::string>{"O10", "O14"});
  REQUIRE(v.adversarial == AdversarialClass::adversarial);
  REQUIRE(v.safety_reasoning ==
          "The content describes how to build a weapon, which falls squarely under security "
          "threats.");
  REQUIRE(v.adversarial_reasoning ==
          "The request is phrased as a roleplay scenario designed to sidestep the refusal.");
}

TEST_CASE("reasoning parser is order-insensitive and tolerates quoted keys") {
  std::string shuffled =
      "\"adversarial_attacks_class\": non_adversarial,\n"
      "\"safety_risks_class\": safe,\n"
      "\"safety_risks_categories\": ,\n"
      "\"adversarial_attacks_assessment_reasoning\": nothing manipulative here,\n"
      "\"safety_risks_assessment_reasoning\": plain cooking question";
  auto v = parse_reasoning(shuffled);
  REQUIRE(v.safety == SafetyClass::safe);
  REQUIRE(v.categories.empty());
  REQUIRE(v.adversarial == AdversarialClass::non_adversarial);
  REQUIRE(v.safety_reasoning == "plain cooking question");
}

TEST_CASE("reasoning parse failures are specific") {
  auto expect_error = [](const std::string& text, const std::string& needle) {
    try {
      parse_reasoning(text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      REQUIRE(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_error("safety_risks_class: safe", "missing field");
  std::string bad_enum = kReasoningSample;
  bad_enum.replace(bad_enum.find("unsafe"), 6, "harmful ok");
  expect_error(bad_enum, "safety_risks_class");

  std::string no_cats =
      "safety_risks_assessment_reasoning: r1\n"
      "safety_risks_class: unsafe\n"
      "safety_risks_categories: \n"
      "adversarial_attacks_assessment_reasoning: r2\n"
      "adversarial_attacks_class: adversarial";
  expect_error(no_cats, "safety_risks_categories");

  std::string bad_adv =
      "safety_risks_assessment_reasoning: r1\n"
      "safety_risks_class: safe\n"
      "safety_risks_categories: \n"
      "adversarial_attacks_assessment_reasoning: r2\n"
      "adversarial_attacks_class: hostile";
  expect_error(bad_adv, "adversarial_attacks_class");
}

TEST_CASE("safe verdict ignores stray categories listed by the model") {
  std::string text =
      "safety_risks_assessment_reasoning: benign\n"
      "safety_risks_class: safe\n"
      "safety_risks_categories: O1\n"
      "adversarial_attacks_assessment_reasoning: benign\n"
      "adversarial_attacks_class: non_adversarial";
  auto v = parse_reasoning(text);
  REQUIRE(v.safety == SafetyClass::safe);
  REQUIRE(v.categories.empty());
}

// ---- synthesis validation ----

static std::string good_synthesis(const std::string& label) {
  return "<reasoning>\n"
         "## Step 1: Provided content is a request for a recipe with no harmful intent.\n"
         "## Step 2: No category of the policy is implicated.\n"
         "</reasoning>\n"
         "<result>" + label + "</result>";
}

TEST_CASE("well-formed synthesis output validates cleanly") {
  auto rep = validate_synthesis(good_synthesis("safe"), "safe", ContentKind::standalone,
                                Dimension::safety);
  REQUIRE(rep.passed());
  REQUIRE(rep.format_ok);
  REQUIRE(rep.steps_found == 2);
  REQUIRE(rep.step1_prefix_ok);
  REQUIRE(rep.result_label == "safe");
  REQUIRE(rep.label_aligned);
}

TEST_CASE("each defect class reports its own failure") {
  using VF = ValidationFailure;
  const std::string good = good_synthesis("safe");

  SECTION("missing reasoning tag") {
    std::string text = good;
    text.erase(text.find("<reasoning>"), 11);
    auto rep = validate_synthesis(text, "safe", ContentKind::standalone, Dimension::safety);
    REQUIRE(rep.failures == std::vector<VF>{VF::missing_reasoning_tag});
  }
  SECTION("missing result tag") {
    std::string text = good;
    text.erase(text.find("<result>"));
    auto rep = validate_synthesis(text, "safe", ContentKind::standalone, Dimension::safety);
    REQUIRE(rep.failures == std::vector<VF>{VF::missing_result_tag});
  }
  SECTION("step numbering broken") {
    std::string text = good;
    text.replace(text.find("## Step 2"), 9, "## Step 3");
    auto rep = validate_synthesis(text, "safe", ContentKind::standalone, Dimension::safety);
    REQUIRE(rep.failures == std::vector<VF>{VF::bad_step_count});
  }
  SECTION("more than five steps") {
    std::string text =
        "<reasoning>\n## Step 1: Provided content is x.\n## Step 2: a\n## Step 3: a\n"
        "## Step 4: a\n## Step 5: a\n## Step 6: a\n</reasoning>\n<result>safe</result>";
    auto rep = validate_synthesis(text, "safe", ContentKind::standalone, Dimension::safety);
    REQUIRE(rep.failures == std::vector<VF>{VF::bad_step_count});
  }
  SECTION("wrong step-1 prefix") {
    std::string text = good;
    text.replace(text.find("Provided content is"), 19, "This content appears");
    auto rep = validate_synthesis(text, "safe", ContentKind::standalone, Dimension::safety);
    REQUIRE(rep.failures == std::vector<VF>{VF::bad_step1_prefix});
  }
  SECTION("label mismatch") {
    auto rep = validate_synthesis(good_synthesis("unsafe"), "safe", ContentKind::standalone,
                                  Dimension::safety);
    REQUIRE(rep.failures == std::vector<VF>{VF::label_mismatch});
    REQUIRE(rep.result_label == "unsafe");
  }
  SECTION("unparseable result body") {
    auto rep = validate_synthesis(good_synthesis("mostly fine"), "safe", ContentKind::standalone,
                                  Dimension::safety);
    REQUIRE(rep.failures == std::vector<VF>{VF::unparseable_result});
  }
}

TEST_CASE("conversation prefix expectations differ by dimension") {
  std::string text =
      "<reasoning>\n## Step 1: The last assistant response is a refusal.\n</reasoning>\n"
      "<result>safe</result>";
  REQUIRE(validate_synthesis(text, "safe", ContentKind::conversation, Dimension::safety)
              .passed());
  REQUIRE_FALSE(validate_synthesis(text, "safe", ContentKind::conversation,
                                   Dimension::adversarial)
                    .step1_prefix_ok);

  std::string adv_text =
      "<reasoning>\n## Step 1: The last user message is a direct question.\n</reasoning>\n"
      "<result>non_adversarial</result>";
  REQUIRE(validate_synthesis(adv_text, "non_adversarial", ContentKind::conversation,
                             Dimension::adversarial)
              .passed());
}

TEST_CASE("validation report serializes to JSON") {
  auto rep = validate_synthesis(good_synthesis("unsafe"), "safe", ContentKind::standalone,
                                Dimension::safety);
  auto j = to_json(rep);
  REQUIRE(j["steps_found"] == 2);
  REQUIRE(j["result_label"] == "unsafe");
  REQUIRE(j["label_aligned"] == false);
  REQUIRE(j["failures"] == nlohmann::json::array({"label_mismatch"}));
}
