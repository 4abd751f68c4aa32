#include <gtest/gtest.h>

#include <set>

#include "vand/prompts.hpp"

using namespace vand;
using namespace vand::prompts;

TEST(DefaultTemplates, ListSizes) {
    const PromptTemplates t = default_templates();
    EXPECT_EQ(t.normal_states.size(), 12u);
    EXPECT_EQ(t.abnormal_states.size(), 19u);
    EXPECT_EQ(t.localizing_nouns.size(), 19u);
    EXPECT_EQ(t.text_templates.size(), 2u);
    EXPECT_NO_THROW(validate(t));
}

TEST(ComposeEnsemble, DefaultCounts) {
    const PromptEnsemble e = compose_ensemble("candle", default_templates());
    EXPECT_EQ(e.normal_prompts.size(), 24u);
    EXPECT_EQ(e.abnormal_prompts.size(), 38u);
    EXPECT_EQ(e.localizing_prompts.size(), 18u);
    EXPECT_EQ(std::set<std::string>(e.localizing_prompts.begin(), e.localizing_prompts.end()).size(), 18u);
    EXPECT_EQ(e.localizing_prompts.front(), "a tear");
}

TEST(ComposeEnsemble, SingleStateSingleTemplate) {
    PromptTemplates t;
    t.normal_states = {"good [o]"};
    t.abnormal_states = {"broken [o]"};
    t.text_templates = {"a photo of a [c]"};
    t.localizing_nouns = {"a dent"};
    const PromptEnsemble e = compose_ensemble("candle", t);
    EXPECT_EQ(e.normal_prompts, std::vector<std::string>{"a photo of a good candle"});
    EXPECT_EQ(e.abnormal_prompts, std::vector<std::string>{"a photo of a broken candle"});
    EXPECT_EQ(e.localizing_prompts, std::vector<std::string>{"a dent"});
}

TEST(ComposeEnsemble, IdentityComposition) {
    PromptTemplates t;
    t.normal_states = {"[o]"};
    t.abnormal_states = {"[o]"};
    t.text_templates = {"[c]"};
    t.localizing_nouns = {"x"};
    EXPECT_EQ(compose_ensemble("candle", t).normal_prompts, std::vector<std::string>{"candle"});
}

TEST(ComposeEnsemble, LocalizingTemplateWrapsNouns) {
    PromptTemplates t = default_templates();
    t.localizing_template = "a photo of [c]";
    const PromptEnsemble e = compose_ensemble("candle", t);
    EXPECT_EQ(e.localizing_prompts.front(), "a photo of a tear");
}

TEST(ComposeEnsemble, DeterministicAndOrderStable) {
    const PromptEnsemble a = compose_ensemble("pipe fryum", default_templates());
    const PromptEnsemble b = compose_ensemble("pipe fryum", default_templates());
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.normal_prompts[0], "a photo of a good pipe fryum.");
    EXPECT_EQ(a.normal_prompts[1], "a cropped photo of a good pipe fryum.");
}

TEST(ObjectName, UnderscoresBecomeSpaces) { EXPECT_EQ(object_name_for_class("pipe_fryum"), "pipe fryum"); }

TEST(ParseTemplates, ExtendAddsToDefaults) {
    const PromptTemplates t =
        parse_templates(R"({"normal_states": ["shiny [o]"], "abnormal_states": [], "localizing": []})");
    EXPECT_EQ(t.normal_states.size(), 13u);
    EXPECT_EQ(t.normal_states.back(), "shiny [o]");
    EXPECT_EQ(t.abnormal_states.size(), 19u);
}

TEST(ParseTemplates, ReplaceStandsAlone) {
    const PromptTemplates t = parse_templates(
        R"({"mode": "replace", "normal_states": ["[o]"], "abnormal_states": ["bad [o]"], "localizing": ["a hole"]})");
    EXPECT_EQ(t.normal_states.size(), 1u);
    EXPECT_EQ(t.localizing_nouns, std::vector<std::string>{"a hole"});
    EXPECT_EQ(t.text_templates, default_templates().text_templates);
}

TEST(ParseTemplates, StateWithoutPlaceholderIsRejected) {
    EXPECT_THROW(parse_templates(R"({"normal_states": ["shiny"], "abnormal_states": [], "localizing": []})"),
                 ConfigError);
}

TEST(ParseTemplates, UnknownFieldAndMissingFieldAreRejected) {
    EXPECT_THROW(parse_templates(R"({"normal_states": [], "abnormal_states": [], "localizing": [], "x": 1})"),
                 ConfigError);
    EXPECT_THROW(parse_templates(R"({"normal_states": [], "abnormal_states": []})"), ConfigError);
}

TEST(ParseTemplates, SyntaxErrorReportsLineAndColumn) {
    try {
        parse_templates("{\n  \"normal_states\": [\n    \"a [o]\",,\n]}");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(TemplatesJson, RoundTrip) {
    PromptTemplates t = default_templates();
    t.localizing_template = "a photo of [c]";
    EXPECT_EQ(templates_from_json(templates_to_json(t)), t);
}
