#include <revutil/rubric.hpp>

#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

using namespace revutil;
using namespace revutil::rubric;

namespace {

const std::string kFixtures = REVUTIL_FIXTURE_DIR;
const std::string kReview =
    "The paper claims \"state of the art\" results but Table 2 omits the strongest baseline.";

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const RubricSet& rubrics()
{
    static const RubricSet set = RubricSet::load();
    return set;
}

ReviewComment comment(std::string text = kReview)
{
    return ReviewComment::make("c1", "r1", "ICLR", 2024, 0, std::move(text));
}

ExamplePool action_pool()
{
    return load_example_pool(kFixtures + "/pools/actionability.jsonl", Aspect::Actionability,
                             Task::Scoring);
}

// Sparse Fisher-Yates: positions displaced by earlier swaps live in a map,
// untouched positions map to themselves.
std::vector<std::size_t> replay_label(std::mt19937_64& rng, std::size_t n, std::size_t k)
{
    std::unordered_map<std::size_t, std::size_t> moved;
    auto at = [&](std::size_t i) { return moved.contains(i) ? moved[i] : i; };
    std::vector<std::size_t> picked;
    for (std::size_t i = 0; i < k; ++i) {
        const std::uint64_t range = n - i;
        const std::uint64_t cap = (std::numeric_limits<std::uint64_t>::max() / range) * range;
        std::uint64_t r;
        do {
            r = rng();
        } while (r >= cap);
        const std::size_t j = i + static_cast<std::size_t>(r % range);
        const auto vi = at(i), vj = at(j);
        moved[i] = vj;
        moved[j] = vi;
        picked.push_back(vj);
    }
    return picked;
}

} // namespace

TEST(Rubric, LoadsAllAspects)
{
    for (auto a : kAllAspects) {
        ASSERT_TRUE(rubrics().has(a));
        const auto& r = rubrics().rubric(a);
        EXPECT_EQ(r.label_descriptors.size(), a == Aspect::Verifiability ? 6u : 5u);
        EXPECT_FALSE(r.preamble.empty());
    }
    const auto& act = rubrics().rubric(Aspect::Actionability);
    EXPECT_TRUE(act.label_descriptors.at(AspectLabel::ordinal(1)).starts_with("1 - Unactionable:"));
    EXPECT_TRUE(rubrics()
                    .rubric(Aspect::Verifiability)
                    .label_descriptors.at(AspectLabel::no_claim())
                    .starts_with("X - No Claim:"));
}

TEST(Rubric, MissingResourceDirectory)
{
    EXPECT_THROW(RubricSet::load("/nonexistent/resources"), MissingRubric);
    auto partial = rubrics();
    partial.remove(Aspect::Helpfulness);
    EXPECT_THROW(partial.multi_aspect_prompt(comment(), ScoreMode::ScoreOnly), MissingRubric);
    EXPECT_THROW(partial.rubric(Aspect::Helpfulness), MissingRubric);
}

TEST(Rubric, PoolLoadingValidates)
{
    const auto pool = action_pool();
    EXPECT_EQ(pool.size(), 50u);
    EXPECT_EQ(pool.by_label.size(), 5u);

    std::istringstream bad(R"({"text":"t","label":"X","rationale":"r"})");
    EXPECT_THROW(read_example_pool(bad, "bad", Aspect::Actionability, Task::Scoring), ParseError);
    std::istringstream ok(R"({"text":"t","label":"X","rationale":"r"})");
    EXPECT_EQ(read_example_pool(ok, "ok", Aspect::Verifiability, Task::Scoring).size(), 1u);
    std::istringstream no_rationale(R"({"text":"t","label":3})");
    EXPECT_THROW(read_example_pool(no_rationale, "nr", Aspect::Actionability, Task::Scoring), ParseError);
    std::istringstream claim(R"({"text":"t","label":"Maybe","rationale":"r"})");
    EXPECT_THROW(read_example_pool(claim, "c", Aspect::Verifiability, Task::ClaimDetection), ParseError);
}

TEST(Rubric, SamplingForcedSelection)
{
    ExamplePool pool{Aspect::Actionability, Task::Scoring, {}};
    for (int s = 1; s <= 5; ++s)
        for (int i = 0; i < 5; ++i)
            pool.add({"t" + std::to_string(s) + std::to_string(i), std::to_string(s), "r"});
    for (std::uint64_t seed : {0ull, 1ull, 99ull}) {
        const auto ex = sample_incontext_examples(pool, seed, Task::Scoring);
        ASSERT_EQ(ex.size(), 25u);
        std::set<std::string> texts;
        for (const auto& e : ex)
            texts.insert(e.text);
        EXPECT_EQ(texts.size(), 25u);
    }
}

TEST(Rubric, SamplingIsDeterministicAndOrdered)
{
    const auto pool = action_pool();
    const auto a = sample_incontext_examples(pool, 42, Task::Scoring);
    const auto b = sample_incontext_examples(pool, 42, Task::Scoring);
    ASSERT_EQ(a.size(), 25u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].text, b[i].text);
        EXPECT_EQ(a[i].label, std::to_string(i / 5 + 1));
    }
    const auto c = sample_incontext_examples(pool, 43, Task::Scoring);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i)
        differs |= a[i].text != c[i].text;
    EXPECT_TRUE(differs);
}

TEST(Rubric, SamplingMatchesReplayOracle)
{
    const auto pool = action_pool();
    const auto got = sample_incontext_examples(pool, 7, Task::Scoring);
    std::mt19937_64 rng(7);
    std::vector<std::string> expected;
    for (int s = 1; s <= 5; ++s) {
        const auto& seeds = pool.by_label.at(std::to_string(s));
        for (auto idx : replay_label(rng, seeds.size(), 5))
            expected.push_back(seeds[idx].text);
    }
    ASSERT_EQ(got.size(), expected.size());
    for (std::size_t i = 0; i < got.size(); ++i)
        EXPECT_EQ(got[i].text, expected[i]) << i;
}

TEST(Rubric, ClaimSampling)
{
    const auto pool = load_example_pool(kFixtures + "/pools/claims.jsonl", Aspect::Verifiability,
                                        Task::ClaimDetection);
    const auto ex = sample_incontext_examples(pool, 3, Task::ClaimDetection);
    ASSERT_EQ(ex.size(), 10u);
    for (std::size_t i = 0; i < 5; ++i)
        EXPECT_EQ(ex[i].label, kNoClaimLabel);
    for (std::size_t i = 5; i < 10; ++i)
        EXPECT_EQ(ex[i].label, kClaimLabel);
}

TEST(Rubric, PoolTooSmall)
{
    ExamplePool pool{Aspect::Actionability, Task::Scoring, {}};
    for (int s = 1; s <= 5; ++s)
        for (int i = 0; i < (s == 4 ? 4 : 5); ++i)
            pool.add({"t", std::to_string(s), "r"});
    EXPECT_THROW(sample_incontext_examples(pool, 0, Task::Scoring), PoolTooSmall);
}

TEST(Rubric, SingleAspectGolden)
{
    const auto pool = action_pool();
    std::vector<ExampleSeed> first_five;
    for (int s = 1; s <= 5; ++s)
        for (int i = 0; i < 5; ++i)
            first_five.push_back(pool.by_label.at(std::to_string(s))[i]);
    const auto b = build_single_aspect_prompt(rubrics(), Aspect::Actionability, comment(), first_five);
    EXPECT_EQ(b.rendered_text, slurp(kFixtures + "/golden/single_actionability.txt"));
    EXPECT_EQ(b.expected_keys, (std::vector<std::string>{"rationale", "label"}));
    EXPECT_TRUE(b.rendered_text.ends_with("Review Point: " + kReview));
    for (const auto& ex : first_five)
        EXPECT_NE(b.rendered_text.find("Review Point: " + ex.text + "\n"), std::string::npos);
    EXPECT_NE(b.rendered_text.find("Review Point: The term \"robust\" in"), std::string::npos);
}

TEST(Rubric, SingleAspectWithoutExamples)
{
    const auto b = build_single_aspect_prompt(rubrics(), Aspect::Helpfulness, comment(), {});
    EXPECT_EQ(b.rendered_text, slurp(kFixtures + "/golden/single_empty.txt"));
    EXPECT_NE(b.rendered_text.find("Escape the double quotes"), std::string::npos);
    EXPECT_NE(b.rendered_text.find(kReview), std::string::npos);
}

TEST(Rubric, SingleAspectRejectsForeignLabels)
{
    const std::vector<ExampleSeed> ex = {{"t", "X", "r"}};
    EXPECT_THROW(build_single_aspect_prompt(rubrics(), Aspect::Actionability, comment(), ex),
                 AspectMismatch);
    const std::vector<ExampleSeed> claim = {{"t", "Claim", "r"}};
    EXPECT_THROW(build_single_aspect_prompt(rubrics(), Aspect::Verifiability, comment(), claim),
                 AspectMismatch);
    EXPECT_THROW(rubrics().claim_detection_prompt(comment(), ex), AspectMismatch);
}

TEST(Rubric, ScoreOnlySingleAspect)
{
    const auto b = build_single_aspect_prompt(rubrics(), Aspect::Actionability, comment(), {},
                                              ScoreMode::ScoreOnly);
    EXPECT_EQ(b.expected_keys, (std::vector<std::string>{"label"}));
    EXPECT_EQ(b.rendered_text.find("Generate a rationale"), std::string::npos);
}

TEST(Rubric, MultiAspectGolden)
{
    const auto full = build_multi_aspect_prompt(rubrics(), comment(), ScoreMode::ScoreWithRationale);
    EXPECT_EQ(full.rendered_text, slurp(kFixtures + "/golden/multi_rationale.txt"));
    const std::vector<std::string> keys = {"actionability_rationale",
                                           "actionability_label",
                                           "grounding_specificity_rationale",
                                           "grounding_specificity_label",
                                           "verifiability_rationale",
                                           "verifiability_label",
                                           "helpfulness_rationale",
                                           "helpfulness_label"};
    EXPECT_EQ(full.expected_keys, keys);
    std::size_t last = 0;
    for (const auto& k : keys) {
        const auto at = full.rendered_text.find("\"" + k + "\"", last);
        ASSERT_NE(at, std::string::npos) << k;
        last = at;
    }

    const auto score = build_multi_aspect_prompt(rubrics(), comment(), ScoreMode::ScoreOnly);
    EXPECT_EQ(score.rendered_text, slurp(kFixtures + "/golden/multi_score.txt"));
    EXPECT_EQ(score.expected_keys,
              (std::vector<std::string>{"actionability_label", "grounding_specificity_label",
                                        "verifiability_label", "helpfulness_label"}));
    EXPECT_EQ(score.rendered_text.find("_rationale"), std::string::npos);
}

TEST(Rubric, PromptsDifferOnlyInReviewPoint)
{
    const auto a = build_multi_aspect_prompt(rubrics(), comment("first comment"), ScoreMode::ScoreOnly);
    const auto b = build_multi_aspect_prompt(rubrics(), comment("second comment"), ScoreMode::ScoreOnly);
    auto strip = [](std::string s, const std::string& text) {
        return s.replace(s.find("###Review Point: " + text), 17 + text.size(), "");
    };
    EXPECT_NE(a.rendered_text, b.rendered_text);
    EXPECT_EQ(strip(a.rendered_text, "first comment"), strip(b.rendered_text, "second comment"));
}

TEST(Rubric, DescriptorsAppearVerbatim)
{
    const auto multi = build_multi_aspect_prompt(rubrics(), comment(), ScoreMode::ScoreWithRationale);
    for (auto a : kAllAspects) {
        const auto single = build_single_aspect_prompt(rubrics(), a, comment(), {});
        for (const auto& [label, text] : rubrics().rubric(a).label_descriptors) {
            EXPECT_NE(single.rendered_text.find(text), std::string::npos);
            EXPECT_NE(multi.rendered_text.find(text), std::string::npos);
        }
    }
}

TEST(Rubric, PlaceholdersInCommentTextAreNotExpanded)
{
    const auto b = build_single_aspect_prompt(rubrics(), Aspect::Actionability,
                                              comment("see [ASPECT] and [REVIEW POINT]"), {});
    EXPECT_TRUE(b.rendered_text.ends_with("Review Point: see [ASPECT] and [REVIEW POINT]"));
}

TEST(Rubric, ClaimDetectionPrompt)
{
    const auto pool = load_example_pool(kFixtures + "/pools/claims.jsonl", Aspect::Verifiability,
                                        Task::ClaimDetection);
    const auto ex = sample_incontext_examples(pool, 0, Task::ClaimDetection);
    const auto b = rubrics().claim_detection_prompt(comment(), ex);
    EXPECT_EQ(b.kind, PromptKind::ClaimDetection);
    EXPECT_NE(b.rendered_text.find("Claim Detection"), std::string::npos);
    EXPECT_NE(b.rendered_text.find("Normal Statements"), std::string::npos);
    EXPECT_TRUE(b.rendered_text.ends_with(kReview));
}
