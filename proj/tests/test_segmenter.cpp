#include <revutil/segmenter.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace revutil;
using namespace revutil::segment;

namespace {

const std::string kTwoBullets =
    "- The evaluation only covers two English datasets, so it is unclear whether the method "
    "generalizes to other languages.\n"
    "- The ablation in the third table does not isolate the effect of the auxiliary loss, "
    "which is the main claimed contribution.\n";

std::size_t stage(const DropReport& r, std::string_view name)
{
    auto it = r.stages.find(std::string(name));
    return it == r.stages.end() ? 0 : it->second;
}

} // namespace

TEST(Segmenter, TwoBulletsGiveTwoComments)
{
    auto seg = segment_review(kTwoBullets, SegmenterConfig{}, std::nullopt);
    ASSERT_EQ(seg.comments.size(), 2u);
    EXPECT_TRUE(seg.comments[0].text.starts_with("The evaluation only covers"));
    EXPECT_TRUE(seg.comments[1].text.ends_with("main claimed contribution."));
    EXPECT_EQ(seg.comments[0].position, 0u);
    EXPECT_EQ(seg.comments[1].position, 1u);
    EXPECT_EQ(seg.report.input_fragments, 2u);
    EXPECT_EQ(seg.report.output_comments, 2u);
    EXPECT_TRUE(seg.report.stages.empty());
}

TEST(Segmenter, TypoOnlyBulletIsDropped)
{
    auto seg = segment_review("- fix typo in line 3", SegmenterConfig{}, std::nullopt);
    EXPECT_TRUE(seg.comments.empty());
    EXPECT_EQ(stage(seg.report, kStageTypo), 1u);
}

TEST(Segmenter, TypoWithRealContentIsKept)
{
    SegmenterConfig cfg;
    EXPECT_FALSE(is_typo_only("There is a typo in line 3, but more importantly the proof of the "
                              "main lemma assumes bounded gradients.",
                              cfg));
    EXPECT_TRUE(is_typo_only("Typos: l148 teh, l156 recieve", cfg));
    EXPECT_TRUE(is_typo_only("Several typos on page 4 and eq. 3", cfg));
    EXPECT_FALSE(is_typo_only("The notation in line 3 is confusing.", cfg));
}

TEST(Segmenter, EmptyInputGivesEmptyReport)
{
    auto seg = segment_review("", SegmenterConfig{}, std::nullopt);
    EXPECT_TRUE(seg.comments.empty());
    EXPECT_EQ(seg.report.input_fragments, 0u);
    EXPECT_TRUE(seg.report.stages.empty());
}

TEST(Segmenter, LengthBoundsFromCounts)
{
    const std::vector<std::size_t> a = {4, 8};
    auto b = compute_length_bounds(a);
    EXPECT_DOUBLE_EQ(b.min_words, 4.0);
    EXPECT_DOUBLE_EQ(b.max_words, 8.0);

    const std::vector<std::size_t> same = {10, 10};
    b = compute_length_bounds(same);
    EXPECT_DOUBLE_EQ(b.min_words, 10.0);
    EXPECT_DOUBLE_EQ(b.max_words, 10.0);

    const std::vector<std::size_t> one = {3};
    EXPECT_THROW(compute_length_bounds(one), InsufficientData);
}

TEST(Segmenter, LengthWindowDropsOutliers)
{
    const std::string text =
        "- one two three four five six seven eight nine ten\n"
        "- one two three four five six seven eight nine ten eleven twelve thirteen fourteen "
        "fifteen sixteen seventeen eighteen nineteen twenty twentyone\n";
    auto seg = segment_review(text, SegmenterConfig{}, LengthBounds::from_mean_std(12, 3));
    ASSERT_EQ(seg.comments.size(), 1u);
    EXPECT_EQ(seg.comments[0].word_count, 10u);
    EXPECT_EQ(stage(seg.report, kStageLengthBounds), 1u);
}

TEST(Segmenter, ExtractsWeaknessAndQuestionSections)
{
    RawReview r{"r1", "", 0, "Strengths: A\nWeaknesses: B\nQuestions: C", {}};
    EXPECT_EQ(extract_review_sections(r, SegmenterConfig{}), (std::vector<std::string>{"B", "C"}));
}

TEST(Segmenter, HeadingVariants)
{
    RawReview r{"r1", "OpenReview", 0,
                "## Summary\nThe paper does X.\n\n**Strengths**\n- nice\n\n**Weaknesses**\n- W one\n"
                "- W two\n\n### Questions for the authors\nWhy?\n\nRating: 6",
                {}};
    const auto s = extract_review_sections(r, SegmenterConfig{});
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0], "- W one\n- W two");
    EXPECT_EQ(s[1], "Why?");
}

TEST(Segmenter, StructuredFields)
{
    RawReview r{"r1", "", 0, "",
                {{"summary", "S"}, {"strengths", "good"}, {"weaknesses", "bad things"}}};
    EXPECT_EQ(extract_review_sections(r, SegmenterConfig{}), (std::vector<std::string>{"bad things"}));

    RawReview iclr{"r2", "ICLR 2024", 2024, "",
                   {{"questions", "Q"}, {"summary", "S"}, {"weaknesses", "W"}}};
    EXPECT_EQ(extract_review_sections(iclr, SegmenterConfig{}), (std::vector<std::string>{"W", "Q"}));

    RawReview arr{"r3", "ARR", 2023, "",
                  {{"paper_summary", "S"},
                   {"summary_of_weaknesses", "W"},
                   {"comments_suggestions_and_typos", "C"}}};
    EXPECT_EQ(extract_review_sections(arr, SegmenterConfig{}), (std::vector<std::string>{"W", "C"}));
}

TEST(Segmenter, UnknownVenueWithoutHeadingsThrows)
{
    RawReview r{"r1", "SomeWorkshop", 2022, "- just a list\n- of points", {}};
    EXPECT_THROW(extract_review_sections(r, SegmenterConfig{}), UnknownVenue);

    r.text = "Weaknesses:\n- just a list";
    EXPECT_EQ(extract_review_sections(r, SegmenterConfig{}).size(), 1u);

    RawReview generic{"r2", "", 0, "- just a list\n- of points", {}};
    EXPECT_EQ(extract_review_sections(generic, SegmenterConfig{}).size(), 1u);
}

TEST(Segmenter, NoTargetSectionsIsEmpty)
{
    RawReview r{"r1", "", 0, "Summary: fine\nStrengths: many", {}};
    EXPECT_TRUE(extract_review_sections(r, SegmenterConfig{}).empty());
}

TEST(Segmenter, DelimiterVariants)
{
    const std::string tail = " the proposed method is compared against only a single weak baseline model";
    const std::vector<std::string> markers = {"- ",  "* ",  "• ",  "+ ",    "(1) ",      "1. ",
                                              "2) ", "(W1) ", "W1: ", "Q: ", "Weakness 2: ", "Question:"};
    for (const auto& m : markers) {
        auto seg = segment_review(m + tail, SegmenterConfig{}, std::nullopt);
        ASSERT_EQ(seg.comments.size(), 1u) << m;
        EXPECT_EQ(seg.comments[0].text, std::string(trim(tail))) << m;
    }
}

TEST(Segmenter, DelimitersOnlyAtLineStart)
{
    const std::string text =
        "- The results in table 2 - especially the second column - are not discussed at all.\n";
    auto seg = segment_review(text, SegmenterConfig{}, std::nullopt);
    ASSERT_EQ(seg.comments.size(), 1u);
    EXPECT_EQ(seg.report.input_fragments, 1u);
}

TEST(Segmenter, ShortFragmentsMergeForward)
{
    const std::string text =
        "- Minor issues:\n"
        "- The related work section omits the recent line of work on contrastive decoding.\n";
    auto seg = segment_review(text, SegmenterConfig{}, std::nullopt);
    ASSERT_EQ(seg.comments.size(), 1u);
    EXPECT_TRUE(seg.comments[0].text.starts_with("Minor issues:\n- The related work"));
    EXPECT_EQ(stage(seg.report, kStageMerge), 1u);
}

TEST(Segmenter, ShortTailMergesBackward)
{
    const std::string text =
        "- The related work section omits the recent line of work on contrastive decoding.\n"
        "- See also [3].\n";
    auto seg = segment_review(text, SegmenterConfig{}, std::nullopt);
    ASSERT_EQ(seg.comments.size(), 1u);
    EXPECT_TRUE(seg.comments[0].text.ends_with("- See also [3]."));
}

TEST(Segmenter, NonBulletPreambleDropped)
{
    const std::string text =
        "Overall I think the paper is interesting but has several important problems to address.\n" +
        kTwoBullets;
    auto seg = segment_review(text, SegmenterConfig{}, std::nullopt);
    EXPECT_EQ(seg.comments.size(), 2u);
    EXPECT_EQ(stage(seg.report, kStageNotBullet), 1u);
}

TEST(Segmenter, PostRebuttalDropped)
{
    const std::string text = kTwoBullets +
                             "- Post-rebuttal: the authors addressed my concerns about the ablation, "
                             "so I raise my score.\n";
    auto seg = segment_review(text, SegmenterConfig{}, std::nullopt);
    EXPECT_EQ(seg.comments.size(), 2u);
    EXPECT_EQ(stage(seg.report, kStagePostRebuttal), 1u);
}

TEST(Segmenter, FinalMinimumLength)
{
    auto seg = segment_review("- This has exactly six words here\n- " + kTwoBullets.substr(2),
                              SegmenterConfig{}, std::nullopt);
    EXPECT_EQ(seg.comments.size(), 2u);
    EXPECT_EQ(stage(seg.report, kStageMinWords), 1u);
}

TEST(Segmenter, CleaningRules)
{
    EXPECT_EQ(clean_text("a\r\nb\rc"), "a\nb\nc");
    EXPECT_EQ(clean_text("a  \t b"), "a b");
    EXPECT_EQ(clean_text("a\n\n\n\n b"), "a\n\nb");
    EXPECT_EQ(clean_text("use\\_case of 5\\% with ``quotes''"), "use_case of 5% with \"quotes\"");
    EXPECT_EQ(clean_text("\\textbf{bold} and \\emph{it}"), "bold and it");
    EXPECT_EQ(clean_text("   \n\n  "), "");
}

TEST(Segmenter, ConfigJsonRoundTrip)
{
    SegmenterConfig cfg;
    cfg.final_min_words = 12;
    cfg.length_bounds = LengthBounds::from_mean_std(20, 5);
    const auto back = config_from_json(to_json(cfg));
    EXPECT_EQ(back.final_min_words, 12u);
    ASSERT_TRUE(back.length_bounds);
    EXPECT_DOUBLE_EQ(back.length_bounds->min_words, 15.0);
    EXPECT_DOUBLE_EQ(back.length_bounds->max_words, 25.0);
    EXPECT_EQ(back.delimiter_patterns, cfg.delimiter_patterns);
    EXPECT_EQ(back.venue_profiles.size(), cfg.venue_profiles.size());

    EXPECT_THROW(config_from_json(json{{"min_merge_words", 10}, {"final_min_words", 10}}), Error);
}

TEST(Segmenter, CorpusUsesGlobalBounds)
{
    std::vector<RawReview> reviews;
    reviews.push_back({"a", "", 0, "Weaknesses:\n" + kTwoBullets, {}});
    std::string longer = "Weaknesses:\n- ";
    for (int i = 0; i < 80; ++i)
        longer += "word ";
    reviews.push_back({"b", "", 0, longer, {}});
    auto result = segment_corpus(reviews, SegmenterConfig{});
    ASSERT_TRUE(result.bounds);
    for (const auto& c : result.comments) {
        EXPECT_GE(static_cast<double>(c.word_count), result.bounds->min_words);
        EXPECT_LE(static_cast<double>(c.word_count), result.bounds->max_words);
    }
    EXPECT_EQ(result.report.input_fragments - result.report.output_comments, result.report.dropped());
    EXPECT_EQ(result.comments.front().id, "a-0");
    EXPECT_EQ(result.comments.front().review_id, "a");
}

// Random reviews built from a small vocabulary, delimiters and noise.
class SegmenterProperties : public ::testing::TestWithParam<int> {};

TEST_P(SegmenterProperties, Invariants)
{
    std::mt19937_64 rng(static_cast<std::uint64_t>(GetParam()));
    const std::vector<std::string> vocab = {"the",  "model", "typo",    "baseline", "line", "3",
                                            "is",   "weak",  "unclear", "results",  "post-rebuttal",
                                            "data", "we",    "figure",  "l148",     "proof"};
    const std::vector<std::string> markers = {"- ", "* ", "1. ", "(2) ", "W1: ", "", "", "Q: "};
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

    for (int iter = 0; iter < 50; ++iter) {
        std::string text;
        const auto lines = 1 + pick(10);
        for (std::size_t l = 0; l < lines; ++l) {
            text += std::string(pick(3), ' ') + markers[pick(markers.size())];
            const auto words = pick(30);
            for (std::size_t w = 0; w < words; ++w)
                text += vocab[pick(vocab.size())] + (pick(6) == 0 ? "  " : " ");
            text += pick(4) == 0 ? "\r\n\n\n" : "\n";
        }
        const std::optional<LengthBounds> bounds =
            pick(2) ? std::optional(LengthBounds::from_mean_std(15, 8)) : std::nullopt;

        SegmenterConfig cfg;
        const auto seg = segment_review(text, cfg, bounds);
        const auto cleaned = clean_text(text);

        EXPECT_EQ(clean_text(cleaned), cleaned);
        std::size_t last = 0;
        for (std::size_t i = 0; i < seg.comments.size(); ++i) {
            const auto& c = seg.comments[i];
            const auto at = cleaned.find(c.text, last);
            ASSERT_NE(at, std::string::npos) << c.text;
            last = at + c.text.size();
            EXPECT_EQ(c.position, i);
            EXPECT_GE(c.word_count, cfg.final_min_words);
            if (bounds) {
                EXPECT_GE(static_cast<double>(c.word_count), bounds->min_words);
                EXPECT_LE(static_cast<double>(c.word_count), bounds->max_words);
            }
        }
        EXPECT_EQ(seg.report.input_fragments - seg.report.output_comments, seg.report.dropped());

        const auto again = segment_review(text, cfg, bounds);
        ASSERT_EQ(again.comments.size(), seg.comments.size());
        for (std::size_t i = 0; i < seg.comments.size(); ++i)
            EXPECT_EQ(again.comments[i].text, seg.comments[i].text);
        EXPECT_EQ(to_json(again.report), to_json(seg.report));
    }
}

INSTANTIATE_TEST_SUITE_P(Seeds, SegmenterProperties, ::testing::Range(0, 20));
