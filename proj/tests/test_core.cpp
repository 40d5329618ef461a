#include <revutil/dataset.hpp>

#include <gtest/gtest.h>

#include <map>
#include <sstream>

namespace revutil {
namespace {

const std::array<AspectLabel, 6> kEveryLabel = {AspectLabel::no_claim(),   AspectLabel::ordinal(1),
                                                AspectLabel::ordinal(2),   AspectLabel::ordinal(3),
                                                AspectLabel::ordinal(4),   AspectLabel::ordinal(5)};

TEST(AgreementClass, AllTriplesMatchCountingOracle)
{
    std::size_t seen = 0;
    for (auto a : kEveryLabel)
        for (auto b : kEveryLabel)
            for (auto c : kEveryLabel) {
                ++seen;
                const std::array<AspectLabel, 3> triple{a, b, c};
                std::map<AspectLabel, int> counts;
                for (auto l : triple)
                    ++counts[l];
                auto top = std::max_element(counts.begin(), counts.end(),
                                            [](const auto& x, const auto& y) { return x.second < y.second; });
                const auto cls = classify_agreement(triple);
                const std::string where = a.to_string() + b.to_string() + c.to_string();
                switch (top->second) {
                case 3:
                    EXPECT_EQ(cls.level, AgreementLevel::Full) << where;
                    break;
                case 2:
                    EXPECT_EQ(cls.level, AgreementLevel::Majority) << where;
                    break;
                default:
                    EXPECT_EQ(cls.level, AgreementLevel::Low) << where;
                }
                if (top->second >= 2) {
                    ASSERT_TRUE(cls.majority_label) << where;
                    EXPECT_EQ(*cls.majority_label, top->first) << where;
                } else {
                    EXPECT_FALSE(cls.majority_label) << where;
                }
            }
    EXPECT_EQ(seen, 216u);
}

TEST(AgreementClass, ArityIsChecked)
{
    std::vector<AspectLabel> two = {AspectLabel::ordinal(1), AspectLabel::ordinal(1)};
    EXPECT_THROW(classify_agreement(two), ArityError);
}

TEST(AspectLabel, ValidationRules)
{
    EXPECT_EQ(validate_label(Aspect::Verifiability, "X"), AspectLabel::no_claim());
    EXPECT_EQ(validate_label(Aspect::Verifiability, "x"), AspectLabel::no_claim());
    EXPECT_THROW(validate_label(Aspect::Helpfulness, "X"), RejectedLabel);
    EXPECT_THROW(validate_label(Aspect::Actionability, "0"), RejectedLabel);
    EXPECT_THROW(validate_label(Aspect::Actionability, "6"), RejectedLabel);
    EXPECT_THROW(validate_label(Aspect::Actionability, "35"), RejectedLabel);
    EXPECT_EQ(validate_label(Aspect::Actionability, "4").score(), 4);
    EXPECT_THROW(AspectLabel::no_claim().score(), RejectedLabel);
    EXPECT_THROW(AspectLabel::ordinal(0), RejectedLabel);
}

TEST(AspectLabel, KeysRoundTrip)
{
    for (auto a : kAllAspects)
        EXPECT_EQ(parse_aspect(aspect_key(a)), a);
    EXPECT_FALSE(parse_aspect("Actionability"));
    for (auto m : {AnnotationMode::ScoreOnly, AnnotationMode::ScoreWithRationale, AnnotationMode::Human})
        EXPECT_EQ(parse_mode(mode_key(m)), m);
}

TEST(Text, WordCountAndTrim)
{
    EXPECT_EQ(word_count(""), 0u);
    EXPECT_EQ(word_count("  one\ttwo\nthree  "), 3u);
    EXPECT_EQ(trim("  a b \n"), "a b");
}

TEST(Dataset, AnnotationRecordRoundTrip)
{
    AnnotationRecord r{"c7", "ann", Aspect::Verifiability, AspectLabel::no_claim(), "no claim \"here\"",
                       AnnotationMode::ScoreWithRationale};
    const auto back = annotation_from_json(json::parse(to_json(r).dump()));
    EXPECT_EQ(back.comment_id, r.comment_id);
    EXPECT_EQ(back.annotator_id, r.annotator_id);
    EXPECT_EQ(back.aspect, r.aspect);
    EXPECT_EQ(back.label, r.label);
    EXPECT_EQ(back.rationale, r.rationale);
    EXPECT_EQ(back.mode, r.mode);
}

TEST(Dataset, CommentRoundTrip)
{
    auto c = ReviewComment::make("r1-0", "r1", "iclr", 2024, 0, "The ablation lacks seeds.");
    const auto back = comment_from_json(to_json(c));
    EXPECT_EQ(to_json(back), to_json(c));
    EXPECT_EQ(back.word_count, 4u);
}

TEST(Dataset, IntegerLabelsAndCounts)
{
    std::istringstream in(R"({"comment_id":"a","annotator_id":"x","aspect":"helpfulness","label":3}
{"comment_id":"a","annotator_id":"y","aspect":"helpfulness","label":"4"}

{"comment_id":"a","annotator_id":"x","aspect":"verifiability","label":"X"}
)");
    const auto ds = read_annotations(in);
    EXPECT_EQ(ds.records.size(), 3u);
    EXPECT_EQ(ds.count_per_aspect.at(Aspect::Helpfulness), 2u);
    EXPECT_EQ(ds.count_per_annotator.at("x"), 2u);
    EXPECT_EQ(ds.records[0].mode, AnnotationMode::Human);
}

void expect_parse_error_at(const std::string& text, std::size_t line)
{
    std::istringstream in(text);
    try {
        read_annotations(in, "ann.jsonl");
        FAIL() << "expected ParseError for: " << text;
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), line) << e.what();
        EXPECT_EQ(e.path(), "ann.jsonl");
    }
}

TEST(Dataset, LoadingErrorsCarryLineNumbers)
{
    const std::string ok = R"({"comment_id":"a","annotator_id":"x","aspect":"helpfulness","label":"3"})";
    expect_parse_error_at(ok + "\n{not json\n", 2);
    expect_parse_error_at(ok + "\n[1,2]\n", 2);
    expect_parse_error_at(R"({"annotator_id":"x","aspect":"helpfulness","label":"3"})", 1);
    expect_parse_error_at(R"({"comment_id":"a","annotator_id":"x","aspect":"clarity","label":"3"})", 1);
    expect_parse_error_at(R"({"comment_id":"a","annotator_id":"x","aspect":"helpfulness","label":"X"})", 1);
    expect_parse_error_at(R"({"comment_id":"a","annotator_id":"x","aspect":"helpfulness","label":2.5})", 1);
    expect_parse_error_at(R"({"comment_id":"a","annotator_id":"x","aspect":"helpfulness","label":"3","mode":"?"})",
                          1);
}

TEST(Dataset, DuplicateTripleIsRejected)
{
    const std::string line = R"({"comment_id":"a","annotator_id":"x","aspect":"helpfulness","label":"3"})";
    std::istringstream in(line + "\n" + line + "\n");
    EXPECT_THROW(read_annotations(in), DuplicateKey);
}

TEST(Dataset, MissingFileIsParseError)
{
    EXPECT_THROW(load_annotations("/nonexistent/ann.jsonl"), ParseError);
    EXPECT_THROW(load_comments("/nonexistent/c.jsonl"), ParseError);
}

} // namespace
} // namespace revutil
