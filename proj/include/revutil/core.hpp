#pragma once

#include <revutil/error.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace revutil {

enum class Aspect : std::uint8_t {
    Actionability,
    GroundingSpecificity,
    Verifiability,
    Helpfulness,
};

inline constexpr std::array<Aspect, 4> kAllAspects = {
    Aspect::Actionability,
    Aspect::GroundingSpecificity,
    Aspect::Verifiability,
    Aspect::Helpfulness,
};

/// Wire key, also used as the JSON key prefix ("actionability_label").
constexpr std::string_view aspect_key(Aspect a) noexcept
{
    switch (a) {
    case Aspect::Actionability: return "actionability";
    case Aspect::GroundingSpecificity: return "grounding_specificity";
    case Aspect::Verifiability: return "verifiability";
    case Aspect::Helpfulness: return "helpfulness";
    }
    return "";
}

/// Human-readable name used inside prompts and text reports.
constexpr std::string_view aspect_display_name(Aspect a) noexcept
{
    switch (a) {
    case Aspect::Actionability: return "Actionability";
    case Aspect::GroundingSpecificity: return "Grounding & Specificity";
    case Aspect::Verifiability: return "Verifiability";
    case Aspect::Helpfulness: return "Helpfulness";
    }
    return "";
}

inline std::optional<Aspect> parse_aspect(std::string_view key) noexcept
{
    for (auto a : kAllAspects)
        if (aspect_key(a) == key)
            return a;
    return std::nullopt;
}

inline std::string_view trim(std::string_view s) noexcept
{
    auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    while (!s.empty() && is_space(s.front()))
        s.remove_prefix(1);
    while (!s.empty() && is_space(s.back()))
        s.remove_suffix(1);
    return s;
}

inline std::string to_lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

/// Number of whitespace-separated tokens.
inline std::size_t word_count(std::string_view text) noexcept
{
    std::size_t n = 0;
    bool in_word = false;
    for (char c : text) {
        const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_word)
            ++n;
        in_word = !space;
    }
    return n;
}

/// Ordinal score 1..5, or the Verifiability-only "X" (No Claim) sentinel.
/// Stored as a tagged value so the sentinel can never leak into arithmetic.
class AspectLabel {
public:
    static constexpr AspectLabel ordinal(int score)
    {
        if (score < 1 || score > 5)
            throw RejectedLabel("ordinal label out of range: " + std::to_string(score));
        return AspectLabel(static_cast<std::int8_t>(score));
    }

    static constexpr AspectLabel no_claim() noexcept { return AspectLabel(0); }

    constexpr bool is_no_claim() const noexcept { return code_ == 0; }
    constexpr bool is_ordinal() const noexcept { return code_ != 0; }

    constexpr int score() const
    {
        if (is_no_claim())
            throw RejectedLabel("No Claim label has no ordinal score");
        return code_;
    }

    std::string to_string() const { return is_no_claim() ? "X" : std::to_string(code_); }

    /// NoClaim orders before every ordinal score; only used for keyed containers.
    constexpr auto operator<=>(const AspectLabel&) const = default;

private:
    constexpr explicit AspectLabel(std::int8_t code) noexcept : code_(code) {}
    std::int8_t code_;
};

inline bool label_valid_for(Aspect aspect, AspectLabel label) noexcept
{
    return label.is_ordinal() || aspect == Aspect::Verifiability;
}

/// Parses a trimmed label token. "X"/"x" is accepted for Verifiability only.
inline AspectLabel validate_label(Aspect aspect, std::string_view raw)
{
    if (raw == "X" || raw == "x") {
        if (aspect != Aspect::Verifiability)
            throw RejectedLabel("label X is only valid for verifiability, got it for " +
                                std::string(aspect_key(aspect)));
        return AspectLabel::no_claim();
    }
    if (raw.size() != 1 || raw[0] < '1' || raw[0] > '5')
        throw RejectedLabel("invalid " + std::string(aspect_key(aspect)) + " label '" +
                            std::string(raw) + "'");
    return AspectLabel::ordinal(raw[0] - '0');
}

enum class AnnotationMode : std::uint8_t { ScoreOnly, ScoreWithRationale, Human };

constexpr std::string_view mode_key(AnnotationMode m) noexcept
{
    switch (m) {
    case AnnotationMode::ScoreOnly: return "score";
    case AnnotationMode::ScoreWithRationale: return "score_rationale";
    case AnnotationMode::Human: return "human";
    }
    return "";
}

inline std::optional<AnnotationMode> parse_mode(std::string_view key) noexcept
{
    for (auto m : {AnnotationMode::ScoreOnly, AnnotationMode::ScoreWithRationale,
                   AnnotationMode::Human})
        if (mode_key(m) == key)
            return m;
    return std::nullopt;
}

struct ReviewComment {
    std::string id;
    std::string review_id;
    std::string venue;
    int year = 0;
    std::size_t position = 0;
    std::string text;
    std::size_t word_count = 0;

    static ReviewComment make(std::string id, std::string review_id, std::string venue,
                              int year, std::size_t position, std::string text)
    {
        const auto wc = revutil::word_count(text);
        return {std::move(id), std::move(review_id), std::move(venue), year, position,
                std::move(text), wc};
    }
};

struct AnnotationRecord {
    std::string comment_id;
    std::string annotator_id;
    Aspect aspect = Aspect::Actionability;
    AspectLabel label = AspectLabel::ordinal(1);
    std::optional<std::string> rationale;
    AnnotationMode mode = AnnotationMode::Human;
};

enum class AgreementLevel : std::uint8_t { Full, Majority, Low };

constexpr std::string_view agreement_key(AgreementLevel l) noexcept
{
    switch (l) {
    case AgreementLevel::Full: return "full";
    case AgreementLevel::Majority: return "majority";
    case AgreementLevel::Low: return "low";
    }
    return "";
}

struct AgreementClass {
    AgreementLevel level = AgreementLevel::Low;
    std::optional<AspectLabel> majority_label; ///< set iff level is Full or Majority
};

/// Full/Majority/Low split of a triple-annotated item. NoClaim is compared
/// like any other category.
inline AgreementClass classify_agreement(std::span<const AspectLabel> labels)
{
    if (labels.size() != 3)
        throw ArityError("classify_agreement needs exactly 3 labels, got " +
                         std::to_string(labels.size()));
    const auto& a = labels[0];
    const auto& b = labels[1];
    const auto& c = labels[2];
    if (a == b && b == c)
        return {AgreementLevel::Full, a};
    if (a == b || a == c)
        return {AgreementLevel::Majority, a};
    if (b == c)
        return {AgreementLevel::Majority, b};
    return {AgreementLevel::Low, std::nullopt};
}

} // namespace revutil
