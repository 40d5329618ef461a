#pragma once

// Rule-based segmentation of peer reviews into individual weakness comments.
//
// Pipeline, applied per extracted section:
//   clean -> split at line-start delimiters -> merge short fragments ->
//   drop typo-only -> keep delimiter-initiated -> drop post-rebuttal ->
//   mean +/- std length window -> final minimum length.

#include <revutil/core.hpp>
#include <revutil/dataset.hpp>

#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <regex>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace revutil::segment {

struct LengthBounds {
    double mean = 0.0;
    double std = 0.0;
    double min_words = 0.0;
    double max_words = 0.0;

    static LengthBounds from_mean_std(double mean, double std)
    {
        return {mean, std, mean - std, mean + std};
    }
};

/// Population mean/std of the word counts; bounds are mean -/+ std.
inline LengthBounds compute_length_bounds(std::span<const std::size_t> word_counts)
{
    if (word_counts.size() < 2)
        throw InsufficientData("compute_length_bounds needs at least 2 word counts, got " +
                               std::to_string(word_counts.size()));
    const double n = static_cast<double>(word_counts.size());
    double mean = 0.0;
    for (auto c : word_counts)
        mean += static_cast<double>(c);
    mean /= n;
    double ss = 0.0;
    for (auto c : word_counts)
        ss += (static_cast<double>(c) - mean) * (static_cast<double>(c) - mean);
    return LengthBounds::from_mean_std(mean, std::sqrt(ss / n));
}

/// How a venue's reviews expose their weakness/question text.
struct VenueProfile {
    /// Structured field names to pass through, in order. Empty means the
    /// venue is free text and headings are matched instead.
    std::vector<std::string> fields;
    /// Treat the whole text as one section when no heading matches.
    bool whole_text_fallback = false;
};

struct SegmenterConfig {
    /// ECMAScript regexes, tried in order at the start of each line.
    std::vector<std::string> delimiter_patterns = {
        R"((?:-|\*|•|\+|–)\s+)",
        R"(\(\d{1,2}\)\s*)",
        R"(\d{1,2}[.)]\s+)",
        R"(\([WQ]\d{1,2}\)\s*)",
        R"([WQ]\d{1,2}\s*[:.)]\s*)",
        R"([WQ]\s*:\s*)",
        R"((?:Weakness|Question)(?:es|s)?\s*\d{0,2}\s*[:.)]\s*)",
    };
    std::size_t min_merge_words = 5;
    std::size_t final_min_words = 10;

    std::vector<std::string> typo_keywords = {"typo", "typos", "grammar", "spelling"};
    /// Words that carry no content when judging whether a fragment is only
    /// about typos.
    std::vector<std::string> typo_noise_words = {
        "a",     "an",    "the",   "in",     "on",     "at",      "of",     "to",
        "and",   "or",    "is",    "are",    "be",     "should",  "please", "fix",
        "fixes", "fixed", "minor", "some",   "several", "few",    "there",  "also",
        "small", "found", "following", "correct", "instead", "e.g.", "eg", "i.e.",
        "other", "many",  "etc",   "check",  "errors", "error",   "mistakes", "grammatical"};
    std::size_t typo_min_content_words = 3;

    std::vector<std::string> post_rebuttal_keywords = {"post-rebuttal", "post rebuttal",
                                                       "after the rebuttal", "rebuttal period"};

    std::map<std::string, VenueProfile> venue_profiles = {
        {"generic", {{}, true}},
        {"arr",
         {{"summary_of_weaknesses", "reasons_to_reject", "comments_suggestions_and_typos",
           "questions_for_the_authors"},
          false}},
        {"acl", {{"summary_of_weaknesses", "reasons_to_reject", "comments_suggestions_and_typos"}, false}},
        {"emnlp", {{"reasons_to_reject", "questions_for_the_authors"}, false}},
        {"iclr", {{"weaknesses", "questions"}, false}},
        {"neurips", {{"weaknesses", "questions"}, false}},
    };

    /// Fixed bounds; when absent they are computed over the corpus.
    std::optional<LengthBounds> length_bounds;

    void validate() const
    {
        if (min_merge_words >= final_min_words)
            throw Error("segmenter config: min_merge_words must be < final_min_words");
        if (delimiter_patterns.empty())
            throw Error("segmenter config: delimiter_patterns must not be empty");
    }
};

// --- config (de)serialization -------------------------------------------

inline json to_json(const SegmenterConfig& c)
{
    json profiles = json::object();
    for (const auto& [name, p] : c.venue_profiles)
        profiles[name] = {{"fields", p.fields}, {"whole_text_fallback", p.whole_text_fallback}};
    json j = {{"delimiter_patterns", c.delimiter_patterns},
              {"min_merge_words", c.min_merge_words},
              {"final_min_words", c.final_min_words},
              {"typo_keywords", c.typo_keywords},
              {"typo_noise_words", c.typo_noise_words},
              {"typo_min_content_words", c.typo_min_content_words},
              {"post_rebuttal_keywords", c.post_rebuttal_keywords},
              {"venue_profiles", profiles}};
    if (c.length_bounds)
        j["length_bounds"] = {{"min_words", c.length_bounds->min_words},
                              {"max_words", c.length_bounds->max_words}};
    return j;
}

/// Missing keys keep their defaults.
inline SegmenterConfig config_from_json(const json& j)
{
    SegmenterConfig c;
    auto take = [&](const char* key, auto& field) {
        if (auto it = j.find(key); it != j.end())
            it->get_to(field);
    };
    take("delimiter_patterns", c.delimiter_patterns);
    take("min_merge_words", c.min_merge_words);
    take("final_min_words", c.final_min_words);
    take("typo_keywords", c.typo_keywords);
    take("typo_noise_words", c.typo_noise_words);
    take("typo_min_content_words", c.typo_min_content_words);
    take("post_rebuttal_keywords", c.post_rebuttal_keywords);
    if (auto it = j.find("venue_profiles"); it != j.end()) {
        c.venue_profiles.clear();
        for (const auto& [name, p] : it->items())
            c.venue_profiles[to_lower(name)] = {p.value("fields", std::vector<std::string>{}),
                                                p.value("whole_text_fallback", false)};
    }
    if (auto it = j.find("length_bounds"); it != j.end() && !it->is_null()) {
        LengthBounds b;
        b.min_words = it->at("min_words").get<double>();
        b.max_words = it->at("max_words").get<double>();
        b.mean = (b.min_words + b.max_words) / 2.0;
        b.std = (b.max_words - b.min_words) / 2.0;
        c.length_bounds = b;
    }
    c.validate();
    return c;
}

// --- section extraction --------------------------------------------------

/// A review as ingested: either free text or named structured fields.
struct RawReview {
    std::string id;
    std::string venue;
    int year = 0;
    std::string text;
    std::vector<std::pair<std::string, std::string>> fields;
};

inline RawReview review_from_json(const json& j)
{
    RawReview r;
    r.id = revutil::detail::required_string(j, "id");
    r.venue = j.value("venue", "");
    if (auto it = j.find("year"); it != j.end() && it->is_number_integer())
        r.year = it->get<int>();
    r.text = j.value("text", "");
    if (auto it = j.find("fields"); it != j.end() && it->is_object())
        for (const auto& [k, v] : it->items())
            if (v.is_string())
                r.fields.emplace_back(k, v.get<std::string>());
    if (r.text.empty() && r.fields.empty())
        throw std::invalid_argument("review has neither 'text' nor 'fields'");
    return r;
}

inline std::vector<RawReview> load_reviews(const std::string& path)
{
    auto in = open_input(path);
    std::vector<RawReview> out;
    for_each_jsonl(in, path, [&](const json& j, std::size_t) { out.push_back(review_from_json(j)); });
    return out;
}

namespace detail {

enum class SectionKind { Keep, Drop };

struct HeadingRule {
    std::string_view phrase;
    SectionKind kind;
};

// Longer phrases first so "summary of weaknesses" wins over "summary".
inline constexpr HeadingRule kHeadingRules[] = {
    {"summary of weaknesses", SectionKind::Keep},
    {"summary of strengths", SectionKind::Drop},
    {"summary of the paper", SectionKind::Drop},
    {"summary of contributions", SectionKind::Drop},
    {"questions for the authors", SectionKind::Keep},
    {"questions for authors", SectionKind::Keep},
    {"questions to the authors", SectionKind::Keep},
    {"comments suggestions and typos", SectionKind::Keep},
    {"comments, suggestions and typos", SectionKind::Keep},
    {"reasons to reject", SectionKind::Keep},
    {"reasons to accept", SectionKind::Drop},
    {"weaknesses", SectionKind::Keep},
    {"weakness", SectionKind::Keep},
    {"questions", SectionKind::Keep},
    {"question", SectionKind::Keep},
    {"discussion", SectionKind::Keep},
    {"concerns", SectionKind::Keep},
    {"cons", SectionKind::Keep},
    {"summary", SectionKind::Drop},
    {"strengths", SectionKind::Drop},
    {"strength", SectionKind::Drop},
    {"pros", SectionKind::Drop},
    {"soundness", SectionKind::Drop},
    {"presentation", SectionKind::Drop},
    {"contribution", SectionKind::Drop},
    {"limitations", SectionKind::Drop},
    {"rating", SectionKind::Drop},
    {"confidence", SectionKind::Drop},
    {"flag for ethics review", SectionKind::Drop},
    {"ethics", SectionKind::Drop},
};

inline std::string normalize_field_name(std::string_view name)
{
    std::string out;
    for (char c : name) {
        const auto uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc))
            out += static_cast<char>(std::tolower(uc));
        else if (!out.empty() && out.back() != ' ')
            out += ' ';
    }
    while (!out.empty() && out.back() == ' ')
        out.pop_back();
    return out;
}

struct HeadingMatch {
    SectionKind kind;
    std::string rest; ///< text after the heading on the same line
};

/// A heading is a line that starts (after markdown decoration) with a known
/// phrase followed by a colon or the end of the line.
inline std::optional<HeadingMatch> match_heading(std::string_view line)
{
    auto s = trim(line);
    while (!s.empty() && (s.front() == '#' || s.front() == '*' || s.front() == '_'))
        s.remove_prefix(1);
    s = trim(s);
    const auto lower = to_lower(s);
    for (const auto& rule : kHeadingRules) {
        if (lower.compare(0, rule.phrase.size(), rule.phrase) != 0)
            continue;
        auto tail = std::string_view(s).substr(rule.phrase.size());
        while (!tail.empty() && (tail.front() == '*' || tail.front() == '_' || tail.front() == ' '))
            tail.remove_prefix(1);
        if (tail.empty())
            return HeadingMatch{rule.kind, ""};
        if (tail.front() == ':') {
            tail.remove_prefix(1);
            while (!tail.empty() && (tail.front() == '*' || tail.front() == '_'))
                tail.remove_prefix(1);
            return HeadingMatch{rule.kind, std::string(trim(tail))};
        }
    }
    return std::nullopt;
}

inline std::optional<SectionKind> classify_field(std::string_view name)
{
    const auto norm = normalize_field_name(name);
    for (const auto& rule : kHeadingRules)
        if (normalize_field_name(rule.phrase) == norm)
            return rule.kind;
    return std::nullopt;
}

inline std::string venue_profile_key(std::string_view venue)
{
    std::string key;
    for (char c : venue) {
        const auto uc = static_cast<unsigned char>(c);
        if (std::isalpha(uc))
            key += static_cast<char>(std::tolower(uc));
        else if (!key.empty())
            break;
    }
    return key;
}

} // namespace detail

/// Returns the weakness/question/discussion texts of a review, in order.
/// Summary and strengths material is dropped.
inline std::vector<std::string> extract_review_sections(const RawReview& review,
                                                        const SegmenterConfig& config)
{
    const auto key = review.venue.empty() ? std::string("generic")
                                          : detail::venue_profile_key(review.venue);
    const VenueProfile* profile = nullptr;
    if (auto it = config.venue_profiles.find(key); it != config.venue_profiles.end())
        profile = &it->second;

    std::vector<std::string> sections;
    if (!review.fields.empty()) {
        if (profile && !profile->fields.empty()) {
            for (const auto& wanted : profile->fields)
                for (const auto& [name, value] : review.fields)
                    if (detail::normalize_field_name(name) == detail::normalize_field_name(wanted) &&
                        !trim(value).empty())
                        sections.emplace_back(trim(value));
        } else {
            for (const auto& [name, value] : review.fields)
                if (detail::classify_field(name) == detail::SectionKind::Keep && !trim(value).empty())
                    sections.emplace_back(trim(value));
        }
        return sections;
    }

    // Free text: heading matcher.
    std::optional<detail::SectionKind> current;
    std::string buffer;
    bool any_heading = false;
    auto flush = [&] {
        if (current == detail::SectionKind::Keep && !trim(buffer).empty())
            sections.emplace_back(trim(buffer));
        buffer.clear();
    };
    std::size_t pos = 0;
    const std::string& text = review.text;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string::npos)
            nl = text.size();
        const std::string_view line(text.data() + pos, nl - pos);
        if (auto h = detail::match_heading(line)) {
            flush();
            any_heading = true;
            current = h->kind;
            if (!h->rest.empty())
                buffer = h->rest + "\n";
        } else {
            buffer.append(line);
            buffer += '\n';
        }
        pos = nl + 1;
    }
    flush();

    if (!any_heading) {
        if (!profile)
            throw UnknownVenue("no segmentation profile for venue '" + review.venue +
                               "' and no known section headings in review " + review.id);
        if (profile->whole_text_fallback && !trim(text).empty())
            sections.emplace_back(trim(text));
    }
    return sections;
}

// --- cleaning ------------------------------------------------------------

/// Normalizes line endings, repairs LaTeX extraction artifacts, collapses
/// runs of spaces and of blank lines. Single newlines are kept because the
/// splitter works on line starts.
inline std::string clean_text(std::string_view raw)
{
    std::string s;
    s.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == '\r') {
            s += '\n';
            if (i + 1 < raw.size() && raw[i + 1] == '\n')
                ++i;
        } else if (raw[i] == '\t') {
            s += ' ';
        } else {
            s += raw[i];
        }
    }

    static const std::regex latex_cmd(R"(\\(?:textbf|textit|emph|texttt|underline|mathrm)\{([^{}]*)\})");
    s = std::regex_replace(s, latex_cmd, "$1");
    static const std::regex latex_escape(R"(\\([_%&#$]))");
    s = std::regex_replace(s, latex_escape, "$1");
    static const std::regex tex_quotes(R"(``|'')");
    s = std::regex_replace(s, tex_quotes, "\"");

    std::string out;
    out.reserve(s.size());
    std::size_t blank_run = 0;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        auto nl = s.find('\n', pos);
        if (nl == std::string::npos)
            nl = s.size();
        std::string line;
        bool prev_space = false;
        for (std::size_t i = pos; i < nl; ++i) {
            const bool space = s[i] == ' ' || s[i] == '\f' || s[i] == '\v';
            if (space && prev_space)
                continue;
            line += space ? ' ' : s[i];
            prev_space = space;
        }
        const auto trimmed = trim(line);
        if (trimmed.empty()) {
            ++blank_run;
        } else {
            if (!out.empty())
                out += blank_run > 0 ? "\n\n" : "\n";
            out += trimmed;
            blank_run = 0;
        }
        pos = nl + 1;
    }
    return out;
}

// --- splitting and filtering ---------------------------------------------

struct Fragment {
    std::size_t section = 0; ///< index of the section it came from
    std::size_t begin = 0;   ///< offsets into the cleaned section text
    std::size_t end = 0;
    bool began_at_delimiter = false;
    std::string text;
    std::size_t words = 0;
};

/// Per-stage drop accounting. `stages` lists only stages that removed
/// fragments; merges count the fragments absorbed into a neighbour.
struct DropReport {
    std::size_t input_fragments = 0;
    std::size_t output_comments = 0;
    std::map<std::string, std::size_t> stages;

    void add(const std::string& stage, std::size_t n = 1)
    {
        if (n > 0)
            stages[stage] += n;
    }

    std::size_t dropped() const
    {
        std::size_t total = 0;
        for (const auto& [_, n] : stages)
            total += n;
        return total;
    }

    void merge(const DropReport& other)
    {
        input_fragments += other.input_fragments;
        output_comments += other.output_comments;
        for (const auto& [k, v] : other.stages)
            add(k, v);
    }
};

inline constexpr std::string_view kStageMerge = "merge_short";
inline constexpr std::string_view kStageTypo = "typo_only";
inline constexpr std::string_view kStageNotBullet = "not_bullet";
inline constexpr std::string_view kStagePostRebuttal = "post_rebuttal";
inline constexpr std::string_view kStageLengthBounds = "length_bounds";
inline constexpr std::string_view kStageMinWords = "min_words";

inline json to_json(const DropReport& r)
{
    json stages = json::object();
    for (const auto& [k, v] : r.stages)
        stages[k] = v;
    return {{"input_fragments", r.input_fragments},
            {"output_comments", r.output_comments},
            {"stages", stages}};
}

namespace detail {

inline std::vector<std::regex> compile_patterns(const std::vector<std::string>& patterns)
{
    std::vector<std::regex> out;
    out.reserve(patterns.size());
    for (const auto& p : patterns)
        out.emplace_back("^(?:" + p + ")");
    return out;
}

inline void refresh(Fragment& f, const std::string& cleaned)
{
    auto view = trim(std::string_view(cleaned).substr(f.begin, f.end - f.begin));
    f.text.assign(view);
    f.words = word_count(f.text);
}

inline Fragment join(const Fragment& first, const Fragment& second, const std::string& cleaned)
{
    Fragment f = first;
    f.end = second.end;
    f.began_at_delimiter = first.began_at_delimiter || second.began_at_delimiter;
    refresh(f, cleaned);
    return f;
}

inline std::string strip_token(std::string_view tok)
{
    auto is_punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
    while (!tok.empty() && is_punct(tok.front()))
        tok.remove_prefix(1);
    while (!tok.empty() && is_punct(tok.back()))
        tok.remove_suffix(1);
    return to_lower(tok);
}

inline bool is_locator(const std::string& tok)
{
    static const std::regex locator(
        R"(^(?:l|ln|line|lines|p|pp|page|pages|eq|eqs|equation|sec|section|fig|figure|tab|table|appendix)?\.?[0-9ivx]*[0-9][0-9.,\-]*$|^(?:l|ln|line|lines|p|pp|page|pages|eq|equation|sec|section|fig|figure|tab|table|appendix)$)");
    return std::regex_match(tok, locator);
}

} // namespace detail

/// Splits cleaned text into fragments at line-start delimiters. Text before
/// the first delimiter forms a fragment that did not begin at a delimiter.
inline std::vector<Fragment> split_fragments(const std::string& cleaned,
                                             const std::vector<std::regex>& patterns,
                                             std::size_t section = 0)
{
    std::vector<Fragment> frags;
    std::size_t pos = 0;
    while (pos < cleaned.size()) {
        auto nl = cleaned.find('\n', pos);
        if (nl == std::string::npos)
            nl = cleaned.size();
        const std::string line = cleaned.substr(pos, nl - pos);
        std::smatch m;
        bool is_delim = false;
        for (const auto& re : patterns) {
            if (std::regex_search(line, m, re) && m.length(0) > 0) {
                is_delim = true;
                break;
            }
        }
        if (is_delim) {
            if (!frags.empty())
                frags.back().end = pos;
            Fragment f;
            f.section = section;
            f.begin = pos + static_cast<std::size_t>(m.length(0));
            f.began_at_delimiter = true;
            frags.push_back(f);
        } else if (frags.empty() && !line.empty()) {
            Fragment f;
            f.section = section;
            f.begin = pos;
            frags.push_back(f);
        }
        pos = nl + 1;
    }
    for (auto& f : frags) {
        if (&f == &frags.back())
            f.end = cleaned.size();
        detail::refresh(f, cleaned);
    }
    return frags;
}

/// Absorbs fragments shorter than `min_words` into the following fragment;
/// a short tail joins the preceding one.
inline std::vector<Fragment> merge_short(const std::vector<Fragment>& frags,
                                         const std::string& cleaned, std::size_t min_words,
                                         DropReport& report)
{
    std::vector<Fragment> out;
    std::optional<Fragment> pending;
    for (std::size_t i = 0; i < frags.size(); ++i) {
        Fragment f = frags[i];
        if (pending) {
            f = detail::join(*pending, f, cleaned);
            pending.reset();
            report.add(std::string(kStageMerge));
        }
        if (f.words < min_words && i + 1 < frags.size()) {
            pending = f;
            continue;
        }
        out.push_back(std::move(f));
    }
    if (out.size() > 1 && out.back().words < min_words) {
        out[out.size() - 2] = detail::join(out[out.size() - 2], out.back(), cleaned);
        out.pop_back();
        report.add(std::string(kStageMerge));
    }
    return out;
}

inline bool is_typo_only(std::string_view text, const SegmenterConfig& config)
{
    std::istringstream in{std::string(text)};
    bool mentions_typo = false;
    std::size_t content = 0;
    const std::set<std::string> typo(config.typo_keywords.begin(), config.typo_keywords.end());
    const std::set<std::string> noise(config.typo_noise_words.begin(), config.typo_noise_words.end());
    for (std::string raw; in >> raw;) {
        const auto tok = detail::strip_token(raw);
        if (tok.empty())
            continue;
        if (typo.contains(tok)) {
            mentions_typo = true;
            continue;
        }
        if (noise.contains(tok) || detail::is_locator(tok))
            continue;
        ++content;
    }
    return mentions_typo && content < config.typo_min_content_words;
}

inline bool mentions_post_rebuttal(std::string_view text, const SegmenterConfig& config)
{
    const auto lower = to_lower(text);
    for (const auto& kw : config.post_rebuttal_keywords)
        if (lower.find(to_lower(kw)) != std::string::npos)
            return true;
    return false;
}

/// A fragment that survived the content filters, before length filtering.
struct Candidate {
    std::string text;
    std::size_t words = 0;
};

/// Cleans, splits and merges, then applies the typo / bullet / post-rebuttal filters.
inline std::vector<Candidate> segment_candidates(std::span<const std::string> sections,
                                                 const SegmenterConfig& config,
                                                 DropReport& report)
{
    config.validate();
    const auto patterns = detail::compile_patterns(config.delimiter_patterns);
    std::vector<Candidate> out;
    for (std::size_t s = 0; s < sections.size(); ++s) {
        const auto cleaned = clean_text(sections[s]);
        auto frags = split_fragments(cleaned, patterns, s);
        report.input_fragments += frags.size();
        frags = merge_short(frags, cleaned, config.min_merge_words, report);
        for (auto& f : frags) {
            if (is_typo_only(f.text, config)) {
                report.add(std::string(kStageTypo));
                continue;
            }
            if (!f.began_at_delimiter) {
                report.add(std::string(kStageNotBullet));
                continue;
            }
            if (mentions_post_rebuttal(f.text, config)) {
                report.add(std::string(kStagePostRebuttal));
                continue;
            }
            out.push_back({std::move(f.text), f.words});
        }
    }
    return out;
}

/// The mean +/- std window (when bounds are given) and the final
/// minimum length.
inline std::vector<Candidate> apply_length_filters(std::vector<Candidate> candidates,
                                                   const std::optional<LengthBounds>& bounds,
                                                   const SegmenterConfig& config,
                                                   DropReport& report)
{
    std::vector<Candidate> out;
    for (auto& c : candidates) {
        const auto w = static_cast<double>(c.words);
        if (bounds && (w < bounds->min_words || w > bounds->max_words)) {
            report.add(std::string(kStageLengthBounds));
            continue;
        }
        if (c.words < config.final_min_words) {
            report.add(std::string(kStageMinWords));
            continue;
        }
        out.push_back(std::move(c));
    }
    report.output_comments += out.size();
    return out;
}

struct Segmentation {
    std::vector<ReviewComment> comments;
    DropReport report;
};

inline std::vector<ReviewComment> to_comments(const std::vector<Candidate>& kept,
                                              const RawReview& review)
{
    std::vector<ReviewComment> out;
    out.reserve(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i)
        out.push_back(ReviewComment::make(review.id + "-" + std::to_string(i), review.id,
                                          review.venue, review.year, i, kept[i].text));
    return out;
}

/// Segments one review's extracted sections. Positions are re-indexed 0..n-1.
inline Segmentation segment_review(std::span<const std::string> sections,
                                   const SegmenterConfig& config,
                                   const std::optional<LengthBounds>& bounds,
                                   const RawReview& provenance = {})
{
    Segmentation result;
    auto candidates = segment_candidates(sections, config, result.report);
    auto kept = apply_length_filters(std::move(candidates), bounds, config, result.report);
    result.comments = to_comments(kept, provenance);
    return result;
}

inline Segmentation segment_review(std::string_view section, const SegmenterConfig& config,
                                   const std::optional<LengthBounds>& bounds,
                                   const RawReview& provenance = {})
{
    const std::string s(section);
    return segment_review(std::span<const std::string>(&s, 1), config, bounds, provenance);
}

struct CorpusSegmentation {
    std::vector<ReviewComment> comments;
    DropReport report;
    std::optional<LengthBounds> bounds;
};

/// Two passes: candidates for every review, then one global length window
/// computed over all candidates (unless the config fixes it).
inline CorpusSegmentation segment_corpus(std::span<const RawReview> reviews,
                                         const SegmenterConfig& config)
{
    CorpusSegmentation result;
    std::vector<std::vector<Candidate>> per_review;
    per_review.reserve(reviews.size());
    std::vector<std::size_t> counts;
    for (const auto& review : reviews) {
        const auto sections = extract_review_sections(review, config);
        per_review.push_back(segment_candidates(sections, config, result.report));
        for (const auto& c : per_review.back())
            counts.push_back(c.words);
    }
    result.bounds = config.length_bounds;
    if (!result.bounds && counts.size() >= 2)
        result.bounds = compute_length_bounds(counts);
    for (std::size_t i = 0; i < reviews.size(); ++i) {
        auto kept = apply_length_filters(std::move(per_review[i]), result.bounds, config,
                                         result.report);
        auto comments = to_comments(kept, reviews[i]);
        result.comments.insert(result.comments.end(), std::make_move_iterator(comments.begin()),
                               std::make_move_iterator(comments.end()));
    }
    return result;
}

} // namespace revutil::segment
