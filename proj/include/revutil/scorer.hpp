#pragma once

// Scoring jobs: prompt assembly per path, output parsing, batch execution.

#include <revutil/backend.hpp>
#include <revutil/core.hpp>
#include <revutil/rubric.hpp>

#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace revutil::scoring {

using rubric::ExamplePool;
using rubric::RubricSet;
using rubric::ScoreMode;

enum class ParseStatus : std::uint8_t { Ok, Partial, Failed };

constexpr std::string_view parse_status_key(ParseStatus s) noexcept
{
    switch (s) {
    case ParseStatus::Ok: return "ok";
    case ParseStatus::Partial: return "partial";
    case ParseStatus::Failed: return "failed";
    }
    return "";
}

enum class PromptPath : std::uint8_t { SingleAspect, MultiAspect };

inline std::optional<PromptPath> parse_prompt_path(std::string_view s) noexcept
{
    if (s == "single")
        return PromptPath::SingleAspect;
    if (s == "multi")
        return PromptPath::MultiAspect;
    return std::nullopt;
}

struct AspectScore {
    AspectLabel label = AspectLabel::ordinal(1);
    std::optional<std::string> rationale;
};

struct ScoredComment {
    std::string comment_id;
    std::map<Aspect, AspectScore> scores;
    ParseStatus parse_status = ParseStatus::Failed;
    std::vector<std::string> missing_keys;
    std::string raw_output;
    std::optional<std::string> error; ///< backend failure that prevented scoring
    std::size_t backend_calls = 0;
};

inline json to_json(const ScoredComment& s)
{
    json labels = json::object(), rationales = json::object();
    for (const auto& [aspect, score] : s.scores) {
        labels[std::string(aspect_key(aspect))] = score.label.to_string();
        if (score.rationale)
            rationales[std::string(aspect_key(aspect))] = *score.rationale;
    }
    json j = {{"comment_id", s.comment_id},
              {"parse_status", parse_status_key(s.parse_status)},
              {"missing_keys", s.missing_keys},
              {"labels", labels},
              {"rationales", rationales},
              {"raw_output", s.raw_output},
              {"backend_calls", s.backend_calls}};
    if (s.error)
        j["error"] = *s.error;
    return j;
}

/// Labels and rationales recovered from one model output.
struct ParsedOutput {
    std::map<Aspect, AspectScore> scores;
    ParseStatus status = ParseStatus::Failed;
    std::vector<std::string> missing_keys;
};

namespace detail {

/// First balanced {...} that parses as a JSON object; quotes and escapes are
/// respected while matching braces.
inline std::optional<json> first_json_object(std::string_view raw)
{
    for (std::size_t start = raw.find('{'); start != std::string_view::npos;
         start = raw.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false, escaped = false;
        for (std::size_t i = start; i < raw.size(); ++i) {
            const char c = raw[i];
            if (in_string) {
                if (escaped)
                    escaped = false;
                else if (c == '\\')
                    escaped = true;
                else if (c == '"')
                    in_string = false;
                continue;
            }
            if (c == '"')
                in_string = true;
            else if (c == '{')
                ++depth;
            else if (c == '}' && --depth == 0) {
                auto parsed = json::parse(raw.substr(start, i - start + 1), nullptr, false);
                if (!parsed.is_discarded() && parsed.is_object())
                    return parsed;
                break;
            }
        }
    }
    return std::nullopt;
}

/// Accepts 3, "3", " 3 ", "3 - Somewhat Actionable" and "X".
inline std::optional<AspectLabel> read_label(Aspect aspect, const json& v)
{
    std::string token;
    if (v.is_number_integer())
        token = std::to_string(v.get<long long>());
    else if (v.is_number_float() && v.get<double>() == std::floor(v.get<double>()))
        token = std::to_string(static_cast<long long>(v.get<double>()));
    else if (v.is_string()) {
        const auto s = trim(v.get_ref<const std::string&>());
        const auto cut = s.find_first_of(" -:.");
        token = std::string(cut == std::string_view::npos || cut == 0 ? s : s.substr(0, cut));
    } else
        return std::nullopt;
    try {
        return validate_label(aspect, token);
    } catch (const RejectedLabel&) {
        return std::nullopt;
    }
}

} // namespace detail

/// Keys are either "<aspect>_label"/"<aspect>_rationale" (multi-aspect) or
/// bare "label"/"rationale" (single aspect, exactly one requested aspect).
inline ParsedOutput parse_scored_output(std::string_view raw, std::span<const std::string> schema,
                                        std::span<const Aspect> aspects)
{
    ParsedOutput out;
    const auto obj = detail::first_json_object(raw);
    auto has_key = [&](const std::string& k) {
        return std::find(schema.begin(), schema.end(), k) != schema.end();
    };
    for (auto aspect : aspects) {
        const std::string prefix = std::string(aspect_key(aspect)) + "_";
        const std::string label_key = has_key(prefix + "label") ? prefix + "label" : "label";
        const std::string rationale_key = has_key(prefix + "rationale") ? prefix + "rationale" : "rationale";
        const bool want_rationale = has_key(rationale_key);
        if (!obj) {
            out.missing_keys.push_back(label_key);
            if (want_rationale)
                out.missing_keys.push_back(rationale_key);
            continue;
        }
        std::optional<AspectLabel> label;
        if (auto it = obj->find(label_key); it != obj->end())
            label = detail::read_label(aspect, *it);
        std::optional<std::string> rationale;
        if (auto it = obj->find(rationale_key); want_rationale && it != obj->end() && it->is_string())
            rationale = it->get<std::string>();
        if (want_rationale && !rationale)
            out.missing_keys.push_back(rationale_key);
        if (!label) {
            out.missing_keys.push_back(label_key);
            continue;
        }
        out.scores[aspect] = {*label, rationale};
    }
    if (!obj)
        out.status = ParseStatus::Failed;
    else
        out.status = out.missing_keys.empty() ? ParseStatus::Ok : ParseStatus::Partial;
    return out;
}

enum class ClaimDecision : std::uint8_t { Claim, NoClaim, Unparsed };

/// Reads {"label": "Claim" | "No Claim"}; "X" also means no claim.
inline ClaimDecision parse_claim_output(std::string_view raw)
{
    const auto obj = detail::first_json_object(raw);
    if (!obj)
        return ClaimDecision::Unparsed;
    auto it = obj->find("label");
    if (it == obj->end() || !it->is_string())
        return ClaimDecision::Unparsed;
    std::string norm;
    for (char c : to_lower(trim(it->get_ref<const std::string&>())))
        if (std::isalpha(static_cast<unsigned char>(c)))
            norm += c;
    if (norm == "claim" || norm == "yes")
        return ClaimDecision::Claim;
    if (norm == "noclaim" || norm == "x" || norm == "no")
        return ClaimDecision::NoClaim;
    return ClaimDecision::Unparsed;
}

inline constexpr std::string_view kClaimKey = "claim_detection_label";

struct ScoringJob {
    std::vector<Aspect> aspects{kAllAspects.begin(), kAllAspects.end()};
    PromptPath path = PromptPath::MultiAspect;
    ScoreMode score_mode = ScoreMode::ScoreWithRationale;
    std::uint64_t seed = 0;
    std::size_t max_concurrency = 4;
    /// Scoring pools per aspect and the claim-detection pool; required for
    /// the single-aspect path only.
    std::map<Aspect, ExamplePool> pools;
    std::optional<ExamplePool> claim_pool;
};

namespace detail {

/// Per-comment sampling seed, so each prompt gets its own examples while the
/// batch stays reproducible.
inline std::uint64_t example_seed(std::uint64_t job_seed, std::string_view comment_id, Aspect aspect)
{
    std::uint64_t h = fnv1a(comment_id) ^ (job_seed * 0x9e3779b97f4a7c15ull);
    return h ^ (static_cast<std::uint64_t>(aspect) + 1) * 0xbf58476d1ce4e5b9ull;
}

inline const ExamplePool& require_pool(const ScoringJob& job, Aspect aspect)
{
    auto it = job.pools.find(aspect);
    if (it == job.pools.end())
        throw PoolTooSmall("no example pool for " + std::string(aspect_key(aspect)));
    return it->second;
}

inline void append_raw(std::string& acc, const std::string& raw)
{
    if (!acc.empty())
        acc += "\n---\n";
    acc += raw;
}

} // namespace detail

/// Scores one comment. Backend exceptions propagate; parse problems are
/// recorded in the result.
inline ScoredComment score_comment(const ReviewComment& comment, const ScoringJob& job,
                                   Backend& backend, const RubricSet& rubrics)
{
    ScoredComment result;
    result.comment_id = comment.id;

    if (job.path == PromptPath::MultiAspect) {
        const auto prompt = rubrics.multi_aspect_prompt(comment, job.score_mode);
        result.raw_output = backend.complete(prompt);
        result.backend_calls = 1;
        auto parsed = parse_scored_output(result.raw_output, prompt.expected_keys, job.aspects);
        result.scores = std::move(parsed.scores);
        result.parse_status = parsed.status;
        result.missing_keys = std::move(parsed.missing_keys);
        return result;
    }

    bool any_json = false;
    for (auto aspect : job.aspects) {
        const std::string prefix = std::string(aspect_key(aspect)) + "_";
        if (aspect == Aspect::Verifiability) {
            if (!job.claim_pool)
                throw PoolTooSmall("no claim-detection example pool");
            const auto claim_examples = rubric::sample_incontext_examples(
                *job.claim_pool, detail::example_seed(job.seed, comment.id, aspect),
                rubric::Task::ClaimDetection);
            const auto claim_prompt = rubrics.claim_detection_prompt(comment, claim_examples);
            const auto claim_raw = backend.complete(claim_prompt);
            ++result.backend_calls;
            detail::append_raw(result.raw_output, claim_raw);
            const auto decision = parse_claim_output(claim_raw);
            if (decision == ClaimDecision::Unparsed) {
                result.missing_keys.emplace_back(kClaimKey);
                continue;
            }
            any_json = true;
            if (decision == ClaimDecision::NoClaim) {
                result.scores[aspect] = {AspectLabel::no_claim(), std::nullopt};
                continue;
            }
        }
        const auto examples = rubric::sample_incontext_examples(
            detail::require_pool(job, aspect), detail::example_seed(job.seed, comment.id, aspect),
            rubric::Task::Scoring);
        const auto prompt = rubrics.single_aspect_prompt(aspect, comment, examples, job.score_mode);
        const auto raw = backend.complete(prompt);
        ++result.backend_calls;
        detail::append_raw(result.raw_output, raw);
        const Aspect one[] = {aspect};
        auto parsed = parse_scored_output(raw, prompt.expected_keys, one);
        any_json |= parsed.status != ParseStatus::Failed;
        // The two-step protocol never emits NoClaim from the scoring call.
        if (auto it = parsed.scores.find(aspect); it != parsed.scores.end() && it->second.label.is_ordinal())
            result.scores[aspect] = it->second;
        else if (it != parsed.scores.end())
            parsed.missing_keys.push_back("label");
        for (const auto& k : parsed.missing_keys)
            result.missing_keys.push_back(prefix + k);
    }
    if (result.missing_keys.empty())
        result.parse_status = ParseStatus::Ok;
    else
        result.parse_status = any_json ? ParseStatus::Partial : ParseStatus::Failed;
    return result;
}

struct BatchSummary {
    std::size_t ok = 0, partial = 0, failed = 0;
    std::map<Aspect, std::map<std::string, std::size_t>> label_histogram;
};

inline json to_json(const BatchSummary& s)
{
    json hist = json::object();
    for (const auto& [aspect, counts] : s.label_histogram)
        hist[std::string(aspect_key(aspect))] = counts;
    return {{"ok", s.ok}, {"partial", s.partial}, {"failed", s.failed}, {"label_histogram", hist}};
}

struct BatchResult {
    std::vector<ScoredComment> results; ///< input order
    BatchSummary summary;
};

inline BatchSummary summarize(std::span<const ScoredComment> results)
{
    BatchSummary s;
    for (const auto& r : results) {
        switch (r.parse_status) {
        case ParseStatus::Ok: ++s.ok; break;
        case ParseStatus::Partial: ++s.partial; break;
        case ParseStatus::Failed: ++s.failed; break;
        }
        for (const auto& [aspect, score] : r.scores)
            ++s.label_histogram[aspect][score.label.to_string()];
    }
    return s;
}

/// Runs score_comment over all comments with at most job.max_concurrency
/// requests in flight. AuthError stops the batch and is rethrown; other
/// backend errors mark the item Failed.
inline BatchResult score_batch(std::span<const ReviewComment> comments, const ScoringJob& job,
                               Backend& backend, const RubricSet& rubrics)
{
    if (comments.empty())
        throw EmptyInput("score_batch: no comments to score");
    BatchResult out;
    out.results.resize(comments.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr auth_failure;
    std::mutex failure_mu;

    auto worker = [&] {
        while (!abort.load()) {
            const auto i = next.fetch_add(1);
            if (i >= comments.size())
                return;
            try {
                out.results[i] = score_comment(comments[i], job, backend, rubrics);
            } catch (const AuthError&) {
                std::lock_guard lock(failure_mu);
                if (!auth_failure)
                    auth_failure = std::current_exception();
                abort.store(true);
                return;
            } catch (const Error& e) {
                ScoredComment failed;
                failed.comment_id = comments[i].id;
                failed.parse_status = ParseStatus::Failed;
                failed.error = e.what();
                out.results[i] = std::move(failed);
            }
        }
    };

    const auto n_workers = std::min<std::size_t>(std::max<std::size_t>(job.max_concurrency, 1), comments.size());
    {
        std::vector<std::jthread> pool;
        pool.reserve(n_workers);
        for (std::size_t w = 0; w < n_workers; ++w)
            pool.emplace_back(worker);
    }
    if (auth_failure)
        std::rethrow_exception(auth_failure);
    out.summary = summarize(out.results);
    return out;
}

/// Parsed labels as annotation records, one per scored aspect.
inline std::vector<AnnotationRecord> to_annotations(std::span<const ScoredComment> results,
                                                    const std::string& annotator_id, ScoreMode mode)
{
    std::vector<AnnotationRecord> out;
    for (const auto& r : results)
        for (const auto& [aspect, score] : r.scores)
            out.push_back({r.comment_id, annotator_id, aspect, score.label, score.rationale,
                           mode == ScoreMode::ScoreOnly ? AnnotationMode::ScoreOnly
                                                        : AnnotationMode::ScoreWithRationale});
    return out;
}

} // namespace revutil::scoring
