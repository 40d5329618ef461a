#pragma once

// Aspect rubrics, in-context example pools and prompt rendering.

#include <revutil/core.hpp>
#include <revutil/dataset.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#ifndef REVUTIL_RESOURCE_DIR
#define REVUTIL_RESOURCE_DIR "resources"
#endif

namespace revutil::rubric {

namespace fs = std::filesystem;

enum class ScoreMode : std::uint8_t { ScoreOnly, ScoreWithRationale };
enum class PromptKind : std::uint8_t { SingleAspect, MultiAspect, ClaimDetection };
enum class Task : std::uint8_t { Scoring, ClaimDetection };

constexpr std::string_view score_mode_key(ScoreMode m) noexcept
{
    return m == ScoreMode::ScoreOnly ? "score" : "score_rationale";
}

inline std::optional<ScoreMode> parse_score_mode(std::string_view key) noexcept
{
    if (key == "score")
        return ScoreMode::ScoreOnly;
    if (key == "score_rationale")
        return ScoreMode::ScoreWithRationale;
    return std::nullopt;
}

inline constexpr std::string_view kClaimLabel = "Claim";
inline constexpr std::string_view kNoClaimLabel = "No Claim";

/// REVUTIL_RESOURCE_DIR from the environment, else the build-time location.
inline fs::path default_resource_dir()
{
    if (const char* env = std::getenv("REVUTIL_RESOURCE_DIR"); env && *env)
        return env;
    return REVUTIL_RESOURCE_DIR;
}

struct RubricText {
    Aspect aspect = Aspect::Actionability;
    std::string preamble;
    std::string labels_intro;
    std::map<AspectLabel, std::string> label_descriptors;

    /// Definition followed by the label descriptors, ordinal labels first.
    std::string description() const
    {
        std::string out = preamble;
        out += "\n\nLabels\n";
        if (!labels_intro.empty())
            out += labels_intro + "\n\n";
        bool first = true;
        auto emit = [&](const std::string& d) {
            if (!first)
                out += "\n\n";
            out += d;
            first = false;
        };
        for (const auto& [label, text] : label_descriptors)
            if (label.is_ordinal())
                emit(text);
        if (auto it = label_descriptors.find(AspectLabel::no_claim()); it != label_descriptors.end())
            emit(it->second);
        return out;
    }
};

struct ExampleSeed {
    std::string text;
    std::string label; ///< "1".."5", "X", or "Claim"/"No Claim" for claim detection
    std::string rationale;
};

/// Seed examples grouped by label key.
struct ExamplePool {
    Aspect aspect = Aspect::Actionability;
    Task task = Task::Scoring;
    std::map<std::string, std::vector<ExampleSeed>> by_label;

    void add(ExampleSeed seed)
    {
        if (trim(seed.rationale).empty())
            throw Error("example seed without rationale: " + seed.text.substr(0, 60));
        if (task == Task::Scoring)
            seed.label = validate_label(aspect, trim(seed.label)).to_string();
        else if (seed.label != kClaimLabel && seed.label != kNoClaimLabel)
            throw RejectedLabel("claim-detection seed label must be 'Claim' or 'No Claim', got '" +
                                seed.label + "'");
        by_label[seed.label].push_back(std::move(seed));
    }

    std::size_t size() const
    {
        std::size_t n = 0;
        for (const auto& [_, v] : by_label)
            n += v.size();
        return n;
    }
};

/// JSONL rows of {text, label, rationale}; labels may be strings or integers.
inline ExamplePool read_example_pool(std::istream& in, const std::string& source, Aspect aspect,
                                     Task task)
{
    ExamplePool pool{aspect, task, {}};
    for_each_jsonl(in, source, [&](const json& j, std::size_t) {
        ExampleSeed s;
        s.text = revutil::detail::required_string(j, "text");
        const auto& label = j.at("label");
        s.label = label.is_string() ? label.get<std::string>() : std::to_string(label.get<int>());
        s.rationale = j.value("rationale", "");
        pool.add(std::move(s));
    });
    return pool;
}

inline ExamplePool load_example_pool(const std::string& path, Aspect aspect, Task task)
{
    auto in = open_input(path);
    return read_example_pool(in, path, aspect, task);
}

// --- sampling ------------------------------------------------------------

inline constexpr std::size_t kExamplesPerLabel = 5;

/// Label keys sampled for a task, in prompt order.
inline std::vector<std::string> task_labels(Task task)
{
    if (task == Task::ClaimDetection)
        return {std::string(kNoClaimLabel), std::string(kClaimLabel)};
    return {"1", "2", "3", "4", "5"};
}

namespace detail {

/// Uniform integer in [0, n) by rejection, so results do not depend on the
/// standard library's distribution implementation.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n)
{
    const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

} // namespace detail

/// Five seeds per label without replacement, ascending label, then draw order.
inline std::vector<ExampleSeed> sample_incontext_examples(const ExamplePool& pool,
                                                          std::uint64_t seed, Task task)
{
    const auto labels = task_labels(task);
    for (const auto& label : labels) {
        auto it = pool.by_label.find(label);
        const auto have = it == pool.by_label.end() ? 0 : it->second.size();
        if (have < kExamplesPerLabel)
            throw PoolTooSmall("label '" + label + "' has " + std::to_string(have) +
                               " seed examples, need " + std::to_string(kExamplesPerLabel));
    }
    std::mt19937_64 rng(seed);
    std::vector<ExampleSeed> out;
    out.reserve(labels.size() * kExamplesPerLabel);
    for (const auto& label : labels) {
        const auto& seeds = pool.by_label.at(label);
        std::vector<std::size_t> idx(seeds.size());
        for (std::size_t i = 0; i < idx.size(); ++i)
            idx[i] = i;
        for (std::size_t i = 0; i < kExamplesPerLabel; ++i) {
            const auto j = i + detail::bounded(rng, idx.size() - i);
            std::swap(idx[i], idx[j]);
            out.push_back(seeds[idx[i]]);
        }
    }
    return out;
}

// --- prompts -------------------------------------------------------------

struct PromptBundle {
    PromptKind kind = PromptKind::SingleAspect;
    ScoreMode score_mode = ScoreMode::ScoreWithRationale;
    std::optional<Aspect> aspect; ///< set for single-aspect and claim prompts
    std::string rendered_text;
    std::vector<std::string> expected_keys;
};

/// Replaces "[NAME]" placeholders in one left-to-right pass; substituted
/// text is never rescanned.
inline std::string render_template(std::string_view tmpl,
                                   const std::map<std::string, std::string>& values)
{
    std::string out;
    out.reserve(tmpl.size() * 2);
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const auto open = tmpl.find('[', pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, open - pos));
        const auto close = tmpl.find(']', open);
        if (close != std::string_view::npos) {
            const std::string name(tmpl.substr(open + 1, close - open - 1));
            if (auto it = values.find(name); it != values.end()) {
                out += it->second;
                pos = close + 1;
                continue;
            }
        }
        out += '[';
        pos = open + 1;
    }
    return out;
}

/// Output keys of the multi-aspect prompt, in skeleton order.
inline std::vector<std::string> multi_aspect_keys(ScoreMode mode)
{
    std::vector<std::string> keys;
    for (auto a : kAllAspects) {
        const std::string k(aspect_key(a));
        if (mode == ScoreMode::ScoreWithRationale)
            keys.push_back(k + "_rationale");
        keys.push_back(k + "_label");
    }
    return keys;
}

inline std::vector<std::string> single_aspect_keys(ScoreMode mode)
{
    if (mode == ScoreMode::ScoreOnly)
        return {"label"};
    return {"rationale", "label"};
}

class RubricSet {
public:
    /// Loads rubrics/v1 and prompts/v1 below `root`. Aspects without a
    /// directory are left out and raise MissingRubric when used.
    static RubricSet load(const fs::path& root = default_resource_dir())
    {
        RubricSet set;
        const auto rubric_dir = root / "rubrics" / "v1";
        const auto prompt_dir = root / "prompts" / "v1";
        for (auto aspect : kAllAspects) {
            const auto dir = rubric_dir / std::string(aspect_key(aspect));
            if (!fs::is_directory(dir))
                continue;
            RubricText r;
            r.aspect = aspect;
            r.preamble = read_required(dir / "preamble.txt");
            if (fs::exists(dir / "labels_intro.txt"))
                r.labels_intro = read_required(dir / "labels_intro.txt");
            for (int s = 1; s <= 5; ++s)
                r.label_descriptors[AspectLabel::ordinal(s)] =
                    read_required(dir / (std::to_string(s) + ".txt"));
            if (aspect == Aspect::Verifiability) {
                r.label_descriptors[AspectLabel::no_claim()] = read_required(dir / "X.txt");
                set.claim_description_ = read_required(dir / "claims.txt");
            }
            set.rubrics_.emplace(aspect, std::move(r));
        }
        set.single_template_ = read_required(prompt_dir / "single_aspect.txt");
        set.multi_template_ = read_required(prompt_dir / "multi_aspect.txt");
        set.single_rationale_ = read_required(prompt_dir / "single_instruction_rationale.txt");
        set.single_score_ = read_required(prompt_dir / "single_instruction_score.txt");
        set.multi_rationale_ = read_required(prompt_dir / "multi_instruction_rationale.txt");
        set.multi_score_ = read_required(prompt_dir / "multi_instruction_score.txt");
        set.claim_instruction_ = read_required(prompt_dir / "claim_instruction.txt");
        return set;
    }

    bool has(Aspect a) const { return rubrics_.contains(a); }

    const RubricText& rubric(Aspect a) const
    {
        auto it = rubrics_.find(a);
        if (it == rubrics_.end())
            throw MissingRubric("no rubric loaded for " + std::string(aspect_key(a)));
        return it->second;
    }

    void remove(Aspect a) { rubrics_.erase(a); }

    /// Prompt for one aspect with in-context examples.
    PromptBundle single_aspect_prompt(Aspect aspect, const ReviewComment& comment,
                                      std::span<const ExampleSeed> examples,
                                      ScoreMode mode = ScoreMode::ScoreWithRationale) const
    {
        for (const auto& ex : examples) {
            try {
                const auto label = validate_label(aspect, trim(ex.label));
                if (label.is_no_claim())
                    throw RejectedLabel("X");
            } catch (const RejectedLabel&) {
                throw AspectMismatch("example label '" + ex.label + "' is not a score for " +
                                     std::string(aspect_key(aspect)));
            }
        }
        const auto& r = rubric(aspect);
        PromptBundle b;
        b.kind = PromptKind::SingleAspect;
        b.score_mode = mode;
        b.aspect = aspect;
        b.expected_keys = single_aspect_keys(mode);
        b.rendered_text = render_template(
            single_template_,
            {{"ASPECT", std::string(aspect_display_name(aspect))},
             {"ASPECT DESCRIPTION", r.description()},
             {"INSTRUCTION", mode == ScoreMode::ScoreOnly ? single_score_ : single_rationale_},
             {"INCONTEXT EXAMPLES", render_examples(examples, mode)},
             {"REVIEW POINT", comment.text}});
        return b;
    }

    /// First step of the two-step Verifiability protocol.
    PromptBundle claim_detection_prompt(const ReviewComment& comment,
                                        std::span<const ExampleSeed> examples) const
    {
        for (const auto& ex : examples)
            if (ex.label != kClaimLabel && ex.label != kNoClaimLabel)
                throw AspectMismatch("claim-detection example label '" + ex.label +
                                     "' is not 'Claim' or 'No Claim'");
        rubric(Aspect::Verifiability);
        PromptBundle b;
        b.kind = PromptKind::ClaimDetection;
        b.score_mode = ScoreMode::ScoreWithRationale;
        b.aspect = Aspect::Verifiability;
        b.expected_keys = {"rationale", "label"};
        b.rendered_text = render_template(
            single_template_, {{"ASPECT", "Claim Detection"},
                               {"ASPECT DESCRIPTION", claim_description_},
                               {"INSTRUCTION", claim_instruction_},
                               {"INCONTEXT EXAMPLES", render_examples(examples, b.score_mode)},
                               {"REVIEW POINT", comment.text}});
        return b;
    }

    /// Instruction prompt covering all four aspects.
    PromptBundle multi_aspect_prompt(const ReviewComment& comment, ScoreMode mode) const
    {
        PromptBundle b;
        b.kind = PromptKind::MultiAspect;
        b.score_mode = mode;
        b.expected_keys = multi_aspect_keys(mode);
        std::string skeleton = "{\n";
        for (std::size_t i = 0; i < b.expected_keys.size(); ++i) {
            std::string placeholder = to_upper_words(b.expected_keys[i]);
            skeleton += "  \"" + b.expected_keys[i] + "\": \"[" + placeholder + "]\"";
            skeleton += i + 1 < b.expected_keys.size() ? ",\n" : "\n";
        }
        skeleton += "}";
        b.rendered_text = render_template(
            multi_template_,
            {{"ACTIONABILITY DEFINITIONS", rubric(Aspect::Actionability).description()},
             {"GROUNDING SPECIFICITY DEFINITIONS",
              rubric(Aspect::GroundingSpecificity).description()},
             {"VERIFIABILITY DEFINITIONS", rubric(Aspect::Verifiability).description()},
             {"HELPFULNESS DEFINITIONS", rubric(Aspect::Helpfulness).description()},
             {"INSTRUCTION", mode == ScoreMode::ScoreOnly ? multi_score_ : multi_rationale_},
             {"REVIEW POINT", comment.text},
             {"OUTPUT SKELETON", skeleton}});
        return b;
    }

private:
    static std::string read_required(const fs::path& p)
    {
        std::ifstream in(p, std::ios::binary);
        if (!in)
            throw MissingRubric("missing rubric resource: " + p.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return std::string(trim(ss.str()));
    }

    static std::string to_upper_words(std::string_view key)
    {
        std::string out;
        for (char c : key)
            out += c == '_' ? ' ' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        return out;
    }

    static std::string render_examples(std::span<const ExampleSeed> examples, ScoreMode mode)
    {
        std::string out;
        for (const auto& ex : examples) {
            nlohmann::ordered_json o;
            if (mode == ScoreMode::ScoreWithRationale)
                o["rationale"] = ex.rationale;
            o["label"] = ex.label;
            out += "Review Point: " + ex.text + "\nOutput: " + o.dump() + "\n\n";
        }
        return out;
    }

    std::map<Aspect, RubricText> rubrics_;
    std::string claim_description_;
    std::string single_template_, multi_template_;
    std::string single_rationale_, single_score_, multi_rationale_, multi_score_;
    std::string claim_instruction_;
};

inline PromptBundle build_single_aspect_prompt(const RubricSet& rubrics, Aspect aspect,
                                               const ReviewComment& comment,
                                               std::span<const ExampleSeed> examples,
                                               ScoreMode mode = ScoreMode::ScoreWithRationale)
{
    return rubrics.single_aspect_prompt(aspect, comment, examples, mode);
}

inline PromptBundle build_multi_aspect_prompt(const RubricSet& rubrics, const ReviewComment& comment,
                                              ScoreMode mode)
{
    return rubrics.multi_aspect_prompt(comment, mode);
}

} // namespace revutil::rubric
