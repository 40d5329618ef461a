#pragma once

// Command-line front end: segment, score, agree, compare, rationales,
// correlate, serve. Exit codes: 0 ok, 1 data or backend error, 2 usage.

#include <revutil/analysis.hpp>
#include <revutil/backend.hpp>
#include <revutil/scorer.hpp>
#include <revutil/segmenter.hpp>
#include <revutil/service.hpp>

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace revutil::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;

namespace fs = std::filesystem;

/// Bad flag values discovered after parsing (exit 2).
class UsageError : public Error {
public:
    using Error::Error;
};

namespace detail {

/// Writes to `path`, or to `out` when the path is empty or "-".
inline void write_output(const std::string& path, const std::string& content, std::ostream& out)
{
    if (path.empty() || path == "-") {
        out << content;
        return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw Error("cannot write " + path);
    f << content;
    if (!f)
        throw Error("write failed: " + path);
}

inline std::string jsonl(const std::vector<json>& rows)
{
    std::string s;
    for (const auto& r : rows)
        s += r.dump() + "\n";
    return s;
}

/// Reads label records from either annotation JSONL or `score` output
/// (lines carrying a "labels" object).
inline std::vector<AnnotationRecord> read_label_records(const std::string& path)
{
    auto in = open_input(path);
    const auto source_name = fs::path(path).stem().string();
    std::vector<AnnotationRecord> out;
    for_each_jsonl(in, path, [&](const json& j, std::size_t) {
        auto labels = j.find("labels");
        if (labels == j.end()) {
            out.push_back(annotation_from_json(j));
            return;
        }
        if (!labels->is_object())
            throw std::invalid_argument("field 'labels' must be an object");
        const auto cid = revutil::detail::required_string(j, "comment_id");
        const json rationales = j.value("rationales", json::object());
        for (const auto& [key, value] : labels->items()) {
            const auto aspect = parse_aspect(key);
            if (!aspect)
                throw std::invalid_argument("unknown aspect '" + key + "'");
            if (!value.is_string())
                throw std::invalid_argument("label for '" + key + "' must be a string");
            AnnotationRecord r;
            r.comment_id = cid;
            r.annotator_id = source_name;
            r.aspect = *aspect;
            r.label = validate_label(*aspect, value.get<std::string>());
            if (auto it = rationales.find(key); it != rationales.end() && it->is_string())
                r.rationale = it->get<std::string>();
            r.mode = r.rationale ? AnnotationMode::ScoreWithRationale : AnnotationMode::ScoreOnly;
            out.push_back(std::move(r));
        }
    });
    return out;
}

inline json read_json_file(const std::string& path)
{
    auto in = open_input(path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path, 0, e.what());
    }
}

inline rubric::ScoreMode parse_mode_flag(const std::string& s)
{
    if (s == "s")
        return rubric::ScoreMode::ScoreOnly;
    if (s == "s+r")
        return rubric::ScoreMode::ScoreWithRationale;
    throw UsageError("--mode must be 's' or 's+r'");
}

/// Example pools for the single-aspect path: <dir>/<aspect>.jsonl and
/// <dir>/claims.jsonl.
inline void load_pools(scoring::ScoringJob& job, const std::string& dir)
{
    for (auto aspect : job.aspects) {
        const auto p = fs::path(dir) / (std::string(aspect_key(aspect)) + ".jsonl");
        job.pools.emplace(aspect, rubric::load_example_pool(p.string(), aspect, rubric::Task::Scoring));
    }
    const auto claims = fs::path(dir) / "claims.jsonl";
    job.claim_pool = rubric::load_example_pool(claims.string(), Aspect::Verifiability, rubric::Task::ClaimDetection);
}

struct JobFlags {
    std::string mode = "s+r";
    std::string path = "multi";
    std::uint64_t seed = 0;
    std::string pools;
    std::size_t concurrency = 0; ///< 0: take the backend config's value
};

inline scoring::ScoringJob make_job(const JobFlags& f, const scoring::BackendConfig& backend)
{
    scoring::ScoringJob job;
    job.score_mode = parse_mode_flag(f.mode);
    const auto path = scoring::parse_prompt_path(f.path);
    if (!path)
        throw UsageError("--path must be 'single' or 'multi'");
    job.path = *path;
    job.seed = f.seed;
    job.max_concurrency = f.concurrency ? f.concurrency : backend.max_concurrency;
    if (job.path == scoring::PromptPath::SingleAspect) {
        if (f.pools.empty())
            throw UsageError("--path single needs --pools DIR with in-context example pools");
        load_pools(job, f.pools);
    }
    return job;
}

inline void add_job_flags(CLI::App* cmd, JobFlags& f)
{
    cmd->add_option("--mode", f.mode, "s (score only) or s+r (score with rationale)")
        ->check(CLI::IsMember({"s", "s+r"}))
        ->capture_default_str();
    cmd->add_option("--path", f.path, "single (one prompt per aspect) or multi (one prompt)")
        ->check(CLI::IsMember({"single", "multi"}))
        ->capture_default_str();
    cmd->add_option("--seed", f.seed, "in-context example sampling seed")->capture_default_str();
    cmd->add_option("--pools", f.pools, "directory of in-context example pools (single path)");
    cmd->add_option("--concurrency", f.concurrency, "max in-flight requests (default from backend config)");
}

inline std::string render(const json& j, const std::string& text, const std::string& format)
{
    return format == "json" ? j.dump(2) + "\n" : text;
}

/// json when writing to a file, text on stdout, unless --format says otherwise.
inline std::string resolve_format(const std::string& format, const std::string& out_path)
{
    if (!format.empty())
        return format;
    return out_path.empty() || out_path == "-" ? "text" : "json";
}

inline analysis::AlphaDistance parse_distance(const std::string& s)
{
    if (s == "interval")
        return analysis::AlphaDistance::Interval;
    if (s == "ordinal")
        return analysis::AlphaDistance::Ordinal;
    return analysis::AlphaDistance::Nominal;
}

} // namespace detail

/// Parses `args` (without the program name) and runs one subcommand.
inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Peer-review comment segmentation, utility scoring and agreement analysis", "revutil"};
    app.set_version_flag("--version", std::string(service::kVersion));
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    // segment
    std::string seg_in, seg_out, seg_config, seg_drop;
    auto* cmd_segment = app.add_subcommand("segment", "split reviews into weakness comments");
    cmd_segment->add_option("--in", seg_in, "reviews JSONL")->required();
    cmd_segment->add_option("--out", seg_out, "comments JSONL")->required();
    cmd_segment->add_option("--config", seg_config, "segmenter config JSON");
    cmd_segment->add_option("--drop-report", seg_drop, "write the per-stage drop report here");

    // score
    std::string sc_in, sc_out, sc_backend;
    detail::JobFlags sc_flags;
    auto* cmd_score = app.add_subcommand("score", "score comments with a completion backend");
    cmd_score->add_option("--in", sc_in, "comments JSONL")->required();
    cmd_score->add_option("--out", sc_out, "scored JSONL")->required();
    cmd_score->add_option("--backend", sc_backend, "backend config JSON")->required();
    detail::add_job_flags(cmd_score, sc_flags);

    // agree
    std::string ag_ann, ag_subset, ag_out, ag_model, ag_format, ag_distance = "interval";
    auto* cmd_agree = app.add_subcommand("agree", "inter-annotator agreement, or model vs. human with --model");
    cmd_agree->add_option("--annotations", ag_ann, "human annotations JSONL")->required();
    cmd_agree->add_option("--subset", ag_subset, "all or majority (default: both)")
        ->check(CLI::IsMember({"all", "majority"}));
    cmd_agree->add_option("--model", ag_model, "model labels (annotation or scored JSONL)");
    cmd_agree->add_option("--alpha-distance", ag_distance, "Krippendorff distance")
        ->check(CLI::IsMember({"interval", "ordinal", "nominal"}))
        ->capture_default_str();
    cmd_agree->add_option("--out", ag_out, "report path (default stdout)");
    cmd_agree->add_option("--format", ag_format, "json or text")->check(CLI::IsMember({"json", "text"}));

    // compare
    std::string cmp_human, cmp_llm, cmp_out, cmp_format;
    auto* cmd_compare = app.add_subcommand("compare", "compare score distributions of two sources (Welch's t-test)");
    cmd_compare->add_option("--human", cmp_human, "first source (annotation or scored JSONL)")->required();
    cmd_compare->add_option("--llm", cmp_llm, "second source (annotation or scored JSONL)")->required();
    cmd_compare->add_option("--out", cmp_out, "report path (default stdout)");
    cmd_compare->add_option("--format", cmp_format, "json or text")->check(CLI::IsMember({"json", "text"}));

    // rationales
    std::string ra_gen, ra_ref, ra_out, ra_format;
    auto* cmd_rationales = app.add_subcommand("rationales", "Rouge-L of generated vs. reference rationales");
    cmd_rationales->add_option("--generated", ra_gen, "generated rationales")->required();
    cmd_rationales->add_option("--reference", ra_ref, "reference rationales")->required();
    cmd_rationales->add_option("--out", ra_out, "report path (default stdout)");
    cmd_rationales->add_option("--format", ra_format, "json or text")->check(CLI::IsMember({"json", "text"}));

    // correlate
    std::string co_ann, co_out, co_format;
    auto* cmd_correlate = app.add_subcommand("correlate", "Pearson correlation between aspects on majority labels");
    cmd_correlate->add_option("--annotations", co_ann, "human annotations JSONL")->required();
    cmd_correlate->add_option("--out", co_out, "report path (default stdout)");
    cmd_correlate->add_option("--format", co_format, "json or text")->check(CLI::IsMember({"json", "text"}));

    // serve
    int sv_port = 8080;
    std::string sv_host = "127.0.0.1", sv_backend, sv_static, sv_origin = "*";
    long sv_ttl = 3600;
    detail::JobFlags sv_flags;
    auto* cmd_serve = app.add_subcommand("serve", "run the HTTP API");
    cmd_serve->add_option("--port", sv_port, "listen port")->capture_default_str();
    cmd_serve->add_option("--host", sv_host, "listen address")->capture_default_str();
    cmd_serve->add_option("--backend", sv_backend, "backend config JSON")->required();
    cmd_serve->add_option("--static", sv_static, "directory of UI assets to serve at /");
    cmd_serve->add_option("--session-ttl", sv_ttl, "session lifetime in seconds")->capture_default_str();
    cmd_serve->add_option("--cors-origin", sv_origin, "allowed CORS origin")->capture_default_str();
    detail::add_job_flags(cmd_serve, sv_flags);

    using analysis::to_json;
    using analysis::to_text;

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*cmd_segment) {
            segment::SegmenterConfig cfg;
            if (!seg_config.empty())
                cfg = segment::config_from_json(detail::read_json_file(seg_config));
            cfg.validate();
            const auto reviews = segment::load_reviews(seg_in);
            const auto result = segment::segment_corpus(reviews, cfg);
            std::vector<json> rows;
            for (const auto& c : result.comments)
                rows.push_back(to_json(c));
            detail::write_output(seg_out, detail::jsonl(rows), out);
            if (!seg_drop.empty())
                detail::write_output(seg_drop, segment::to_json(result.report).dump(2) + "\n", out);
            err << fmt::format("segment: {} reviews -> {} comments ({} of {} fragments dropped)\n",
                               reviews.size(), result.comments.size(), result.report.dropped(),
                               result.report.input_fragments);
            return kExitOk;
        }

        if (*cmd_score) {
            const auto backend_cfg = scoring::load_backend_config(sc_backend);
            const auto job = detail::make_job(sc_flags, backend_cfg);
            const auto comments = load_comments(sc_in);
            auto backend = scoring::make_backend(backend_cfg);
            const auto rubrics = rubric::RubricSet::load();
            const auto batch = scoring::score_batch(comments, job, *backend, rubrics);
            std::vector<json> rows;
            std::size_t errors = 0;
            for (const auto& r : batch.results) {
                rows.push_back(scoring::to_json(r));
                errors += r.error ? 1 : 0;
            }
            detail::write_output(sc_out, detail::jsonl(rows), out);
            err << fmt::format("score: {} comments, {} ok, {} partial, {} failed ({} backend errors)\n",
                               comments.size(), batch.summary.ok, batch.summary.partial, batch.summary.failed,
                               errors);
            return errors ? kExitData : kExitOk;
        }

        if (*cmd_agree) {
            const auto human = load_annotations(ag_ann);
            const auto format = detail::resolve_format(ag_format, ag_out);
            const auto distance = detail::parse_distance(ag_distance);
            if (!ag_model.empty()) {
                const auto model = detail::read_label_records(ag_model);
                const auto subset = ag_subset == "all" ? analysis::Subset::All : analysis::Subset::FullMajority;
                const auto report = analysis::model_vs_human_report(model, human, subset, distance);
                detail::write_output(ag_out, detail::render(to_json(report), to_text(report), format), out);
                err << fmt::format("agree: model vs. human on {} aspects ({})\n", report.rows.size(),
                                   analysis::subset_key(subset));
                return kExitOk;
            }
            const auto report = analysis::agreement_report(human, analysis::AgreementOptions{distance});
            auto j = to_json(report);
            if (!ag_subset.empty())
                for (auto& [_, row] : j["aspects"].items())
                    row.erase(ag_subset == "all" ? "full_majority" : "all");
            detail::write_output(ag_out, detail::render(j, to_text(report), format), out);
            err << fmt::format("agree: {} aspects, {} human labels\n", report.rows.size(), human.records.size());
            return kExitOk;
        }

        if (*cmd_compare) {
            const auto a = detail::read_label_records(cmp_human);
            const auto b = detail::read_label_records(cmp_llm);
            const auto report = analysis::compare_review_sources(a, b);
            const auto format = detail::resolve_format(cmp_format, cmp_out);
            detail::write_output(cmp_out, detail::render(to_json(report), to_text(report), format), out);
            err << fmt::format("compare: {} vs {} labels over {} aspects\n", a.size(), b.size(), report.rows.size());
            return kExitOk;
        }

        if (*cmd_rationales) {
            const auto g = detail::read_label_records(ra_gen);
            const auto r = detail::read_label_records(ra_ref);
            const auto report = analysis::rationale_similarity_report(g, r);
            const auto format = detail::resolve_format(ra_format, ra_out);
            detail::write_output(ra_out, detail::render(to_json(report), to_text(report), format), out);
            err << fmt::format("rationales: {} aspects compared\n", report.rows.size());
            return kExitOk;
        }

        if (*cmd_correlate) {
            const auto human = load_annotations(co_ann);
            const auto majority = analysis::majority_labels(analysis::index_triples(human));
            const auto matrix = analysis::aspect_correlation_matrix(majority);
            const auto format = detail::resolve_format(co_format, co_out);
            detail::write_output(co_out, detail::render(to_json(matrix), to_text(matrix), format), out);
            err << fmt::format("correlate: majority labels for {} aspects\n", majority.size());
            return kExitOk;
        }

        if (*cmd_serve) {
            const auto backend_cfg = scoring::load_backend_config(sv_backend);
            service::ServiceOptions opts;
            opts.job = detail::make_job(sv_flags, backend_cfg);
            opts.session_ttl = std::chrono::seconds(sv_ttl);
            opts.cors_origin = sv_origin;
            auto backend = scoring::make_backend(backend_cfg);
            service::Service svc(*backend, rubric::RubricSet::load(), opts);
            httplib::Server server;
            svc.install(server);
            if (!sv_static.empty() && !server.set_mount_point("/", sv_static))
                throw UsageError("--static directory not found: " + sv_static);
            err << fmt::format("serve: listening on http://{}:{} (backend {})\n", sv_host, sv_port, backend->name());
            if (!server.listen(sv_host, sv_port))
                throw Error(fmt::format("cannot listen on {}:{}", sv_host, sv_port));
            return kExitOk;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IncompleteTriples& e) {
        err << "error: " << e.what() << "\n";
        for (const auto& id : e.comment_ids())
            err << "  " << id << "\n";
        return kExitData;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    return run_cli(argc > 0 ? std::vector<std::string>(argv + 1, argv + argc) : std::vector<std::string>{}, out,
                   err);
}

} // namespace revutil::cli
