#pragma once

// HTTP API for the reviewer feedback loop: assess a pasted review, then
// re-score individual edited comments against an in-memory session.

#include <revutil/backend.hpp>
#include <revutil/scorer.hpp>
#include <revutil/segmenter.hpp>

#include <fmt/format.h>
#include <httplib.h>

#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#ifndef REVUTIL_VERSION
#define REVUTIL_VERSION "0.0.0"
#endif

namespace revutil::service {

using scoring::Backend;
using scoring::ScoredComment;
using scoring::ScoringJob;

inline constexpr std::string_view kVersion = REVUTIL_VERSION;

/// Caps in-flight completions across every request sharing the backend.
class ThrottledBackend final : public Backend {
public:
    ThrottledBackend(Backend& inner, std::size_t limit) : inner_(inner), free_(std::max<std::size_t>(limit, 1)) {}

    std::string complete(const rubric::PromptBundle& prompt) override
    {
        {
            std::unique_lock lock(mu_);
            cv_.wait(lock, [&] { return free_ > 0; });
            --free_;
        }
        struct Release {
            ThrottledBackend* self;
            ~Release()
            {
                {
                    std::lock_guard lock(self->mu_);
                    ++self->free_;
                }
                self->cv_.notify_one();
            }
        } release{this};
        return inner_.complete(prompt);
    }

    std::string name() const override { return inner_.name(); }

private:
    Backend& inner_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::size_t free_;
};

struct ServiceOptions {
    /// Template for every request; score_mode is overridden per request.
    ScoringJob job;
    segment::SegmenterConfig segmenter;
    std::chrono::seconds session_ttl{3600};
    std::string cors_origin = "*";
    std::size_t max_body_bytes = 1 << 20;
    std::function<std::chrono::steady_clock::time_point()> clock = [] { return std::chrono::steady_clock::now(); };
};

struct Response {
    int status = 200;
    json body;
};

namespace detail {

inline Response error(int status, std::string message)
{
    return {status, {{"error", std::move(message)}}};
}

inline std::optional<rubric::ScoreMode> parse_request_mode(std::string_view s)
{
    if (s == "s" || s == "score")
        return rubric::ScoreMode::ScoreOnly;
    if (s == "s+r" || s == "score_rationale")
        return rubric::ScoreMode::ScoreWithRationale;
    return std::nullopt;
}

inline std::string mode_key(rubric::ScoreMode m)
{
    return m == rubric::ScoreMode::ScoreOnly ? "s" : "s+r";
}

/// Four aspect entries per comment; unscored aspects carry a null label.
inline json comment_json(const ReviewComment& c, const ScoredComment& s)
{
    json scores = json::object();
    for (auto aspect : kAllAspects) {
        json entry = {{"label", nullptr}, {"rationale", nullptr}};
        if (auto it = s.scores.find(aspect); it != s.scores.end()) {
            entry["label"] = it->second.label.to_string();
            if (it->second.rationale)
                entry["rationale"] = *it->second.rationale;
        }
        scores[std::string(aspect_key(aspect))] = std::move(entry);
    }
    return {{"comment_id", c.id},
            {"text", c.text},
            {"scores", scores},
            {"parse_status", scoring::parse_status_key(s.parse_status)}};
}

inline json failure_json(const ScoredComment& s)
{
    json j = {{"comment_id", s.comment_id},
              {"parse_status", scoring::parse_status_key(s.parse_status)},
              {"missing_keys", s.missing_keys}};
    if (s.error)
        j["error"] = *s.error;
    return j;
}

inline std::optional<std::string> string_field(const json& body, const char* key)
{
    auto it = body.find(key);
    if (it == body.end() || !it->is_string())
        return std::nullopt;
    return it->get<std::string>();
}

inline std::string new_session_id()
{
    static std::mutex mu;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lock(mu);
    return fmt::format("{:016x}{:016x}", rng(), rng());
}

} // namespace detail

class Service {
public:
    Service(Backend& backend, rubric::RubricSet rubrics, ServiceOptions options = {})
        : backend_(backend, options.job.max_concurrency), rubrics_(std::move(rubrics)),
          options_(std::move(options))
    {
        options_.job.aspects.assign(kAllAspects.begin(), kAllAspects.end());
        options_.segmenter.validate();
    }

    Response health() const
    {
        return {200, {{"status", "ok"}, {"version", std::string(kVersion)}}};
    }

    Response assess(const json& body)
    {
        if (!body.is_object())
            return detail::error(400, "request body must be a JSON object");
        const auto text = detail::string_field(body, "review_text");
        if (!text || trim(*text).empty())
            return detail::error(400, "review_text is empty");
        auto mode = rubric::ScoreMode::ScoreWithRationale;
        if (auto m = detail::string_field(body, "mode")) {
            auto parsed = detail::parse_request_mode(*m);
            if (!parsed)
                return detail::error(400, "mode must be 's' or 's+r'");
            mode = *parsed;
        }
        segment::RawReview review;
        review.id = "r";
        review.venue = detail::string_field(body, "venue").value_or("");
        if (trim(review.venue).empty())
            review.venue = "generic";
        review.text = *text;

        segment::Segmentation seg;
        try {
            const auto sections = segment::extract_review_sections(review, options_.segmenter);
            seg = segment::segment_review(std::span<const std::string>(sections), options_.segmenter,
                                          options_.segmenter.length_bounds, review);
        } catch (const UnknownVenue& e) {
            return detail::error(400, e.what());
        }

        auto job = options_.job;
        job.score_mode = mode;
        std::vector<ScoredComment> results;
        if (!seg.comments.empty()) {
            try {
                results = scoring::score_batch(seg.comments, job, backend_, rubrics_).results;
            } catch (const AuthError& e) {
                return detail::error(502, std::string("backend authentication failed: ") + e.what());
            }
        }

        json comments = json::array(), failures = json::array();
        bool backend_failed = false;
        for (std::size_t i = 0; i < results.size(); ++i) {
            if (results[i].error)
                backend_failed = true;
            if (results[i].parse_status != scoring::ParseStatus::Ok)
                failures.push_back(detail::failure_json(results[i]));
            if (!results[i].error)
                comments.push_back(detail::comment_json(seg.comments[i], results[i]));
        }
        json out = {{"comments", comments},
                    {"drop_report", segment::to_json(seg.report)},
                    {"parse_failures", failures},
                    {"mode", detail::mode_key(mode)}};
        if (backend_failed) {
            out["error"] = "backend failure while scoring";
            return {502, std::move(out)};
        }

        auto session = std::make_shared<Session>();
        session->mode = mode;
        session->comments = std::move(seg.comments);
        session->scores = std::move(results);
        const auto id = detail::new_session_id();
        {
            std::lock_guard lock(sessions_mu_);
            evict_expired_locked();
            session->last_used = options_.clock();
            sessions_.emplace(id, std::move(session));
        }
        out["session_id"] = id;
        return {200, std::move(out)};
    }

    Response rescore(const json& body)
    {
        if (!body.is_object())
            return detail::error(400, "request body must be a JSON object");
        const auto session_id = detail::string_field(body, "session_id");
        const auto comment_id = detail::string_field(body, "comment_id");
        auto text = detail::string_field(body, "text");
        if (!text)
            text = detail::string_field(body, "edited_text");
        if (!session_id || !comment_id)
            return detail::error(400, "session_id and comment_id are required");
        if (!text || trim(*text).empty())
            return detail::error(400, "edited text is empty");

        auto session = find_session(*session_id);
        if (!session)
            return detail::error(404, "unknown session " + *session_id);

        std::lock_guard lock(session->mu);
        auto it = std::find_if(session->comments.begin(), session->comments.end(),
                               [&](const ReviewComment& c) { return c.id == *comment_id; });
        if (it == session->comments.end())
            return detail::error(404, "unknown comment " + *comment_id);
        const auto index = static_cast<std::size_t>(it - session->comments.begin());

        auto edited = ReviewComment::make(it->id, it->review_id, it->venue, it->year, it->position,
                                          std::string(trim(*text)));
        auto job = options_.job;
        job.score_mode = session->mode;
        ScoredComment scored;
        try {
            scored = scoring::score_comment(edited, job, backend_, rubrics_);
        } catch (const AuthError& e) {
            return detail::error(502, std::string("backend authentication failed: ") + e.what());
        } catch (const Error& e) {
            return {502, {{"error", e.what()}, {"comment_id", edited.id}}};
        }
        json out = detail::comment_json(edited, scored);
        out["parse_failures"] = scored.parse_status == scoring::ParseStatus::Ok
                                    ? json::array()
                                    : json::array({detail::failure_json(scored)});
        session->comments[index] = std::move(edited);
        session->scores[index] = std::move(scored);
        return {200, std::move(out)};
    }

    std::size_t session_count()
    {
        std::lock_guard lock(sessions_mu_);
        evict_expired_locked();
        return sessions_.size();
    }

    /// Registers the API routes (and CORS handling) on `server`.
    void install(httplib::Server& server)
    {
        const auto origin = options_.cors_origin;
        server.set_payload_max_length(options_.max_body_bytes);
        server.set_post_routing_handler([origin](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Origin", origin);
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
        });
        server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
        server.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) { write(res, health()); });
        server.Post("/api/assess", [this](const httplib::Request& req, httplib::Response& res) {
            write(res, with_json(req, [this](const json& b) { return assess(b); }));
        });
        server.Post("/api/rescore", [this](const httplib::Request& req, httplib::Response& res) {
            write(res, with_json(req, [this](const json& b) { return rescore(b); }));
        });
    }

private:
    struct Session {
        std::mutex mu;
        rubric::ScoreMode mode = rubric::ScoreMode::ScoreWithRationale;
        std::vector<ReviewComment> comments;
        std::vector<ScoredComment> scores;
        std::chrono::steady_clock::time_point last_used;
    };

    std::shared_ptr<Session> find_session(const std::string& id)
    {
        std::lock_guard lock(sessions_mu_);
        evict_expired_locked();
        auto it = sessions_.find(id);
        if (it == sessions_.end())
            return nullptr;
        it->second->last_used = options_.clock();
        return it->second;
    }

    void evict_expired_locked()
    {
        const auto now = options_.clock();
        std::erase_if(sessions_, [&](const auto& kv) { return now - kv.second->last_used > options_.session_ttl; });
    }

    template <class Handler>
    static Response with_json(const httplib::Request& req, Handler&& handler)
    {
        auto body = json::parse(req.body, nullptr, false);
        if (body.is_discarded())
            return detail::error(400, "request body is not valid JSON");
        try {
            return handler(body);
        } catch (const Error& e) {
            return detail::error(500, e.what());
        }
    }

    static void write(httplib::Response& res, const Response& r)
    {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    }

    ThrottledBackend backend_;
    rubric::RubricSet rubrics_;
    ServiceOptions options_;
    std::mutex sessions_mu_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
};

} // namespace revutil::service
