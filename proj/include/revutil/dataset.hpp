#pragma once

#include <revutil/core.hpp>

#include <nlohmann/json.hpp>

#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace revutil {

using json = nlohmann::json;

struct AnnotationDataset {
    std::vector<AnnotationRecord> records;
    std::map<Aspect, std::size_t> count_per_aspect;
    std::map<std::string, std::size_t> count_per_annotator;

    bool empty() const noexcept { return records.empty(); }
};

// --- JSON mapping ---------------------------------------------------------

inline json to_json(const AnnotationRecord& r)
{
    json j;
    j["comment_id"] = r.comment_id;
    j["annotator_id"] = r.annotator_id;
    j["aspect"] = aspect_key(r.aspect);
    j["label"] = r.label.to_string();
    j["rationale"] = r.rationale ? json(*r.rationale) : json(nullptr);
    j["mode"] = mode_key(r.mode);
    return j;
}

inline json to_json(const ReviewComment& c)
{
    return json{{"id", c.id},         {"review_id", c.review_id}, {"venue", c.venue},
                {"year", c.year},     {"position", c.position},   {"text", c.text},
                {"word_count", c.word_count}};
}

namespace detail {

inline std::string required_string(const json& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
        throw std::invalid_argument(std::string("missing or non-string field '") + key + "'");
    return it->get<std::string>();
}

/// Labels may arrive as "3" or 3.
inline std::string label_token(const json& j)
{
    auto it = j.find("label");
    if (it == j.end())
        throw std::invalid_argument("missing field 'label'");
    if (it->is_string())
        return std::string(trim(it->get_ref<const std::string&>()));
    if (it->is_number_integer())
        return std::to_string(it->get<long long>());
    throw std::invalid_argument("field 'label' must be a string or integer");
}

} // namespace detail

inline AnnotationRecord annotation_from_json(const json& j)
{
    AnnotationRecord r;
    r.comment_id = detail::required_string(j, "comment_id");
    r.annotator_id = detail::required_string(j, "annotator_id");
    const auto aspect_str = detail::required_string(j, "aspect");
    const auto aspect = parse_aspect(aspect_str);
    if (!aspect)
        throw std::invalid_argument("unknown aspect '" + aspect_str + "'");
    r.aspect = *aspect;
    r.label = validate_label(r.aspect, detail::label_token(j));
    if (auto it = j.find("rationale"); it != j.end() && !it->is_null()) {
        if (!it->is_string())
            throw std::invalid_argument("field 'rationale' must be a string or null");
        r.rationale = it->get<std::string>();
    }
    r.mode = AnnotationMode::Human;
    if (auto it = j.find("mode"); it != j.end()) {
        const auto m = it->is_string() ? parse_mode(it->get<std::string>()) : std::nullopt;
        if (!m)
            throw std::invalid_argument("unknown mode " + it->dump());
        r.mode = *m;
    }
    return r;
}

inline ReviewComment comment_from_json(const json& j)
{
    auto text = detail::required_string(j, "text");
    int year = 0;
    if (auto it = j.find("year"); it != j.end() && it->is_number_integer())
        year = it->get<int>();
    std::size_t position = 0;
    if (auto it = j.find("position"); it != j.end() && it->is_number_unsigned())
        position = it->get<std::size_t>();
    return ReviewComment::make(detail::required_string(j, "id"), j.value("review_id", ""),
                               j.value("venue", ""), year, position, std::move(text));
}

// --- JSONL reading --------------------------------------------------------

/// Calls `fn(json, line_no)` for every non-blank line; wraps any failure in a
/// ParseError carrying the source name and 1-based line number.
template <class Fn>
void for_each_jsonl(std::istream& in, const std::string& source, Fn&& fn)
{
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty())
            continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(source, line_no, e.what());
        }
        if (!j.is_object())
            throw ParseError(source, line_no, "expected a JSON object");
        try {
            fn(j, line_no);
        } catch (const DuplicateKey&) {
            throw;
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(source, line_no, e.what());
        }
    }
}

inline std::ifstream open_input(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError(path, 0, "cannot open file");
    return in;
}

inline AnnotationDataset read_annotations(std::istream& in, const std::string& source = "<stream>")
{
    AnnotationDataset ds;
    std::set<std::tuple<std::string, std::string, Aspect>> seen;
    for_each_jsonl(in, source, [&](const json& j, std::size_t line_no) {
        auto rec = annotation_from_json(j);
        if (!seen.emplace(rec.comment_id, rec.annotator_id, rec.aspect).second)
            throw DuplicateKey(source + ":" + std::to_string(line_no) + ": duplicate (" +
                               rec.comment_id + ", " + rec.annotator_id + ", " +
                               std::string(aspect_key(rec.aspect)) + ")");
        ++ds.count_per_aspect[rec.aspect];
        ++ds.count_per_annotator[rec.annotator_id];
        ds.records.push_back(std::move(rec));
    });
    return ds;
}

inline AnnotationDataset load_annotations(const std::string& path)
{
    auto in = open_input(path);
    return read_annotations(in, path);
}

inline std::vector<ReviewComment> read_comments(std::istream& in,
                                                const std::string& source = "<stream>")
{
    std::vector<ReviewComment> out;
    for_each_jsonl(in, source,
                   [&](const json& j, std::size_t) { out.push_back(comment_from_json(j)); });
    return out;
}

inline std::vector<ReviewComment> load_comments(const std::string& path)
{
    auto in = open_input(path);
    return read_comments(in, path);
}

} // namespace revutil
