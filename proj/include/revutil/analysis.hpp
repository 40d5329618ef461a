#pragma once

// Dataset-level reports: inter-annotator agreement, model vs. human
// agreement, source comparison, rationale similarity, aspect correlations.

#include <revutil/core.hpp>
#include <revutil/dataset.hpp>
#include <revutil/metrics.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace revutil::analysis {

using metrics::AlphaDistance;
using metrics::MetricValue;

inline json to_json(const MetricValue& m)
{
    json j = {{"value", m.defined() ? json(m.value) : json(nullptr)}, {"n", m.n_items}};
    if (m.degenerate_reason)
        j["degenerate"] = *m.degenerate_reason;
    return j;
}

inline std::string fmt_metric(const MetricValue& m)
{
    return m.defined() ? fmt::format("{:.3f}", m.value) : std::string("n/a");
}

inline std::string fmt_metric(const std::optional<MetricValue>& m)
{
    return m ? fmt_metric(*m) : std::string("-");
}

namespace detail {

inline constexpr std::string_view kAllPairsDegenerate = "all-pairs-degenerate";

template <class Fn>
MetricValue guarded(Fn&& fn, std::size_t n)
{
    try {
        return fn();
    } catch (const EmptyInput&) {
        return MetricValue::degenerate(std::string(metrics::kTooFewItems), n);
    } catch (const NoPairableValues&) {
        return MetricValue::degenerate(std::string(metrics::kTooFewItems), n);
    } catch (const InsufficientData&) {
        return MetricValue::degenerate(std::string(metrics::kTooFewItems), n);
    }
}

/// Scores of items where both labels are ordinal.
inline std::pair<std::vector<int>, std::vector<int>> ordinal_pairs(std::span<const AspectLabel> a,
                                                                   std::span<const AspectLabel> b)
{
    std::pair<std::vector<int>, std::vector<int>> out;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].is_ordinal() && b[i].is_ordinal()) {
            out.first.push_back(a[i].score());
            out.second.push_back(b[i].score());
        }
    return out;
}

inline MetricValue kappa_ordinal(std::span<const AspectLabel> a, std::span<const AspectLabel> b)
{
    const auto [x, y] = ordinal_pairs(a, b);
    return guarded([&] { return metrics::quadratic_weighted_kappa(x, y); }, x.size());
}

inline MetricValue rho_ordinal(std::span<const AspectLabel> a, std::span<const AspectLabel> b)
{
    const auto [x, y] = ordinal_pairs(a, b);
    return guarded([&] { return metrics::spearman_rho(std::span<const int>(x), std::span<const int>(y)); },
                   x.size());
}

inline MetricValue no_claim_f1(std::span<const AspectLabel> a, std::span<const AspectLabel> b)
{
    return metrics::binary_f1(a, b, AspectLabel::no_claim());
}

/// NoClaim cells become missing values.
inline MetricValue alpha_ordinal(const std::vector<std::vector<AspectLabel>>& rows, AlphaDistance d)
{
    metrics::RatingMatrix m;
    m.reserve(rows.size());
    for (const auto& row : rows) {
        std::vector<std::optional<double>> cells;
        for (const auto& l : row)
            cells.push_back(l.is_ordinal() ? std::optional<double>(l.score()) : std::nullopt);
        m.push_back(std::move(cells));
    }
    return guarded([&] { return metrics::krippendorff_alpha(m, d); }, rows.size());
}

template <class Metric>
MetricValue pairwise_mean(const std::vector<std::vector<AspectLabel>>& raters, Metric&& metric,
                          std::vector<MetricValue>* per_pair = nullptr)
{
    try {
        auto r = metrics::pairwise_average(
            std::span<const std::vector<AspectLabel>>(raters),
            [&](const std::vector<AspectLabel>& a, const std::vector<AspectLabel>& b) {
                return metric(std::span<const AspectLabel>(a), std::span<const AspectLabel>(b));
            });
        if (per_pair)
            *per_pair = r.per_pair;
        return r.mean;
    } catch (const AllPairsDegenerate&) {
        if (per_pair) {
            per_pair->clear();
            for (std::size_t i = 0; i < raters.size(); ++i)
                for (std::size_t j = i + 1; j < raters.size(); ++j)
                    per_pair->push_back(metric(std::span<const AspectLabel>(raters[i]),
                                               std::span<const AspectLabel>(raters[j])));
        }
        return MetricValue::degenerate(std::string(kAllPairsDegenerate),
                                       raters.empty() ? 0 : raters.front().size());
    }
}

} // namespace detail

// --- triple index ----------------------------------------------------------

/// Human labels for one aspect, three per comment, in rater-slot order.
struct TripleIndex {
    std::vector<std::string> comment_ids; ///< sorted
    std::vector<std::array<AspectLabel, 3>> labels;
    /// Annotator ids when the aspect has exactly three annotators overall;
    /// otherwise slots are per-comment positions in annotator-id order.
    std::array<std::string, 3> rater_names;
};

/// Groups human annotations into per-aspect triples. Every comment must carry
/// exactly three human labels for every aspect it appears under.
inline std::map<Aspect, TripleIndex> index_triples(const AnnotationDataset& data)
{
    std::map<Aspect, std::map<std::string, std::map<std::string, AspectLabel>>> grouped;
    std::map<Aspect, std::set<std::string>> annotators;
    for (const auto& r : data.records) {
        if (r.mode != AnnotationMode::Human)
            continue;
        if (!grouped[r.aspect][r.comment_id].emplace(r.annotator_id, r.label).second)
            throw DuplicateKey(r.annotator_id + " labelled " + r.comment_id + "/" +
                               std::string(aspect_key(r.aspect)) + " twice");
        annotators[r.aspect].insert(r.annotator_id);
    }
    std::vector<std::string> offending;
    std::map<Aspect, TripleIndex> out;
    for (const auto& [aspect, by_comment] : grouped) {
        TripleIndex idx;
        const bool global = annotators[aspect].size() == 3;
        if (global) {
            std::size_t s = 0;
            for (const auto& a : annotators[aspect])
                idx.rater_names[s++] = a;
        } else {
            idx.rater_names = {"rater1", "rater2", "rater3"};
        }
        for (const auto& [cid, labels] : by_comment) {
            if (labels.size() != 3) {
                offending.push_back(cid + " (" + std::string(aspect_key(aspect)) + ": " +
                                    std::to_string(labels.size()) + " labels)");
                continue;
            }
            std::array<AspectLabel, 3> row{AspectLabel::no_claim(), AspectLabel::no_claim(),
                                           AspectLabel::no_claim()};
            std::size_t s = 0;
            for (const auto& [_, label] : labels) // map order = annotator-id order
                row[s++] = label;
            idx.comment_ids.push_back(cid);
            idx.labels.push_back(row);
        }
        out.emplace(aspect, std::move(idx));
    }
    if (!offending.empty())
        throw IncompleteTriples("expected exactly 3 human labels per comment and aspect", offending);
    if (out.empty())
        throw IncompleteTriples("dataset has no human annotations", {});
    return out;
}

/// Majority (or unanimous) label per comment, for items that have one.
inline std::map<Aspect, std::map<std::string, AspectLabel>> majority_labels(
    const std::map<Aspect, TripleIndex>& triples)
{
    std::map<Aspect, std::map<std::string, AspectLabel>> out;
    for (const auto& [aspect, idx] : triples)
        for (std::size_t i = 0; i < idx.comment_ids.size(); ++i) {
            const auto cls = classify_agreement(idx.labels[i]);
            if (cls.majority_label)
                out[aspect].emplace(idx.comment_ids[i], *cls.majority_label);
        }
    return out;
}

// --- agreement report ------------------------------------------------------

enum class Subset : std::uint8_t { All, FullMajority };

constexpr std::string_view subset_key(Subset s) noexcept
{
    return s == Subset::All ? "all" : "full_majority";
}

struct PairAgreement {
    std::string rater_a, rater_b;
    MetricValue kappa, rho;
    std::optional<MetricValue> f1;
};

struct AgreementCell {
    std::size_t n_items = 0;
    MetricValue kappa, rho, alpha;
    std::optional<MetricValue> f1; ///< Verifiability only
    std::vector<PairAgreement> pairs;
};

struct AgreementRow {
    std::size_t full = 0, majority = 0, low = 0;
    AgreementCell all, full_majority;
};

struct AgreementReport {
    std::map<Aspect, AgreementRow> rows;
};

struct AgreementOptions {
    AlphaDistance alpha_distance = AlphaDistance::Interval;
};

inline AgreementCell agreement_cell(const TripleIndex& idx, std::span<const std::size_t> items,
                                    Aspect aspect, AlphaDistance distance)
{
    AgreementCell cell;
    cell.n_items = items.size();
    std::vector<std::vector<AspectLabel>> raters(3);
    std::vector<std::vector<AspectLabel>> rows;
    for (auto i : items) {
        for (std::size_t s = 0; s < 3; ++s)
            raters[s].push_back(idx.labels[i][s]);
        rows.emplace_back(idx.labels[i].begin(), idx.labels[i].end());
    }
    std::vector<MetricValue> kp, rp, fp;
    // F1 on the claim/no-claim split comes first; ordinal metrics then drop
    // every pairing where either side is NoClaim.
    if (aspect == Aspect::Verifiability)
        cell.f1 = detail::pairwise_mean(raters, detail::no_claim_f1, &fp);
    cell.kappa = detail::pairwise_mean(raters, detail::kappa_ordinal, &kp);
    cell.rho = detail::pairwise_mean(raters, detail::rho_ordinal, &rp);
    cell.alpha = detail::alpha_ordinal(rows, distance);
    std::size_t p = 0;
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = a + 1; b < 3; ++b, ++p) {
            PairAgreement pa{idx.rater_names[a], idx.rater_names[b], kp[p], rp[p], std::nullopt};
            if (cell.f1)
                pa.f1 = fp[p];
            cell.pairs.push_back(std::move(pa));
        }
    return cell;
}

/// Agreement among the three human annotators per aspect, on all items and
/// on the Full+Majority subset.
inline AgreementReport agreement_report(const AnnotationDataset& data, AgreementOptions opts = {})
{
    const auto triples = index_triples(data);
    AgreementReport report;
    for (const auto& [aspect, idx] : triples) {
        AgreementRow row;
        std::vector<std::size_t> all, agreed;
        for (std::size_t i = 0; i < idx.labels.size(); ++i) {
            all.push_back(i);
            switch (classify_agreement(idx.labels[i]).level) {
            case AgreementLevel::Full: ++row.full; agreed.push_back(i); break;
            case AgreementLevel::Majority: ++row.majority; agreed.push_back(i); break;
            case AgreementLevel::Low: ++row.low; break;
            }
        }
        row.all = agreement_cell(idx, all, aspect, opts.alpha_distance);
        row.full_majority = agreement_cell(idx, agreed, aspect, opts.alpha_distance);
        report.rows.emplace(aspect, std::move(row));
    }
    return report;
}

inline json to_json(const AgreementCell& c)
{
    json pairs = json::array();
    for (const auto& p : c.pairs) {
        json pj = {{"raters", {p.rater_a, p.rater_b}}, {"kappa", to_json(p.kappa)}, {"rho", to_json(p.rho)}};
        if (p.f1)
            pj["f1"] = to_json(*p.f1);
        pairs.push_back(std::move(pj));
    }
    json j = {{"n_items", c.n_items},
              {"kappa", to_json(c.kappa)},
              {"rho", to_json(c.rho)},
              {"alpha", to_json(c.alpha)},
              {"pairs", pairs}};
    j["f1"] = c.f1 ? to_json(*c.f1) : json(nullptr);
    return j;
}

inline json to_json(const AgreementReport& r)
{
    json rows = json::object();
    for (const auto& [aspect, row] : r.rows)
        rows[std::string(aspect_key(aspect))] = {
            {"counts", {{"full", row.full}, {"majority", row.majority}, {"low", row.low}}},
            {"all", to_json(row.all)},
            {"full_majority", to_json(row.full_majority)}};
    return {{"report", "agreement"}, {"aspects", rows}};
}

inline std::string to_text(const AgreementReport& r)
{
    std::string out;
    out += fmt::format("{:<24} {:>12}{:>46}\n", "", "All", "Full+Majority");
    out += fmt::format("{:<24} {:>6} {:>7} {:>7} {:>7} {:>7}   {:>6} {:>7} {:>7} {:>7} {:>7}\n", "Aspect", "#",
                       "kappa2", "rho", "alpha", "F1", "#", "kappa2", "rho", "alpha", "F1");
    for (const auto& [aspect, row] : r.rows) {
        const auto& a = row.all;
        const auto& f = row.full_majority;
        out += fmt::format("{:<24} {:>6} {:>7} {:>7} {:>7} {:>7}   {:>6} {:>7} {:>7} {:>7} {:>7}\n",
                           aspect_display_name(aspect), a.n_items, fmt_metric(a.kappa), fmt_metric(a.rho),
                           fmt_metric(a.alpha), fmt_metric(a.f1), f.n_items, fmt_metric(f.kappa),
                           fmt_metric(f.rho), fmt_metric(f.alpha), fmt_metric(f.f1));
    }
    out += "\nPairwise (All)\n";
    for (const auto& [aspect, row] : r.rows)
        for (const auto& p : row.all.pairs)
            out += fmt::format("{:<24} {:>10} - {:<10} kappa2 {:>7}  rho {:>7}  F1 {:>7}\n",
                               aspect_display_name(aspect), p.rater_a, p.rater_b, fmt_metric(p.kappa),
                               fmt_metric(p.rho), fmt_metric(p.f1));
    return out;
}

// --- model vs. human -------------------------------------------------------

struct ModelHumanRow {
    std::size_t n_items = 0;   ///< human items in the subset
    std::size_t n_missing = 0; ///< of those, without a model label
    std::array<std::string, 3> annotators;
    std::array<MetricValue, 3> kappa_per_annotator;
    MetricValue kappa_avg;
    std::optional<std::array<MetricValue, 3>> f1_per_annotator;
    std::optional<MetricValue> f1_avg;
    /// Against the majority label of each item.
    MetricValue kappa_majority, rho_majority, alpha_majority;
    std::optional<MetricValue> f1_majority;
};

struct ModelHumanReport {
    Subset subset = Subset::FullMajority;
    std::map<Aspect, ModelHumanRow> rows;
};

/// Model labels (records with any mode) against the human triples. Missing
/// model labels are counted and excluded.
inline ModelHumanReport model_vs_human_report(std::span<const AnnotationRecord> model,
                                              const AnnotationDataset& human,
                                              Subset subset = Subset::FullMajority,
                                              AlphaDistance distance = AlphaDistance::Interval)
{
    std::map<Aspect, std::map<std::string, AspectLabel>> predicted;
    for (const auto& r : model)
        if (!predicted[r.aspect].emplace(r.comment_id, r.label).second)
            throw DuplicateKey("model labels contain " + r.comment_id + "/" +
                               std::string(aspect_key(r.aspect)) + " twice");
    const auto triples = index_triples(human);
    ModelHumanReport report;
    report.subset = subset;
    std::size_t overlap = 0;
    for (const auto& [aspect, idx] : triples) {
        ModelHumanRow row;
        row.annotators = idx.rater_names;
        std::vector<AspectLabel> pred;
        std::vector<std::vector<AspectLabel>> ann(3);
        std::vector<AspectLabel> majority;
        const auto& preds = predicted[aspect];
        for (std::size_t i = 0; i < idx.labels.size(); ++i) {
            const auto cls = classify_agreement(idx.labels[i]);
            if (subset == Subset::FullMajority && !cls.majority_label)
                continue;
            ++row.n_items;
            auto it = preds.find(idx.comment_ids[i]);
            if (it == preds.end()) {
                ++row.n_missing;
                continue;
            }
            pred.push_back(it->second);
            for (std::size_t s = 0; s < 3; ++s)
                ann[s].push_back(idx.labels[i][s]);
            majority.push_back(cls.majority_label.value_or(AspectLabel::no_claim()));
        }
        overlap += pred.size();
        const bool verif = aspect == Aspect::Verifiability;
        double ksum = 0, fsum = 0;
        std::size_t kn = 0, fn = 0;
        if (verif)
            row.f1_per_annotator.emplace();
        for (std::size_t s = 0; s < 3; ++s) {
            row.kappa_per_annotator[s] = detail::kappa_ordinal(pred, ann[s]);
            if (row.kappa_per_annotator[s].defined()) {
                ksum += row.kappa_per_annotator[s].value;
                ++kn;
            }
            if (verif) {
                (*row.f1_per_annotator)[s] = detail::no_claim_f1(pred, ann[s]);
                if ((*row.f1_per_annotator)[s].defined()) {
                    fsum += (*row.f1_per_annotator)[s].value;
                    ++fn;
                }
            }
        }
        row.kappa_avg = kn ? MetricValue::of(ksum / static_cast<double>(kn), pred.size())
                           : MetricValue::degenerate(std::string(detail::kAllPairsDegenerate), pred.size());
        if (verif)
            row.f1_avg = fn ? MetricValue::of(fsum / static_cast<double>(fn), pred.size())
                            : MetricValue::degenerate(std::string(detail::kAllPairsDegenerate), pred.size());
        if (subset == Subset::FullMajority) {
            row.kappa_majority = detail::kappa_ordinal(pred, majority);
            row.rho_majority = detail::rho_ordinal(pred, majority);
            std::vector<std::vector<AspectLabel>> rows;
            for (std::size_t i = 0; i < pred.size(); ++i)
                rows.push_back({pred[i], majority[i]});
            row.alpha_majority = detail::alpha_ordinal(rows, distance);
            if (verif)
                row.f1_majority = detail::no_claim_f1(pred, majority);
        } else {
            const auto na = MetricValue::degenerate("no-majority-in-subset", pred.size());
            row.kappa_majority = row.rho_majority = row.alpha_majority = na;
        }
        report.rows.emplace(aspect, std::move(row));
    }
    if (overlap == 0)
        throw NoOverlap("model labels share no comment with the human data");
    return report;
}

inline json to_json(const ModelHumanReport& r)
{
    json rows = json::object();
    for (const auto& [aspect, row] : r.rows) {
        json per = json::object();
        for (std::size_t s = 0; s < 3; ++s)
            per[row.annotators[s]] = to_json(row.kappa_per_annotator[s]);
        json j = {{"n_items", row.n_items},
                  {"n_missing", row.n_missing},
                  {"kappa_per_annotator", per},
                  {"kappa_avg", to_json(row.kappa_avg)},
                  {"kappa_majority", to_json(row.kappa_majority)},
                  {"rho_majority", to_json(row.rho_majority)},
                  {"alpha_majority", to_json(row.alpha_majority)}};
        if (row.f1_per_annotator) {
            json f = json::object();
            for (std::size_t s = 0; s < 3; ++s)
                f[row.annotators[s]] = to_json((*row.f1_per_annotator)[s]);
            j["f1_per_annotator"] = f;
            j["f1_avg"] = to_json(*row.f1_avg);
        }
        if (row.f1_majority)
            j["f1_majority"] = to_json(*row.f1_majority);
        rows[std::string(aspect_key(aspect))] = std::move(j);
    }
    return {{"report", "model_vs_human"}, {"subset", subset_key(r.subset)}, {"aspects", rows}};
}

inline std::string to_text(const ModelHumanReport& r)
{
    std::string out = fmt::format("Model vs. human ({})\n", subset_key(r.subset));
    out += fmt::format("{:<24} {:>6} {:>5} {:>9} {:>9} {:>9} {:>9}   {:>7} {:>7} {:>7} {:>7}\n", "Aspect", "#",
                       "miss", "kappa2_1", "kappa2_2", "kappa2_3", "avg", "maj_k2", "rho", "alpha", "F1");
    for (const auto& [aspect, row] : r.rows)
        out += fmt::format("{:<24} {:>6} {:>5} {:>9} {:>9} {:>9} {:>9}   {:>7} {:>7} {:>7} {:>7}\n",
                           aspect_display_name(aspect), row.n_items, row.n_missing,
                           fmt_metric(row.kappa_per_annotator[0]), fmt_metric(row.kappa_per_annotator[1]),
                           fmt_metric(row.kappa_per_annotator[2]), fmt_metric(row.kappa_avg),
                           fmt_metric(row.kappa_majority), fmt_metric(row.rho_majority),
                           fmt_metric(row.alpha_majority), fmt_metric(row.f1_majority));
    out += "annotators: ";
    if (!r.rows.empty()) {
        const auto& names = r.rows.begin()->second.annotators;
        out += fmt::format("1={} 2={} 3={}", names[0], names[1], names[2]);
    }
    return out + "\n";
}

// --- source comparison -----------------------------------------------------

struct SourceStats {
    std::size_t n = 0;
    double mean = 0.0;
    double std = 0.0; ///< sample standard deviation (n - 1)
};

struct ComparisonRow {
    SourceStats first, second;
    std::optional<metrics::WelchResult> welch; ///< absent when a side has < 2 scores
};

struct ComparisonReport {
    std::string first_name, second_name;
    std::map<Aspect, ComparisonRow> rows;
};

/// Per-aspect mean/std of ordinal scores from two sources with Welch's
/// two-tailed p. NoClaim labels are left out.
inline ComparisonReport compare_review_sources(std::span<const AnnotationRecord> first,
                                               std::span<const AnnotationRecord> second,
                                               std::string first_name = "human",
                                               std::string second_name = "llm")
{
    if (first.empty())
        throw EmptySource("source '" + first_name + "' has no scores");
    if (second.empty())
        throw EmptySource("source '" + second_name + "' has no scores");
    auto collect = [](std::span<const AnnotationRecord> recs) {
        std::map<Aspect, std::vector<double>> by;
        for (const auto& r : recs)
            if (r.label.is_ordinal())
                by[r.aspect].push_back(r.label.score());
        return by;
    };
    auto a = collect(first), b = collect(second);
    ComparisonReport report{std::move(first_name), std::move(second_name), {}};
    auto stats = [](const std::vector<double>& v) {
        const auto s = metrics::summarize(v);
        return SourceStats{s.n, s.mean, std::sqrt(s.variance)};
    };
    for (auto aspect : kAllAspects) {
        if (!a.contains(aspect) && !b.contains(aspect))
            continue;
        ComparisonRow row{stats(a[aspect]), stats(b[aspect]), std::nullopt};
        if (a[aspect].size() >= 2 && b[aspect].size() >= 2)
            row.welch = metrics::welch_t_test(a[aspect], b[aspect]);
        report.rows.emplace(aspect, row);
    }
    return report;
}

inline json to_json(const ComparisonReport& r)
{
    json rows = json::object();
    for (const auto& [aspect, row] : r.rows) {
        auto side = [](const SourceStats& s) { return json{{"n", s.n}, {"mean", s.mean}, {"std", s.std}}; };
        json j = {{r.first_name, side(row.first)}, {r.second_name, side(row.second)}};
        if (row.welch)
            j["welch"] = {{"t", row.welch->t},
                          {"dof", row.welch->dof},
                          {"p", row.welch->p_two_tailed},
                          {"degenerate", row.welch->degenerate}};
        else
            j["welch"] = nullptr;
        rows[std::string(aspect_key(aspect))] = std::move(j);
    }
    return {{"report", "source_comparison"}, {"sources", {r.first_name, r.second_name}}, {"aspects", rows}};
}

inline std::string to_text(const ComparisonReport& r)
{
    std::string out = fmt::format("{:<24} {:>18} {:>18} {:>8}\n", "Aspect", r.first_name, r.second_name, "p");
    for (const auto& [aspect, row] : r.rows)
        out += fmt::format("{:<24} {:>18} {:>18} {:>8}\n", aspect_display_name(aspect),
                           fmt::format("{:.2f} ± {:.2f}", row.first.mean, row.first.std),
                           fmt::format("{:.2f} ± {:.2f}", row.second.mean, row.second.std),
                           row.welch ? fmt::format("{:.3f}", row.welch->p_two_tailed) : std::string("n/a"));
    return out;
}

// --- rationale similarity --------------------------------------------------

struct RougeBucket {
    std::size_t count = 0;
    double precision = 0.0, recall = 0.0, f1 = 0.0; ///< means over the bucket
};

struct RationaleRow {
    RougeBucket correct, wrong;
};

struct RationaleReport {
    std::map<Aspect, RationaleRow> rows;
};

/// Correct means within one point of the reference; NoClaim only matches NoClaim.
inline bool within_one(AspectLabel predicted, AspectLabel reference) noexcept
{
    if (predicted.is_no_claim() || reference.is_no_claim())
        return predicted.is_no_claim() && reference.is_no_claim();
    return std::abs(predicted.score() - reference.score()) <= 1;
}

/// Rouge-L of generated against reference rationales, split by whether the
/// generated label is within one point of the reference label.
inline RationaleReport rationale_similarity_report(std::span<const AnnotationRecord> generated,
                                                   std::span<const AnnotationRecord> reference)
{
    std::map<std::pair<std::string, Aspect>, const AnnotationRecord*> ref;
    for (const auto& r : reference) {
        if (!r.rationale)
            continue;
        if (!ref.emplace(std::pair{r.comment_id, r.aspect}, &r).second)
            throw DuplicateKey("reference has two rationales for " + r.comment_id + "/" +
                               std::string(aspect_key(r.aspect)));
    }
    std::map<Aspect, std::array<std::vector<metrics::RougeScore>, 2>> scores;
    std::size_t shared = 0;
    for (const auto& g : generated) {
        if (!g.rationale)
            continue;
        auto it = ref.find({g.comment_id, g.aspect});
        if (it == ref.end())
            continue;
        metrics::RougeScore score;
        try {
            score = metrics::rouge_l(*g.rationale, *it->second->rationale);
        } catch (const EmptyText&) {
            continue; // a blank rationale on either side is treated as absent
        }
        ++shared;
        const bool ok = within_one(g.label, it->second->label);
        scores[g.aspect][ok ? 0 : 1].push_back(score);
    }
    if (shared == 0)
        throw NoSharedItems("generated and reference rationales share no comment/aspect pair");
    RationaleReport report;
    for (const auto& [aspect, buckets] : scores) {
        auto mean = [](const std::vector<metrics::RougeScore>& v) {
            RougeBucket b;
            b.count = v.size();
            for (const auto& s : v) {
                b.precision += s.precision;
                b.recall += s.recall;
                b.f1 += s.f1;
            }
            if (b.count) {
                b.precision /= static_cast<double>(b.count);
                b.recall /= static_cast<double>(b.count);
                b.f1 /= static_cast<double>(b.count);
            }
            return b;
        };
        report.rows[aspect] = {mean(buckets[0]), mean(buckets[1])};
    }
    return report;
}

inline json to_json(const RationaleReport& r)
{
    auto bucket = [](const RougeBucket& b) {
        return json{{"count", b.count}, {"precision", b.precision}, {"recall", b.recall}, {"f1", b.f1}};
    };
    json rows = json::object();
    for (const auto& [aspect, row] : r.rows)
        rows[std::string(aspect_key(aspect))] = {{"correct", bucket(row.correct)}, {"wrong", bucket(row.wrong)}};
    return {{"report", "rationale_similarity"}, {"aspects", rows}};
}

inline std::string to_text(const RationaleReport& r)
{
    std::string out = fmt::format("{:<24} {:>6} {:>7} {:>7} {:>7}   {:>6} {:>7} {:>7} {:>7}\n", "Aspect", "R_C",
                                  "P", "R", "F", "R_W", "P", "R", "F");
    for (const auto& [aspect, row] : r.rows)
        out += fmt::format("{:<24} {:>6} {:>7.3f} {:>7.3f} {:>7.3f}   {:>6} {:>7.3f} {:>7.3f} {:>7.3f}\n",
                           aspect_display_name(aspect), row.correct.count, row.correct.precision,
                           row.correct.recall, row.correct.f1, row.wrong.count, row.wrong.precision,
                           row.wrong.recall, row.wrong.f1);
    return out;
}

// --- aspect correlations ---------------------------------------------------

struct CorrelationMatrix {
    std::array<std::array<MetricValue, 4>, 4> r;
};

/// Pearson r between aspects over items labelled on both; NoClaim items are
/// dropped pairwise.
inline CorrelationMatrix aspect_correlation_matrix(
    const std::map<Aspect, std::map<std::string, AspectLabel>>& labels)
{
    CorrelationMatrix m;
    static const std::map<std::string, AspectLabel> kEmpty;
    auto column = [&](Aspect a) -> const std::map<std::string, AspectLabel>& {
        auto it = labels.find(a);
        return it == labels.end() ? kEmpty : it->second;
    };
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i; j < 4; ++j) {
            const auto& ci = column(kAllAspects[i]);
            const auto& cj = column(kAllAspects[j]);
            std::vector<double> x, y;
            for (const auto& [id, li] : ci) {
                auto it = cj.find(id);
                if (it == cj.end() || !li.is_ordinal() || !it->second.is_ordinal())
                    continue;
                x.push_back(li.score());
                y.push_back(it->second.score());
            }
            MetricValue v;
            if (i == j)
                v = x.empty() ? MetricValue::degenerate(std::string(metrics::kTooFewItems), 0)
                              : MetricValue::of(1.0, x.size());
            else
                v = detail::guarded([&] { return metrics::pearson_r(std::span<const double>(x), std::span<const double>(y)); },
                                    x.size());
            m.r[i][j] = m.r[j][i] = v;
        }
    return m;
}

inline json to_json(const CorrelationMatrix& m)
{
    json names = json::array();
    for (auto a : kAllAspects)
        names.push_back(aspect_key(a));
    json rows = json::array();
    for (const auto& row : m.r) {
        json jr = json::array();
        for (const auto& c : row)
            jr.push_back(to_json(c));
        rows.push_back(std::move(jr));
    }
    return {{"report", "aspect_correlation"}, {"aspects", names}, {"pearson", rows}};
}

inline std::string to_text(const CorrelationMatrix& m)
{
    static constexpr std::array<std::string_view, 4> kShort = {"Act", "G&S", "Ver", "Help"};
    std::string out = fmt::format("{:<6}", "");
    for (auto s : kShort)
        out += fmt::format("{:>8}", s);
    out += "\n";
    for (std::size_t i = 0; i < 4; ++i) {
        out += fmt::format("{:<6}", kShort[i]);
        for (std::size_t j = 0; j < 4; ++j)
            out += fmt::format("{:>8}", fmt_metric(m.r[i][j]));
        out += "\n";
    }
    return out;
}

} // namespace revutil::analysis
