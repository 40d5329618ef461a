#pragma once

#include <revutil/error.hpp>
#include <revutil/special_functions.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace revutil::metrics {

/// A metric value, or a typed reason why it is undefined for this input.
struct MetricValue {
    double value = std::numeric_limits<double>::quiet_NaN();
    std::size_t n_items = 0;
    std::optional<std::string> degenerate_reason;

    bool defined() const noexcept { return !degenerate_reason.has_value(); }

    static MetricValue of(double v, std::size_t n) { return {v, n, std::nullopt}; }
    static MetricValue degenerate(std::string reason, std::size_t n)
    {
        return {std::numeric_limits<double>::quiet_NaN(), n, std::move(reason)};
    }
};

inline constexpr std::string_view kZeroVariance = "zero-variance";
inline constexpr std::string_view kTooFewItems = "too-few-items";
inline constexpr std::string_view kNoPositives = "no-positives";

/// Ordinal ratings aligned by item over an explicit ordered category list.
struct RatingVector {
    std::vector<int> values;
    std::vector<int> categories = {1, 2, 3, 4, 5};
};

namespace detail {

inline void check_paired(std::size_t a, std::size_t b)
{
    if (a != b)
        throw LengthMismatch("paired inputs differ in length: " + std::to_string(a) + " vs " +
                             std::to_string(b));
}

inline double clamp_unit(double r) { return std::clamp(r, -1.0, 1.0); }

} // namespace detail

// --- Quadratic-weighted kappa -------------------------------------------

/// Cohen's kappa with quadratic weights w_ij = (i - j)^2 / (k - 1)^2 over a
/// fixed category set, so unobserved categories never shift the weights.
inline MetricValue quadratic_weighted_kappa(std::span<const int> a, std::span<const int> b,
                                            std::span<const int> categories)
{
    detail::check_paired(a.size(), b.size());
    if (a.empty())
        throw EmptyInput("quadratic_weighted_kappa: empty input");
    const std::size_t k = categories.size();
    if (k < 2)
        throw Error("quadratic_weighted_kappa: need at least 2 categories");

    auto index_of = [&](int v) {
        auto it = std::find(categories.begin(), categories.end(), v);
        if (it == categories.end())
            throw Error("rating " + std::to_string(v) + " outside the category set");
        return static_cast<std::size_t>(it - categories.begin());
    };

    const auto n = a.size();
    std::vector<double> observed(k * k, 0.0);
    std::vector<double> marg_a(k, 0.0), marg_b(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto ia = index_of(a[i]);
        const auto ib = index_of(b[i]);
        observed[ia * k + ib] += 1.0;
        marg_a[ia] += 1.0;
        marg_b[ib] += 1.0;
    }

    const double denom = static_cast<double>((k - 1) * (k - 1));
    double weighted_observed = 0.0;
    double weighted_expected = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            const double d = static_cast<double>(i) - static_cast<double>(j);
            const double w = d * d / denom;
            weighted_observed += w * observed[i * k + j] / n;
            weighted_expected += w * (marg_a[i] / n) * (marg_b[j] / n);
        }
    }
    if (weighted_expected == 0.0)
        return MetricValue::degenerate(std::string(kZeroVariance), n);
    return MetricValue::of(1.0 - weighted_observed / weighted_expected, n);
}

inline MetricValue quadratic_weighted_kappa(std::span<const int> a, std::span<const int> b)
{
    static constexpr int kDefault[] = {1, 2, 3, 4, 5};
    return quadratic_weighted_kappa(a, b, kDefault);
}

inline MetricValue quadratic_weighted_kappa(const RatingVector& a, const RatingVector& b)
{
    if (a.categories != b.categories)
        throw Error("quadratic_weighted_kappa: rating vectors use different category sets");
    return quadratic_weighted_kappa(a.values, b.values, a.categories);
}

// --- Correlations --------------------------------------------------------

inline MetricValue pearson_r(std::span<const double> x, std::span<const double> y)
{
    detail::check_paired(x.size(), y.size());
    const auto n = x.size();
    if (n < 2)
        return MetricValue::degenerate(std::string(kTooFewItems), n);
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        return MetricValue::degenerate(std::string(kZeroVariance), n);
    return MetricValue::of(detail::clamp_unit(sxy / std::sqrt(sxx * syy)), n);
}

inline MetricValue pearson_r(std::span<const int> x, std::span<const int> y)
{
    std::vector<double> dx(x.begin(), x.end()), dy(y.begin(), y.end());
    return pearson_r(std::span<const double>(dx), std::span<const double>(dy));
}

/// 1-based ranks with ties replaced by their average rank.
template <class T>
std::vector<double> midranks(std::span<const T> v)
{
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> ranks(v.size());
    for (std::size_t start = 0; start < order.size();) {
        std::size_t end = start + 1;
        while (end < order.size() && !(v[order[start]] < v[order[end]]))
            ++end;
        const double avg = (static_cast<double>(start + 1) + static_cast<double>(end)) / 2.0;
        for (std::size_t i = start; i < end; ++i)
            ranks[order[i]] = avg;
        start = end;
    }
    return ranks;
}

/// Spearman's rho as Pearson correlation of midranks.
template <class T>
MetricValue spearman_rho(std::span<const T> a, std::span<const T> b)
{
    detail::check_paired(a.size(), b.size());
    if (a.size() < 2)
        return MetricValue::degenerate(std::string(kTooFewItems), a.size());
    const auto ra = midranks(a);
    const auto rb = midranks(b);
    return pearson_r(std::span<const double>(ra), std::span<const double>(rb));
}

inline MetricValue spearman_rho(std::span<const int> a, std::span<const int> b)
{
    return spearman_rho<int>(a, b);
}

// --- Krippendorff's alpha -----------------------------------------------

enum class AlphaDistance { Interval, Ordinal, Nominal };

/// One row per item, one cell per rater; std::nullopt marks a missing rating.
using RatingMatrix = std::vector<std::vector<std::optional<double>>>;

/// alpha = 1 - D_o / D_e computed from the coincidence matrix of pairable
/// values. Items with fewer than two ratings contribute nothing.
inline MetricValue krippendorff_alpha(const RatingMatrix& ratings,
                                      AlphaDistance distance = AlphaDistance::Interval)
{
    std::vector<double> values;
    for (const auto& row : ratings)
        for (const auto& cell : row)
            if (cell)
                values.push_back(*cell);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    const std::size_t k = values.size();
    auto index_of = [&](double v) {
        return static_cast<std::size_t>(std::lower_bound(values.begin(), values.end(), v) -
                                        values.begin());
    };

    std::vector<double> coincidence(k * k, 0.0);
    std::size_t pairable_items = 0;
    std::vector<std::size_t> idx;
    for (const auto& row : ratings) {
        idx.clear();
        for (const auto& cell : row)
            if (cell)
                idx.push_back(index_of(*cell));
        const auto m = idx.size();
        if (m < 2)
            continue;
        ++pairable_items;
        const double weight = 1.0 / static_cast<double>(m - 1);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                if (i != j)
                    coincidence[idx[i] * k + idx[j]] += weight;
    }
    if (pairable_items == 0)
        throw NoPairableValues("krippendorff_alpha: no item has two or more ratings");

    std::vector<double> marginal(k, 0.0);
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t d = 0; d < k; ++d)
            marginal[c] += coincidence[c * k + d];
    const double total = std::accumulate(marginal.begin(), marginal.end(), 0.0);

    auto delta = [&](std::size_t c, std::size_t d) -> double {
        switch (distance) {
        case AlphaDistance::Interval: {
            const double diff = values[c] - values[d];
            return diff * diff;
        }
        case AlphaDistance::Nominal:
            return c == d ? 0.0 : 1.0;
        case AlphaDistance::Ordinal: {
            const auto lo = std::min(c, d);
            const auto hi = std::max(c, d);
            double s = 0.0;
            for (std::size_t g = lo; g <= hi; ++g)
                s += marginal[g];
            s -= (marginal[c] + marginal[d]) / 2.0;
            return s * s;
        }
        }
        return 0.0;
    };

    double disagreement_observed = 0.0;
    double disagreement_expected = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t d = 0; d < k; ++d) {
            const double dd = delta(c, d);
            disagreement_observed += coincidence[c * k + d] * dd;
            disagreement_expected += marginal[c] * marginal[d] * dd;
        }
    }
    disagreement_observed /= total;
    disagreement_expected /= total * (total - 1.0);
    if (disagreement_expected == 0.0)
        return MetricValue::degenerate(std::string(kZeroVariance), pairable_items);
    return MetricValue::of(1.0 - disagreement_observed / disagreement_expected, pairable_items);
}

// --- Binary F1 -----------------------------------------------------------

/// F1 of `pred` against `gold`, where `true` marks the positive class.
inline MetricValue binary_f1(std::span<const bool> pred, std::span<const bool> gold)
{
    detail::check_paired(pred.size(), gold.size());
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] && gold[i])
            ++tp;
        else if (pred[i])
            ++fp;
        else if (gold[i])
            ++fn;
    }
    if (tp + fp + fn == 0)
        return MetricValue::degenerate(std::string(kNoPositives), pred.size());
    if (tp == 0)
        return MetricValue::of(0.0, pred.size());
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return MetricValue::of(2.0 * precision * recall / (precision + recall), pred.size());
}

/// Label-generic overload: an item is positive when it equals `positive_class`.
template <class Label>
MetricValue binary_f1(std::span<const Label> pred, std::span<const Label> gold,
                      const Label& positive_class)
{
    detail::check_paired(pred.size(), gold.size());
    // std::vector<bool> is not contiguous, so spans need plain arrays.
    const auto n = pred.size();
    auto p = std::make_unique<bool[]>(n);
    auto g = std::make_unique<bool[]>(n);
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = pred[i] == positive_class;
        g[i] = gold[i] == positive_class;
    }
    return binary_f1(std::span<const bool>(p.get(), n), std::span<const bool>(g.get(), n));
}

// --- Pairwise averaging --------------------------------------------------

struct PairwiseResult {
    MetricValue mean;
    std::size_t pairs_used = 0;
    std::size_t pairs_skipped = 0;
    /// One entry per unordered pair (i < j) in lexicographic order.
    std::vector<MetricValue> per_pair;
};

/// Mean of `metric` over all unordered rater pairs, skipping degenerate pairs.
template <class Rater, class PairMetric>
PairwiseResult pairwise_average(std::span<const Rater> raters, PairMetric&& metric)
{
    if (raters.size() < 2)
        throw EmptyInput("pairwise_average needs at least two raters");
    PairwiseResult out;
    double sum = 0.0;
    std::size_t n_items = 0;
    for (std::size_t i = 0; i < raters.size(); ++i) {
        for (std::size_t j = i + 1; j < raters.size(); ++j) {
            MetricValue v = metric(raters[i], raters[j]);
            if (v.defined()) {
                sum += v.value;
                ++out.pairs_used;
                n_items = std::max(n_items, v.n_items);
            } else {
                ++out.pairs_skipped;
            }
            out.per_pair.push_back(std::move(v));
        }
    }
    if (out.pairs_used == 0)
        throw AllPairsDegenerate("every rater pair produced a degenerate metric");
    out.mean = MetricValue::of(sum / static_cast<double>(out.pairs_used), n_items);
    return out;
}

// --- Rouge-L -------------------------------------------------------------

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Lowercased whitespace tokenization used for rationale comparison.
inline std::vector<std::string> rouge_tokenize(std::string_view text)
{
    std::vector<std::string> tokens;
    std::istringstream in{std::string(text)};
    for (std::string tok; in >> tok;) {
        std::transform(tok.begin(), tok.end(), tok.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        tokens.push_back(std::move(tok));
    }
    return tokens;
}

inline std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b)
{
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

inline RougeScore rouge_l(std::span<const std::string> candidate,
                          std::span<const std::string> reference)
{
    if (candidate.empty() || reference.empty())
        throw EmptyText("rouge_l: empty candidate or reference");
    const auto lcs = static_cast<double>(lcs_length(candidate, reference));
    RougeScore s;
    s.precision = lcs / static_cast<double>(candidate.size());
    s.recall = lcs / static_cast<double>(reference.size());
    if (lcs > 0.0)
        s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
    return s;
}

inline RougeScore rouge_l(std::string_view candidate, std::string_view reference)
{
    const auto c = rouge_tokenize(candidate);
    const auto r = rouge_tokenize(reference);
    return rouge_l(std::span<const std::string>(c), std::span<const std::string>(r));
}

// --- Welch's t-test ------------------------------------------------------

struct WelchResult {
    double t = 0.0;
    double dof = 0.0;
    double p_two_tailed = 1.0;
    /// Both samples have zero variance; p is 1 for equal means, 0 otherwise.
    bool degenerate = false;
};

struct SampleSummary {
    std::size_t n = 0;
    double mean = 0.0;
    double variance = 0.0; ///< unbiased (n - 1 denominator)
};

inline SampleSummary summarize(std::span<const double> x)
{
    SampleSummary s;
    s.n = x.size();
    if (s.n == 0)
        return s;
    s.mean = std::accumulate(x.begin(), x.end(), 0.0) / s.n;
    if (s.n > 1) {
        double ss = 0.0;
        for (double v : x)
            ss += (v - s.mean) * (v - s.mean);
        s.variance = ss / static_cast<double>(s.n - 1);
    }
    return s;
}

/// Unequal-variance t-test with Welch-Satterthwaite degrees of freedom.
inline WelchResult welch_t_test(std::span<const double> x, std::span<const double> y)
{
    if (x.size() < 2 || y.size() < 2)
        throw InsufficientData("welch_t_test: each sample needs at least 2 values");
    const auto sx = summarize(x);
    const auto sy = summarize(y);
    const double vx = sx.variance / sx.n;
    const double vy = sy.variance / sy.n;
    const double diff = sx.mean - sy.mean;

    WelchResult r;
    if (vx + vy == 0.0) {
        r.degenerate = true;
        r.dof = static_cast<double>(sx.n + sy.n - 2);
        if (diff == 0.0) {
            r.t = 0.0;
            r.p_two_tailed = 1.0;
        } else {
            r.t = std::copysign(std::numeric_limits<double>::infinity(), diff);
            r.p_two_tailed = 0.0;
        }
        return r;
    }
    r.t = diff / std::sqrt(vx + vy);
    r.dof = (vx + vy) * (vx + vy) /
            (vx * vx / static_cast<double>(sx.n - 1) + vy * vy / static_cast<double>(sy.n - 1));
    r.p_two_tailed = special::student_t_two_tailed_p(r.t, r.dof);
    return r;
}

} // namespace revutil::metrics
