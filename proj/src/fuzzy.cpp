#include "hfit/fuzzy.hpp"

#include <string>

#include "hfit/error.hpp"

namespace hfit {

namespace {

void require_finite(double x)
{
    if (!std::isfinite(x)) {
        throw Error(ErrorKind::invalid_argument, "membership input is not finite (unnormalized data upstream?)");
    }
}

void require_same_length(std::size_t a, std::size_t b, const char* what)
{
    if (a != b) {
        throw Error(ErrorKind::length_mismatch,
            std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
    }
}

void require_width(double sigma)
{
    if (!(sigma > 0.0)) {
        throw Error(ErrorKind::invariant_violation, "membership width must be > 0");
    }
}

// Sort rule indices ascending by key; ties keep index order. M is small
// (at most a few hundred rules), so insertion sort is the fast choice.
template <typename Key>
void sort_indices(std::span<int> order, Key key) noexcept
{
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = static_cast<int>(i);
    }
    for (std::size_t i = 1; i < order.size(); ++i) {
        const int idx = order[i];
        const double k = key(idx);
        std::size_t j = i;
        while (j > 0 && key(order[j - 1]) > k) {
            order[j] = order[j - 1];
            --j;
        }
        order[j] = idx;
    }
}

// One KM endpoint. For the left endpoint rules at or below the running
// estimate take their upper firing; for the right endpoint rules above it do.
template <bool Left>
double km_endpoint(std::span<const FiringInterval> f, std::span<const Interval> b, std::span<const int> order) noexcept
{
    const std::size_t n = order.size();
    auto value = [&](std::size_t i) {
        const auto& c = b[static_cast<std::size_t>(order[i])];
        return Left ? c.lower : c.upper;
    };
    auto fire = [&](std::size_t i) -> const FiringInterval& { return f[static_cast<std::size_t>(order[i])]; };

    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = 0.5 * (fire(i).lower + fire(i).upper);
        num += w * value(i);
        den += w;
    }
    double y = num / den;

    std::size_t previous = n + 1;
    for (std::size_t iter = 0; iter <= n; ++iter) {
        std::size_t sw = 0;
        if constexpr (Left) {
            while (sw < n && value(sw) <= y) {
                ++sw;
            }
        } else {
            while (sw < n && value(sw) < y) {
                ++sw;
            }
        }
        if (sw == previous) {
            break;
        }
        previous = sw;

        num = 0.0;
        den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool below = i < sw;
            const double w = (below == Left) ? fire(i).upper : fire(i).lower;
            num += w * value(i);
            den += w;
        }
        if (!(den > 0.0)) {
            break;
        }
        y = num / den;
    }
    return y;
}

} // namespace

const char* to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::invalid_argument: return "invalid argument";
    case ErrorKind::length_mismatch: return "length mismatch";
    case ErrorKind::invariant_violation: return "invariant violation";
    case ErrorKind::file_not_found: return "file not found";
    case ErrorKind::ragged_row: return "ragged row";
    case ErrorKind::non_numeric: return "non-numeric value";
    case ErrorKind::parse_error: return "parse error";
    case ErrorKind::config_error: return "configuration error";
    case ErrorKind::feature_mismatch: return "feature mismatch";
    case ErrorKind::no_pareto_front: return "no Pareto front";
    case ErrorKind::degenerate: return "degenerate input";
    }
    return "unknown error";
}

namespace kernel {

TypeReduced karnik_mendel(
    std::span<const FiringInterval> firings, std::span<const Interval> consequents, std::span<int> order) noexcept
{
    double total = 0.0;
    for (const auto& f : firings) {
        total += f.upper;
    }
    if (total < fire_epsilon) {
        return { 0.0, 0.0, true };
    }

    TypeReduced out;
    sort_indices(order, [&](int i) { return consequents[static_cast<std::size_t>(i)].lower; });
    out.y_l = km_endpoint<true>(firings, consequents, order);
    sort_indices(order, [&](int i) { return consequents[static_cast<std::size_t>(i)].upper; });
    out.y_r = km_endpoint<false>(firings, consequents, order);
    return out;
}

} // namespace kernel

double t1_grade(double x, const T1MF& mf) { return t1_grade(x, mf, MembershipShape::bell); }

double t1_grade(double x, const T1MF& mf, MembershipShape shape)
{
    require_finite(x);
    require_width(mf.sigma);
    return shape == MembershipShape::bell ? kernel::bell(x, mf.m, mf.sigma) : kernel::gaussian(x, mf.m, mf.sigma);
}

FiringInterval it2_grade_bounds(double x, const IT2MF& mf)
{
    require_finite(x);
    require_width(mf.sigma);
    if (mf.m1 > mf.m2) {
        throw Error(ErrorKind::invariant_violation, "interval type-2 set requires m1 <= m2");
    }
    return kernel::it2_bounds(x, mf.m1, mf.m2, mf.sigma);
}

double t1_rule_firing(std::span<const double> inputs, std::span<const T1MF> mfs)
{
    return t1_rule_firing(inputs, mfs, MembershipShape::bell);
}

double t1_rule_firing(std::span<const double> inputs, std::span<const T1MF> mfs, MembershipShape shape)
{
    require_same_length(inputs.size(), mfs.size(), "t1_rule_firing");
    if (inputs.empty()) {
        throw Error(ErrorKind::invalid_argument, "t1_rule_firing: a rule needs at least one input");
    }
    double f = 1.0;
    for (std::size_t j = 0; j < inputs.size(); ++j) {
        f *= t1_grade(inputs[j], mfs[j], shape);
    }
    return f;
}

FiringInterval it2_rule_firing(std::span<const double> inputs, std::span<const IT2MF> mfs)
{
    require_same_length(inputs.size(), mfs.size(), "it2_rule_firing");
    if (inputs.empty()) {
        throw Error(ErrorKind::invalid_argument, "it2_rule_firing: a rule needs at least one input");
    }
    FiringInterval f { 1.0, 1.0 };
    for (std::size_t j = 0; j < inputs.size(); ++j) {
        const auto g = it2_grade_bounds(inputs[j], mfs[j]);
        f.lower *= g.lower;
        f.upper *= g.upper;
    }
    return f;
}

double t1_consequent(std::span<const double> inputs, const T1Consequent& c)
{
    require_same_length(c.coeffs.size(), inputs.size() + 1, "t1_consequent");
    double y = c.coeffs[0];
    for (std::size_t j = 0; j < inputs.size(); ++j) {
        y += c.coeffs[j + 1] * inputs[j];
    }
    return y;
}

Interval it2_consequent(std::span<const double> inputs, const IT2Consequent& c)
{
    require_same_length(c.coeffs.size(), inputs.size() + 1, "it2_consequent");
    require_same_length(c.spreads.size(), inputs.size() + 1, "it2_consequent spreads");
    Interval b { c.coeffs[0] - c.spreads[0], c.coeffs[0] + c.spreads[0] };
    for (std::size_t j = 0; j < inputs.size(); ++j) {
        b.lower += (c.coeffs[j + 1] - c.spreads[j + 1]) * inputs[j];
        b.upper += (c.coeffs[j + 1] + c.spreads[j + 1]) * inputs[j];
    }
    if (b.lower > b.upper) {
        std::swap(b.lower, b.upper);
    }
    return b;
}

double t1_defuzzify(std::span<const double> firings, std::span<const double> consequents)
{
    require_same_length(firings.size(), consequents.size(), "t1_defuzzify");
    if (firings.empty()) {
        throw Error(ErrorKind::invalid_argument, "t1_defuzzify: empty rule set");
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < firings.size(); ++i) {
        num += firings[i] * consequents[i];
        den += firings[i];
    }
    return den < fire_epsilon ? 0.0 : num / den;
}

TypeReduced km_type_reduce(std::span<const FiringInterval> firings, std::span<const Interval> consequents)
{
    require_same_length(firings.size(), consequents.size(), "km_type_reduce");
    if (firings.empty()) {
        throw Error(ErrorKind::invalid_argument, "km_type_reduce: empty rule set");
    }
    std::vector<int> order(firings.size());
    return kernel::karnik_mendel(firings, consequents, order);
}

} // namespace hfit
