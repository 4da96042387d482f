#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace hfit {

// Type-1 and interval type-2 TSK building blocks. Everything here is a pure
// function of its arguments.

/// Total firing below this is treated as "no rule fired"; the output is 0.
inline constexpr double fire_epsilon = 1e-12;

/// Type-1 membership function: center and width.
struct T1MF {
    double m = 0.0;
    double sigma = 1.0;
};

/// Gaussian with uncertain mean in [m1, m2] and fixed width.
struct IT2MF {
    double m1 = 0.0;
    double m2 = 0.0;
    double sigma = 1.0;
};

/// Shape used by type-1 nodes. `bell` is 1 / (1 + z^2); `gaussian` is
/// exp(-z^2 / 2), the same family the type-2 sets are built from.
enum class MembershipShape { bell, gaussian };

struct T1Consequent {
    std::vector<double> coeffs; // c0 .. cd
};

struct IT2Consequent {
    std::vector<double> coeffs;  // c0 .. cd
    std::vector<double> spreads; // s0 .. sd, >= 0
};

/// Closed interval [lower, upper] of membership or firing degrees.
struct FiringInterval {
    double lower = 0.0;
    double upper = 0.0;
};

/// Closed real interval, used for interval-valued rule consequents.
struct Interval {
    double lower = 0.0;
    double upper = 0.0;
};

/// Result of center-of-sets type reduction.
struct TypeReduced {
    double y_l = 0.0;
    double y_r = 0.0;
    bool degenerate = false; // every rule had (numerically) zero firing
};

// Unchecked kernels shared with the tree evaluator.
namespace kernel {

inline double bell(double x, double m, double sigma) noexcept
{
    const double z = (x - m) / sigma;
    return 1.0 / (1.0 + z * z);
}

inline double gaussian(double x, double m, double sigma) noexcept
{
    const double z = (x - m) / sigma;
    return std::exp(-0.5 * z * z);
}

/// Lower and upper membership of a Gaussian with uncertain mean, m1 <= m2.
inline FiringInterval it2_bounds(double x, double m1, double m2, double sigma) noexcept
{
    FiringInterval g;
    g.lower = x <= 0.5 * (m1 + m2) ? gaussian(x, m2, sigma) : gaussian(x, m1, sigma);
    if (x < m1) {
        g.upper = gaussian(x, m1, sigma);
    } else if (x > m2) {
        g.upper = gaussian(x, m2, sigma);
    } else {
        g.upper = 1.0;
    }
    return g;
}

/// Iterative Karnik-Mendel reduction. `order` is scratch space of size M.
/// Callers guarantee M >= 1 and matching lengths.
TypeReduced karnik_mendel(std::span<const FiringInterval> firings, std::span<const Interval> consequents,
    std::span<int> order) noexcept;

} // namespace kernel

/// Type-1 membership grade, 1 / (1 + ((x - m) / sigma)^2).
[[nodiscard]] double t1_grade(double x, const T1MF& mf);

/// Type-1 grade for either supported shape.
[[nodiscard]] double t1_grade(double x, const T1MF& mf, MembershipShape shape);

/// Lower/upper membership of an interval type-2 Gaussian set.
[[nodiscard]] FiringInterval it2_grade_bounds(double x, const IT2MF& mf);

/// Product t-norm over per-input grades.
[[nodiscard]] double t1_rule_firing(std::span<const double> inputs, std::span<const T1MF> mfs);
[[nodiscard]] double t1_rule_firing(
    std::span<const double> inputs, std::span<const T1MF> mfs, MembershipShape shape);

[[nodiscard]] FiringInterval it2_rule_firing(std::span<const double> inputs, std::span<const IT2MF> mfs);

/// c0 + sum_j cj * xj.
[[nodiscard]] double t1_consequent(std::span<const double> inputs, const T1Consequent& c);

/// Endpoints sum_j (cj -/+ sj) * xj with x0 = 1, reordered so lower <= upper.
[[nodiscard]] Interval it2_consequent(std::span<const double> inputs, const IT2Consequent& c);

/// Firing-weighted mean of rule outputs; 0 when the total firing is below
/// fire_epsilon.
[[nodiscard]] double t1_defuzzify(std::span<const double> firings, std::span<const double> consequents);

/// Center-of-sets type reduction computed with the iterative KM procedure.
[[nodiscard]] TypeReduced km_type_reduce(
    std::span<const FiringInterval> firings, std::span<const Interval> consequents);

[[nodiscard]] inline double it2_defuzzify(double y_l, double y_r) noexcept { return 0.5 * (y_l + y_r); }

} // namespace hfit
