#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "hfit/error.hpp"
#include "hfit/tree.hpp"

namespace hfit {

namespace {

constexpr std::size_t max_rules = std::size_t { 1 } << max_supported_arity;

// Expands per-input grades into per-rule products, first input most
// significant. `f` must hold 2^d entries.
template <typename Grade>
void expand_products(std::size_t d, Grade grade, double* f) noexcept
{
    f[0] = 1.0;
    std::size_t size = 1;
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t t = size; t-- > 0;) {
            const double base = f[t];
            f[2 * t + 1] = base * grade(j, 1);
            f[2 * t] = base * grade(j, 0);
        }
        size *= 2;
    }
}

double t1_node(const double* p, std::size_t d, const double* z, MembershipShape shape) noexcept
{
    double g[max_supported_arity][2];
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t k = 0; k < 2; ++k) {
            const double* mf = p + 2 * (2 * j + k);
            const double sigma = std::max(std::abs(mf[1]), sigma_floor);
            g[j][k] = shape == MembershipShape::bell ? kernel::bell(z[j], mf[0], sigma)
                                                     : kernel::gaussian(z[j], mf[0], sigma);
        }
    }
    double f[max_rules];
    expand_products(d, [&](std::size_t j, std::size_t k) { return g[j][k]; }, f);

    const std::size_t rules = std::size_t { 1 } << d;
    const double* c = p + 4 * d;
    double num = 0.0;
    double den = 0.0;
    for (std::size_t r = 0; r < rules; ++r, c += d + 1) {
        double y = c[0];
        for (std::size_t j = 0; j < d; ++j) {
            y += c[j + 1] * z[j];
        }
        num += f[r] * y;
        den += f[r];
    }
    return den < fire_epsilon ? 0.0 : num / den;
}

double t2_node(const double* p, std::size_t d, const double* z) noexcept
{
    FiringInterval g[max_supported_arity][2];
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t k = 0; k < 2; ++k) {
            const double* mf = p + 3 * (2 * j + k);
            const double m1 = std::min(mf[0], mf[1]);
            const double m2 = std::max(mf[0], mf[1]);
            const double sigma = std::max(std::abs(mf[2]), sigma_floor);
            g[j][k] = kernel::it2_bounds(z[j], m1, m2, sigma);
        }
    }
    double lo[max_rules];
    double hi[max_rules];
    expand_products(d, [&](std::size_t j, std::size_t k) { return g[j][k].lower; }, lo);
    expand_products(d, [&](std::size_t j, std::size_t k) { return g[j][k].upper; }, hi);

    const std::size_t rules = std::size_t { 1 } << d;
    std::array<FiringInterval, max_rules> fire;
    std::array<Interval, max_rules> cons;
    const double* c = p + 6 * d;
    for (std::size_t r = 0; r < rules; ++r, c += 2 * (d + 1)) {
        const double* s = c + d + 1;
        Interval b { c[0] - std::abs(s[0]), c[0] + std::abs(s[0]) };
        for (std::size_t j = 0; j < d; ++j) {
            const double spread = std::abs(s[j + 1]);
            b.lower += (c[j + 1] - spread) * z[j];
            b.upper += (c[j + 1] + spread) * z[j];
        }
        if (b.lower > b.upper) {
            std::swap(b.lower, b.upper);
        }
        cons[r] = b;
        fire[r] = { lo[r], hi[r] };
    }
    std::array<int, max_rules> order;
    const auto tr = kernel::karnik_mendel(std::span(fire.data(), rules), std::span(cons.data(), rules),
        std::span(order.data(), rules));
    return it2_defuzzify(tr.y_l, tr.y_r);
}

} // namespace

CompiledTree::CompiledTree(const FuzzyTree& tree)
    : kind_(tree.kind)
    , shape_(tree.t1_shape)
{
    std::size_t next_offset = 0;
    // Returns the node's slot; offsets are handed out in pre-order, ops are
    // emitted in post-order.
    auto compile = [&](auto& self, const FuzzyNode& node) -> std::int32_t {
        const std::size_t d = node.arity();
        if (d < 1 || d > max_supported_arity) {
            throw Error(ErrorKind::invariant_violation, "node arity " + std::to_string(d) + " unsupported");
        }
        Op op;
        op.arity = static_cast<std::uint32_t>(d);
        op.offset = static_cast<std::uint32_t>(next_offset);
        next_offset += node_parameter_count(kind_, d);
        for (std::size_t j = 0; j < d; ++j) {
            const Child& c = node.children[j];
            if (c.is_terminal()) {
                op.sources[j] = static_cast<std::int32_t>(c.feature());
                required_inputs_ = std::max(required_inputs_, c.feature() + 1);
            } else {
                op.sources[j] = -(self(self, c.node()) + 1);
            }
        }
        ops_.push_back(op);
        return static_cast<std::int32_t>(ops_.size() - 1);
    };
    compile(compile, tree.root);
    n_params_ = next_offset;
}

double CompiledTree::run(std::span<const double> params, std::span<const double> input, std::span<double> slots) const
{
    double z[max_supported_arity];
    for (std::size_t k = 0; k < ops_.size(); ++k) {
        const Op& op = ops_[k];
        for (std::size_t j = 0; j < op.arity; ++j) {
            const std::int32_t s = op.sources[j];
            z[j] = s >= 0 ? input[static_cast<std::size_t>(s)] : slots[static_cast<std::size_t>(-s - 1)];
        }
        const double* p = params.data() + op.offset;
        slots[k] = kind_ == FisKind::type1 ? t1_node(p, op.arity, z, shape_) : t2_node(p, op.arity, z);
    }
    return slots[ops_.size() - 1];
}

double CompiledTree::evaluate(std::span<const double> params, std::span<const double> input) const
{
    if (params.size() != n_params_) {
        throw Error(ErrorKind::length_mismatch, "evaluate: parameter vector length " + std::to_string(params.size())
                + ", tree needs " + std::to_string(n_params_));
    }
    if (input.size() < required_inputs_) {
        throw Error(ErrorKind::invalid_argument, "evaluate: terminal index " + std::to_string(required_inputs_ - 1)
                + " out of range for input of length " + std::to_string(input.size()));
    }
    std::vector<double> slots(ops_.size());
    return run(params, input, slots);
}

std::vector<double> CompiledTree::predict(std::span<const double> params, const Matrix& inputs) const
{
    if (params.size() != n_params_) {
        throw Error(ErrorKind::length_mismatch, "predict: parameter vector length mismatch");
    }
    if (inputs.rows() > 0 && inputs.cols() < required_inputs_) {
        throw Error(ErrorKind::invalid_argument, "predict: terminal index " + std::to_string(required_inputs_ - 1)
                + " out of range for " + std::to_string(inputs.cols()) + " input columns");
    }
    std::vector<double> slots(ops_.size());
    std::vector<double> out(inputs.rows());
    for (std::size_t i = 0; i < inputs.rows(); ++i) {
        out[i] = run(params, inputs.row(i), slots);
    }
    return out;
}

double CompiledTree::rmse(std::span<const double> params, const Matrix& inputs, std::span<const double> targets) const
{
    if (targets.size() != inputs.rows() || targets.empty()) {
        throw Error(ErrorKind::length_mismatch, "rmse: target count does not match input rows");
    }
    if (params.size() != n_params_) {
        throw Error(ErrorKind::length_mismatch, "rmse: parameter vector length mismatch");
    }
    if (inputs.cols() < required_inputs_) {
        throw Error(ErrorKind::invalid_argument, "rmse: terminal index out of range");
    }
    std::vector<double> slots(ops_.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < inputs.rows(); ++i) {
        const double e = targets[i] - run(params, inputs.row(i), slots);
        sum += e * e;
    }
    return std::sqrt(sum / static_cast<double>(targets.size()));
}

} // namespace hfit
