#include "hfit/tree.hpp"

#include <algorithm>
#include <cmath>

#include "hfit/error.hpp"

namespace hfit {

Child::Child(std::size_t feature)
    : feature_(feature)
{
}

Child::Child(FuzzyNode node)
    : node_(std::make_unique<FuzzyNode>(std::move(node)))
{
}

Child::Child(const Child& other)
    : feature_(other.feature_)
    , node_(other.node_ ? std::make_unique<FuzzyNode>(*other.node_) : nullptr)
{
}

Child& Child::operator=(const Child& other)
{
    if (this != &other) {
        Child copy(other);
        *this = std::move(copy);
    }
    return *this;
}

Child::~Child() = default;

namespace {

std::size_t rule_count(std::size_t arity) { return std::size_t { 1 } << arity; }

template <typename Fn>
void for_each_node(const FuzzyNode& node, std::size_t depth, Fn&& fn)
{
    fn(node, depth);
    for (const auto& c : node.children) {
        if (!c.is_terminal()) {
            for_each_node(c.node(), depth + 1, fn);
        }
    }
}

void collect_loci(const FuzzyNode& node, std::vector<std::size_t>& path, std::size_t depth, std::vector<Locus>& out)
{
    for (std::size_t i = 0; i < node.children.size(); ++i) {
        path.push_back(i);
        const auto& c = node.children[i];
        out.push_back({ path, c.is_terminal(), depth + 1 });
        if (!c.is_terminal()) {
            collect_loci(c.node(), path, depth + 1, out);
        }
        path.pop_back();
    }
}

std::optional<std::string> check_node(
    const FuzzyNode& node, FisKind kind, std::size_t depth, const TreeLimits& limits)
{
    const std::size_t d = node.arity();
    if (depth > limits.max_depth) {
        return "node at depth " + std::to_string(depth) + " exceeds max depth " + std::to_string(limits.max_depth);
    }
    if (d < 2 || d > limits.max_inputs || d > max_supported_arity) {
        return "node arity " + std::to_string(d) + " outside [2, " + std::to_string(limits.max_inputs) + "]";
    }
    const bool ok = std::visit(
        [&](const auto& rb) {
            using T = std::decay_t<decltype(rb)>;
            constexpr bool t1 = std::is_same_v<T, T1RuleBase>;
            if (t1 != (kind == FisKind::type1)) {
                return false;
            }
            if (rb.mfs.size() != 2 * d || rb.rules.size() != rule_count(d)) {
                return false;
            }
            for (const auto& r : rb.rules) {
                if (r.coeffs.size() != d + 1) {
                    return false;
                }
                if constexpr (!t1) {
                    if (r.spreads.size() != d + 1) {
                        return false;
                    }
                }
            }
            for (const auto& mf : rb.mfs) {
                if (!(mf.sigma > 0.0)) {
                    return false;
                }
                if constexpr (!t1) {
                    if (mf.m1 > mf.m2) {
                        return false;
                    }
                }
            }
            return true;
        },
        node.rules);
    if (!ok) {
        return "rule base inconsistent with node arity " + std::to_string(d);
    }
    for (const auto& c : node.children) {
        if (c.is_terminal()) {
            if (c.feature() >= limits.n_features) {
                return "terminal index " + std::to_string(c.feature()) + " out of range";
            }
        } else if (auto err = check_node(c.node(), kind, depth + 1, limits)) {
            return err;
        }
    }
    return std::nullopt;
}

double sanitize_sigma(double s) { return std::max(std::abs(s), sigma_floor); }

// Flat-vector layout of one node; see flatten_parameters.
template <typename Sink>
void visit_node_params(const FuzzyNode& node, Sink&& sink)
{
    std::visit(
        [&](const auto& rb) {
            using T = std::decay_t<decltype(rb)>;
            for (const auto& mf : rb.mfs) {
                if constexpr (std::is_same_v<T, T1RuleBase>) {
                    sink(mf.m, true);
                    sink(mf.sigma, true);
                } else {
                    sink(mf.m1, true);
                    sink(mf.m2, true);
                    sink(mf.sigma, true);
                }
            }
            for (const auto& r : rb.rules) {
                for (double c : r.coeffs) {
                    sink(c, false);
                }
                if constexpr (std::is_same_v<T, IT2RuleBase>) {
                    for (double s : r.spreads) {
                        sink(s, false);
                    }
                }
            }
        },
        node.rules);
}

template <typename Sink>
void visit_tree_params(const FuzzyNode& node, Sink&& sink)
{
    visit_node_params(node, sink);
    for (const auto& c : node.children) {
        if (!c.is_terminal()) {
            visit_tree_params(c.node(), sink);
        }
    }
}

void load_node(FuzzyNode& node, std::span<const double> values, std::size_t& pos)
{
    std::visit(
        [&](auto& rb) {
            using T = std::decay_t<decltype(rb)>;
            for (auto& mf : rb.mfs) {
                if constexpr (std::is_same_v<T, T1RuleBase>) {
                    mf.m = values[pos++];
                    mf.sigma = sanitize_sigma(values[pos++]);
                } else {
                    const double a = values[pos++];
                    const double b = values[pos++];
                    mf.m1 = std::min(a, b);
                    mf.m2 = std::max(a, b);
                    mf.sigma = sanitize_sigma(values[pos++]);
                }
            }
            for (auto& r : rb.rules) {
                for (auto& c : r.coeffs) {
                    c = values[pos++];
                }
                if constexpr (std::is_same_v<T, IT2RuleBase>) {
                    for (auto& s : r.spreads) {
                        s = std::abs(values[pos++]);
                    }
                }
            }
        },
        node.rules);
    for (auto& c : node.children) {
        if (!c.is_terminal()) {
            load_node(c.node(), values, pos);
        }
    }
}

} // namespace

std::size_t node_parameter_count(FisKind kind, std::size_t arity)
{
    const std::size_t sets = 2 * arity;
    const std::size_t rules = rule_count(arity);
    return kind == FisKind::type1 ? 2 * sets + rules * (arity + 1) : 3 * sets + rules * (2 * (arity + 1));
}

std::size_t parameter_count(const FuzzyTree& tree)
{
    std::size_t n = 0;
    for_each_node(tree.root, 1, [&](const FuzzyNode& node, std::size_t) { n += node_parameter_count(tree.kind, node.arity()); });
    return n;
}

std::size_t node_count(const FuzzyTree& tree)
{
    std::size_t n = 0;
    for_each_node(tree.root, 1, [&](const FuzzyNode&, std::size_t) { ++n; });
    return n;
}

std::size_t terminal_count(const FuzzyTree& tree)
{
    std::size_t n = 0;
    for_each_node(tree.root, 1, [&](const FuzzyNode& node, std::size_t) {
        n += static_cast<std::size_t>(
            std::count_if(node.children.begin(), node.children.end(), [](const Child& c) { return c.is_terminal(); }));
    });
    return n;
}

std::size_t depth(const FuzzyTree& tree) { return height(tree.root); }

std::size_t height(const FuzzyNode& node)
{
    std::size_t h = 0;
    for (const auto& c : node.children) {
        if (!c.is_terminal()) {
            h = std::max(h, height(c.node()));
        }
    }
    return h + 1;
}

std::set<std::size_t> selected_features(const FuzzyTree& tree)
{
    std::set<std::size_t> out;
    for_each_node(tree.root, 1, [&](const FuzzyNode& node, std::size_t) {
        for (const auto& c : node.children) {
            if (c.is_terminal()) {
                out.insert(c.feature());
            }
        }
    });
    return out;
}

std::vector<Locus> loci(const FuzzyTree& tree)
{
    std::vector<Locus> out;
    out.push_back({ {}, false, 1 });
    std::vector<std::size_t> path;
    collect_loci(tree.root, path, 1, out);
    return out;
}

const Child& child_at(const FuzzyTree& tree, std::span<const std::size_t> path)
{
    if (path.empty()) {
        throw Error(ErrorKind::invalid_argument, "child_at: the root is not a child slot");
    }
    const FuzzyNode* node = &tree.root;
    for (std::size_t i = 0;; ++i) {
        const Child& c = node->children.at(path[i]);
        if (i + 1 == path.size()) {
            return c;
        }
        if (c.is_terminal()) {
            throw Error(ErrorKind::invalid_argument, "child_at: path runs through a terminal");
        }
        node = &c.node();
    }
}

Child& child_at(FuzzyTree& tree, std::span<const std::size_t> path)
{
    return const_cast<Child&>(child_at(std::as_const(tree), path));
}

std::optional<std::string> check_invariants(const FuzzyTree& tree, const TreeLimits& limits)
{
    return check_node(tree.root, tree.kind, 1, limits);
}

NodeRuleBase random_rule_base(Rng& rng, FisKind kind, std::size_t arity)
{
    const std::size_t rules = rule_count(arity);
    if (kind == FisKind::type1) {
        T1RuleBase rb;
        rb.mfs.resize(2 * arity);
        for (auto& mf : rb.mfs) {
            mf.m = uniform01(rng);
            mf.sigma = sanitize_sigma(uniform01(rng));
        }
        rb.rules.resize(rules);
        for (auto& r : rb.rules) {
            r.coeffs.resize(arity + 1);
            for (auto& c : r.coeffs) {
                c = uniform(rng, -1.0, 1.0);
            }
        }
        return rb;
    }
    IT2RuleBase rb;
    rb.mfs.resize(2 * arity);
    for (auto& mf : rb.mfs) {
        // Uncertain mean m +/- lambda * sigma with lambda ~ U[0, 1].
        const double m = uniform01(rng);
        const double sigma = sanitize_sigma(uniform01(rng));
        const double lambda = uniform01(rng);
        mf.m1 = m - lambda * sigma;
        mf.m2 = m + lambda * sigma;
        mf.sigma = sigma;
    }
    rb.rules.resize(rules);
    for (auto& r : rb.rules) {
        r.coeffs.resize(arity + 1);
        r.spreads.resize(arity + 1);
        for (auto& c : r.coeffs) {
            c = uniform(rng, -1.0, 1.0);
        }
        for (auto& s : r.spreads) {
            s = uniform01(rng);
        }
    }
    return rb;
}

FuzzyNode random_node(Rng& rng, const TreeConfig& config, std::size_t depth)
{
    const auto& lim = config.limits;
    const std::size_t max_arity = std::min(lim.max_inputs, max_supported_arity);
    const std::size_t arity = 2 + uniform_index(rng, max_arity - 1);
    FuzzyNode node;
    node.children.reserve(arity);
    for (std::size_t i = 0; i < arity; ++i) {
        const bool leaf = depth >= lim.max_depth || uniform01(rng) < config.p_terminal;
        if (leaf) {
            node.children.emplace_back(uniform_index(rng, lim.n_features));
        } else {
            node.children.emplace_back(random_node(rng, config, depth + 1));
        }
    }
    node.rules = random_rule_base(rng, config.kind, arity);
    return node;
}

FuzzyTree random_tree(Rng& rng, const TreeConfig& config)
{
    const auto& lim = config.limits;
    if (lim.n_features < 1) {
        throw Error(ErrorKind::invalid_argument, "random_tree: need at least one feature");
    }
    if (lim.max_depth < 1 || lim.max_inputs < 2 || lim.max_inputs > max_supported_arity) {
        throw Error(ErrorKind::invalid_argument, "random_tree: max_depth >= 1 and 2 <= max_inputs <= 8 required");
    }
    FuzzyTree tree;
    tree.kind = config.kind;
    tree.t1_shape = config.t1_shape;
    tree.root = random_node(rng, config, 1);
    return tree;
}

FuzzyNode make_node(FisKind kind, std::vector<Child> children)
{
    const std::size_t d = children.size();
    FuzzyNode node;
    node.children = std::move(children);
    if (kind == FisKind::type1) {
        T1RuleBase rb;
        rb.mfs.assign(2 * d, T1MF { 0.0, 1.0 });
        rb.rules.assign(rule_count(d), T1Consequent { std::vector<double>(d + 1, 0.0) });
        node.rules = std::move(rb);
    } else {
        IT2RuleBase rb;
        rb.mfs.assign(2 * d, IT2MF { 0.0, 0.0, 1.0 });
        rb.rules.assign(
            rule_count(d), IT2Consequent { std::vector<double>(d + 1, 0.0), std::vector<double>(d + 1, 0.0) });
        node.rules = std::move(rb);
    }
    return node;
}

std::vector<double> flatten_parameters(const FuzzyTree& tree)
{
    std::vector<double> out;
    out.reserve(parameter_count(tree));
    visit_tree_params(tree.root, [&](double v, bool) { out.push_back(v); });
    return out;
}

std::vector<bool> membership_mask(const FuzzyTree& tree)
{
    std::vector<bool> out;
    out.reserve(parameter_count(tree));
    visit_tree_params(tree.root, [&](double, bool mf) { out.push_back(mf); });
    return out;
}

FuzzyTree load_parameters(const FuzzyTree& tree, std::span<const double> values)
{
    const std::size_t n = parameter_count(tree);
    if (values.size() != n) {
        throw Error(ErrorKind::length_mismatch,
            "load_parameters: expected " + std::to_string(n) + " values, got " + std::to_string(values.size()));
    }
    FuzzyTree out = tree;
    std::size_t pos = 0;
    load_node(out.root, values, pos);
    return out;
}

double evaluate_tree(const FuzzyTree& tree, std::span<const double> input)
{
    const CompiledTree compiled(tree);
    const auto params = flatten_parameters(tree);
    return compiled.evaluate(params, input);
}

std::vector<double> evaluate_tree(const FuzzyTree& tree, const Matrix& inputs)
{
    const CompiledTree compiled(tree);
    const auto params = flatten_parameters(tree);
    return compiled.predict(params, inputs);
}

} // namespace hfit
