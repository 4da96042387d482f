#include <algorithm>

#include "hfit/error.hpp"
#include "hfit/mogp.hpp"

namespace hfit {

namespace {

constexpr int crossover_attempts = 10;

Child element_at(const FuzzyTree& tree, const Locus& locus)
{
    if (locus.path.empty()) {
        return Child(tree.root);
    }
    return child_at(tree, locus.path);
}

// False when the replacement would make the root a terminal.
bool replace_at(FuzzyTree& tree, const Locus& locus, Child element)
{
    if (locus.path.empty()) {
        if (element.is_terminal()) {
            return false;
        }
        FuzzyNode node = std::move(element.node());
        tree.root = std::move(node);
        return true;
    }
    child_at(tree, locus.path) = std::move(element);
    return true;
}

template <typename Pred>
std::vector<Locus> filter_loci(const FuzzyTree& tree, Pred pred)
{
    auto all = loci(tree);
    std::vector<Locus> out;
    for (auto& l : all) {
        if (pred(l)) {
            out.push_back(std::move(l));
        }
    }
    return out;
}

FuzzyNode& node_at(FuzzyTree& tree, std::span<const std::size_t> path)
{
    return path.empty() ? tree.root : child_at(tree, path).node();
}

std::size_t draw_other_feature(Rng& rng, std::size_t current, std::size_t n_features)
{
    std::size_t f = uniform_index(rng, n_features - 1);
    return f >= current ? f + 1 : f;
}

} // namespace

void drop_input(FuzzyNode& node, std::size_t j)
{
    const std::size_t d = node.arity();
    if (j >= d || d < 2) {
        throw Error(ErrorKind::invalid_argument, "drop_input: no such input");
    }
    node.children.erase(node.children.begin() + static_cast<std::ptrdiff_t>(j));
    const std::size_t low_bits = d - 1 - j;
    const std::size_t new_rules = std::size_t { 1 } << (d - 1);
    std::visit(
        [&](auto& rb) {
            auto mfs = rb.mfs;
            mfs.erase(mfs.begin() + static_cast<std::ptrdiff_t>(2 * j), mfs.begin() + static_cast<std::ptrdiff_t>(2 * j + 2));
            std::decay_t<decltype(rb.rules)> rules;
            rules.reserve(new_rules);
            for (std::size_t r = 0; r < new_rules; ++r) {
                const std::size_t high = r >> low_bits;
                const std::size_t low = r & ((std::size_t { 1 } << low_bits) - 1);
                auto rule = rb.rules[(high << (low_bits + 1)) | low];
                rule.coeffs.erase(rule.coeffs.begin() + static_cast<std::ptrdiff_t>(j + 1));
                if constexpr (std::is_same_v<std::decay_t<decltype(rb)>, IT2RuleBase>) {
                    rule.spreads.erase(rule.spreads.begin() + static_cast<std::ptrdiff_t>(j + 1));
                }
                rules.push_back(std::move(rule));
            }
            rb.mfs = std::move(mfs);
            rb.rules = std::move(rules);
        },
        node.rules);
}

CrossoverResult crossover(const FuzzyTree& a, const FuzzyTree& b, Rng& rng, const TreeLimits& limits)
{
    const auto la = loci(a);
    const auto lb = loci(b);
    for (int attempt = 0; attempt < crossover_attempts; ++attempt) {
        const std::size_t ia = uniform_index(rng, la.size());
        const std::size_t ib = uniform_index(rng, lb.size());
        if (ia == 0 && ib == 0) {
            continue;
        }
        FuzzyTree first = a;
        FuzzyTree second = b;
        if (!replace_at(first, la[ia], element_at(b, lb[ib])) || !replace_at(second, lb[ib], element_at(a, la[ia]))) {
            continue;
        }
        if (check_invariants(first, limits) || check_invariants(second, limits)) {
            continue;
        }
        return { std::move(first), std::move(second), true };
    }
    return { a, b, false };
}

std::optional<FuzzyTree> apply_mutation(const FuzzyTree& tree, MutationOp op, Rng& rng, const TreeConfig& config)
{
    const auto& lim = config.limits;
    FuzzyTree out = tree;
    switch (op) {
    case MutationOp::replace_terminal: {
        const auto terms = filter_loci(tree, [](const Locus& l) { return l.terminal; });
        if (terms.empty()) {
            return std::nullopt;
        }
        const auto& pick = terms[uniform_index(rng, terms.size())];
        if (lim.n_features > 1) {
            const std::size_t current = child_at(tree, pick.path).feature();
            child_at(out, pick.path) = Child(draw_other_feature(rng, current, lim.n_features));
        }
        return out;
    }
    case MutationOp::replace_terminals: {
        for (const auto& l : filter_loci(tree, [](const Locus& l) { return l.terminal; })) {
            child_at(out, l.path) = Child(uniform_index(rng, lim.n_features));
        }
        return out;
    }
    case MutationOp::replace_node: {
        const auto nodes = filter_loci(tree, [](const Locus& l) { return !l.terminal; });
        const auto& pick = nodes[uniform_index(rng, nodes.size())];
        replace_at(out, pick, Child(random_node(rng, config, pick.depth)));
        return out;
    }
    case MutationOp::grow_terminal: {
        const auto terms = filter_loci(tree, [&](const Locus& l) { return l.terminal && l.depth <= lim.max_depth; });
        if (terms.empty()) {
            return std::nullopt;
        }
        const auto& pick = terms[uniform_index(rng, terms.size())];
        replace_at(out, pick, Child(random_node(rng, config, pick.depth)));
        return out;
    }
    case MutationOp::delete_element: {
        const auto cands = filter_loci(tree, [&](const Locus& l) {
            if (l.path.empty()) {
                return false;
            }
            const std::span<const std::size_t> parent(l.path.data(), l.path.size() - 1);
            const FuzzyNode& p = parent.empty() ? tree.root : child_at(tree, parent).node();
            return p.arity() > 2;
        });
        if (cands.empty()) {
            return std::nullopt;
        }
        const auto& pick = cands[uniform_index(rng, cands.size())];
        const std::span<const std::size_t> parent(pick.path.data(), pick.path.size() - 1);
        drop_input(node_at(out, parent), pick.path.back());
        return out;
    }
    }
    return std::nullopt;
}

MutationResult mutate(const FuzzyTree& tree, Rng& rng, const TreeConfig& config, std::span<const MutationOp> allowed)
{
    std::vector<MutationOp> remaining(allowed.begin(), allowed.end());
    while (!remaining.empty()) {
        const std::size_t k = uniform_index(rng, remaining.size());
        const MutationOp op = remaining[k];
        if (auto t = apply_mutation(tree, op, rng, config)) {
            return { std::move(*t), op, true };
        }
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(k));
    }
    return { tree, MutationOp::replace_terminal, false };
}

} // namespace hfit
