#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hfit/fuzzy.hpp"
#include "hfit/matrix.hpp"
#include "hfit/rng.hpp"

namespace hfit {

enum class FisKind { type1, type2 };

/// Arity is capped so node evaluation can use fixed-size scratch.
inline constexpr std::size_t max_supported_arity = 8;

/// Lower bound applied to every membership width when parameters are loaded.
inline constexpr double sigma_floor = 1e-6;

/// Two sets per input; rule r picks set ((r >> (d - 1 - j)) & 1) for input j,
/// so the first input is the most significant bit of the rule index.
struct T1RuleBase {
    std::vector<T1MF> mfs;            // 2 * d, mfs[2 * j + k]
    std::vector<T1Consequent> rules;  // 2^d
};

struct IT2RuleBase {
    std::vector<IT2MF> mfs;
    std::vector<IT2Consequent> rules;
};

using NodeRuleBase = std::variant<T1RuleBase, IT2RuleBase>;

struct FuzzyNode;

/// An input slot of a node: a terminal feature index or a nested node.
class Child {
public:
    Child() = default;
    explicit Child(std::size_t feature);
    explicit Child(FuzzyNode node);
    Child(const Child& other);
    Child(Child&&) noexcept = default;
    Child& operator=(const Child& other);
    Child& operator=(Child&&) noexcept = default;
    ~Child();

    [[nodiscard]] bool is_terminal() const noexcept { return !node_; }
    [[nodiscard]] std::size_t feature() const noexcept { return feature_; }
    [[nodiscard]] const FuzzyNode& node() const noexcept { return *node_; }
    [[nodiscard]] FuzzyNode& node() noexcept { return *node_; }

private:
    std::size_t feature_ = 0;
    std::unique_ptr<FuzzyNode> node_;
};

struct FuzzyNode {
    std::vector<Child> children;
    NodeRuleBase rules;

    [[nodiscard]] std::size_t arity() const noexcept { return children.size(); }
};

/// Hierarchical fuzzy inference tree. Value type: copies are deep.
struct FuzzyTree {
    FisKind kind = FisKind::type1;
    MembershipShape t1_shape = MembershipShape::bell;
    FuzzyNode root;
};

struct TreeLimits {
    std::size_t max_depth = 4;
    std::size_t max_inputs = 4;
    std::size_t n_features = 1;
};

struct TreeConfig {
    TreeLimits limits;
    FisKind kind = FisKind::type1;
    MembershipShape t1_shape = MembershipShape::bell;
    double p_terminal = 0.5;
};

/// Pre-order position of a node or terminal. `depth` counts node layers:
/// the root is 1 and a child of a depth-k node sits at k + 1.
struct Locus {
    std::vector<std::size_t> path; // child indices from the root
    bool terminal = false;
    std::size_t depth = 1;
};

// --- structure -------------------------------------------------------------

[[nodiscard]] std::size_t node_parameter_count(FisKind kind, std::size_t arity);
[[nodiscard]] std::size_t parameter_count(const FuzzyTree& tree);
[[nodiscard]] std::size_t node_count(const FuzzyTree& tree);
[[nodiscard]] std::size_t terminal_count(const FuzzyTree& tree);

/// Number of node layers (a single node over terminals has depth 1).
[[nodiscard]] std::size_t depth(const FuzzyTree& tree);
[[nodiscard]] std::size_t height(const FuzzyNode& node);

/// Distinct terminal indices reachable from the root.
[[nodiscard]] std::set<std::size_t> selected_features(const FuzzyTree& tree);

/// All nodes and terminals in pre-order (root first).
[[nodiscard]] std::vector<Locus> loci(const FuzzyTree& tree);

[[nodiscard]] const Child& child_at(const FuzzyTree& tree, std::span<const std::size_t> path);
[[nodiscard]] Child& child_at(FuzzyTree& tree, std::span<const std::size_t> path);

/// Empty when every invariant holds, otherwise a description of the first
/// violation found.
[[nodiscard]] std::optional<std::string> check_invariants(const FuzzyTree& tree, const TreeLimits& limits);

// --- construction ----------------------------------------------------------

[[nodiscard]] NodeRuleBase random_rule_base(Rng& rng, FisKind kind, std::size_t arity);
[[nodiscard]] FuzzyNode random_node(Rng& rng, const TreeConfig& config, std::size_t depth);
[[nodiscard]] FuzzyTree random_tree(Rng& rng, const TreeConfig& config);

/// Builds a node with the given children and a zero rule base (unit widths).
[[nodiscard]] FuzzyNode make_node(FisKind kind, std::vector<Child> children);

// --- parameters ------------------------------------------------------------

/// Pre-order over nodes; per node the set parameters in input order
/// (m, sigma) or (m1, m2, sigma), then each rule's consequent
/// (c0..cd, and for type 2 s0..sd) in rule-index order.
[[nodiscard]] std::vector<double> flatten_parameters(const FuzzyTree& tree);

/// Overwrites all parameters. Widths map through max(|sigma|, sigma_floor),
/// mean pairs are sorted so m1 <= m2 and spreads map through |s|.
[[nodiscard]] FuzzyTree load_parameters(const FuzzyTree& tree, std::span<const double> values);

/// Slots of the flat vector that hold membership-function parameters (centers
/// and widths, searched in [0, 1]).
[[nodiscard]] std::vector<bool> membership_mask(const FuzzyTree& tree);

// --- evaluation ------------------------------------------------------------

[[nodiscard]] double evaluate_tree(const FuzzyTree& tree, std::span<const double> input);
[[nodiscard]] std::vector<double> evaluate_tree(const FuzzyTree& tree, const Matrix& inputs);

/// Flattened, allocation-free evaluator for a fixed topology. Parameters are
/// read from a flat vector in the flatten_parameters layout and sanitized on
/// the fly, so an optimizer can evaluate candidate vectors directly.
class CompiledTree {
public:
    explicit CompiledTree(const FuzzyTree& tree);

    [[nodiscard]] std::size_t parameter_count() const noexcept { return n_params_; }
    [[nodiscard]] std::size_t required_inputs() const noexcept { return required_inputs_; }

    [[nodiscard]] double evaluate(std::span<const double> params, std::span<const double> input) const;
    [[nodiscard]] std::vector<double> predict(std::span<const double> params, const Matrix& inputs) const;
    [[nodiscard]] double rmse(std::span<const double> params, const Matrix& inputs, std::span<const double> targets) const;

private:
    struct Op {
        std::uint32_t arity = 0;
        std::uint32_t offset = 0;
        std::int32_t sources[max_supported_arity] = {}; // >= 0 feature, < 0 => node slot -(s + 1)
    };

    double run(std::span<const double> params, std::span<const double> input, std::span<double> slots) const;

    FisKind kind_;
    MembershipShape shape_;
    std::vector<Op> ops_; // post-order; the last op is the root
    std::size_t n_params_ = 0;
    std::size_t required_inputs_ = 0;
};

} // namespace hfit
