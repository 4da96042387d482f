#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hfit/data.hpp"
#include "hfit/rng.hpp"
#include "hfit/tree.hpp"

namespace hfit {

/// Both objectives are minimized.
struct Objectives {
    double rmse = 0.0;
    std::size_t complexity = 0;

    friend bool operator==(const Objectives&, const Objectives&) = default;
};

struct Individual {
    FuzzyTree tree;
    Objectives objectives;
    std::size_t rank = 0;
    double crowding = 0.0;
};

/// Population ordered by (rank, -crowding); rank 0 is the nondominated front.
struct ParetoArchive {
    std::vector<Individual> individuals;
};

enum class ObjectiveMode {
    multi,  // Pareto ranking over (rmse, complexity)
    single, // ranking by rmse alone, crowding ignored
};

enum class MutationOp : std::size_t {
    replace_terminal = 0,  // (a) one terminal -> a different feature
    replace_terminals,     // (b) every terminal redrawn
    replace_node,          // (c) a node -> freshly generated subtree
    grow_terminal,         // (d) a terminal -> freshly generated node
    delete_element,        // (e) drop one input of a node with arity > 2
};

inline constexpr std::size_t mutation_op_count = 5;
inline constexpr std::array<MutationOp, mutation_op_count> all_mutation_ops { MutationOp::replace_terminal,
    MutationOp::replace_terminals, MutationOp::replace_node, MutationOp::grow_terminal, MutationOp::delete_element };

struct GpConfig {
    TreeConfig tree;
    std::size_t population = 50;
    std::size_t mating_pool = 25;
    std::size_t iterations = 500;
    double crossover_probability = 0.8; // mutation otherwise
    ObjectiveMode mode = ObjectiveMode::multi;
    std::vector<MutationOp> mutation_ops { all_mutation_ops.begin(), all_mutation_ops.end() };
    std::size_t threads = 1;
};

/// One line of the per-generation log.
struct GenerationRecord {
    std::size_t generation = 0;
    double best_rmse = 0.0;
    std::size_t best_complexity = 0; // smallest complexity on the front
    std::size_t front_size = 0;
    double hypervolume = 0.0;
};

struct StructureSearch {
    ParetoArchive archive;
    std::vector<GenerationRecord> log;
};

// --- ranking ---------------------------------------------------------------

/// a is no worse in both objectives and strictly better in at least one.
[[nodiscard]] bool dominates(const Objectives& a, const Objectives& b) noexcept;

/// Front index per point (0 = nondominated).
[[nodiscard]] std::vector<std::size_t> nondominated_sort(std::span<const Objectives> points);

/// Ranks by rmse only: equal rmse shares a rank.
[[nodiscard]] std::vector<std::size_t> rmse_ranks(std::span<const Objectives> points);

/// Boundary points get +infinity; interior points the sum of normalized
/// neighbour gaps over both objectives.
[[nodiscard]] std::vector<double> crowding_distance(std::span<const Objectives> front);

/// Fills rank and crowding in place and orders the population by
/// (rank, -crowding), stable on ties.
void rank_population(std::vector<Individual>& population, ObjectiveMode mode);

/// 2-D dominated hypervolume of the points relative to a reference point.
[[nodiscard]] double hypervolume(std::span<const Objectives> points, double ref_rmse, double ref_complexity);

// --- selection and variation -----------------------------------------------

/// Index of the tournament winner between candidates i and j.
[[nodiscard]] std::size_t tournament_winner(std::span<const Individual> pop, std::size_t i, std::size_t j) noexcept;

/// Two uniform picks; lower rank wins, then larger crowding, then the first.
[[nodiscard]] std::size_t binary_tournament(std::span<const Individual> pop, Rng& rng);

struct CrossoverResult {
    FuzzyTree first;
    FuzzyTree second;
    bool swapped = false; // false when every attempt breached a bound
};

/// Swaps uniformly chosen subtrees (or terminals) between the parents. The
/// root-for-root swap is excluded; offspring breaching the limits are redrawn
/// up to 10 times, after which the parents come back unchanged.
[[nodiscard]] CrossoverResult crossover(const FuzzyTree& a, const FuzzyTree& b, Rng& rng, const TreeLimits& limits);

struct MutationResult {
    FuzzyTree tree;
    MutationOp op = MutationOp::replace_terminal;
    bool applied = false; // false only when no allowed operator was feasible
};

/// Applies one operator drawn uniformly from `allowed`; infeasible draws
/// (nothing to grow or delete) are redrawn among the remaining operators.
[[nodiscard]] MutationResult mutate(
    const FuzzyTree& tree, Rng& rng, const TreeConfig& config, std::span<const MutationOp> allowed = all_mutation_ops);

/// Applies a specific operator; nullopt when it is infeasible for this tree.
[[nodiscard]] std::optional<FuzzyTree> apply_mutation(
    const FuzzyTree& tree, MutationOp op, Rng& rng, const TreeConfig& config);

/// Removes input `j` from a node, keeping the rules whose choice for that
/// input was its first set.
void drop_input(FuzzyNode& node, std::size_t j);

// --- search ----------------------------------------------------------------

[[nodiscard]] Objectives evaluate_objectives(const FuzzyTree& tree, const Dataset& train);

using GenerationCallback = std::function<void(const GenerationRecord&)>;

/// Nondominated-sorting GP over tree structures; each tree is scored with its
/// own (random) parameters.
[[nodiscard]] StructureSearch evolve_structure(
    const Dataset& train, const GpConfig& config, Rng& rng, const GenerationCallback& on_generation = {});

/// Rank-0 member with the lowest rmse; ties go to the smaller complexity, then
/// to the earlier member.
[[nodiscard]] const Individual& pick_best(const ParetoArchive& archive);

} // namespace hfit
