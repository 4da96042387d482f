#include "hfit/mogp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hfit/error.hpp"
#include "hfit/parallel.hpp"

namespace hfit {

namespace {

constexpr double reference_margin = 1.1;

void validate(const GpConfig& c, const Dataset& train)
{
    if (train.size() == 0) {
        throw Error(ErrorKind::invalid_argument, "evolve_structure: empty training set");
    }
    if (c.population < 2) {
        throw Error(ErrorKind::config_error, "population must be at least 2");
    }
    if (c.mating_pool < 1) {
        throw Error(ErrorKind::config_error, "mating_pool must be at least 1");
    }
    if (!(c.crossover_probability >= 0.0 && c.crossover_probability <= 1.0)) {
        throw Error(ErrorKind::config_error, "crossover_probability must lie in [0, 1]");
    }
    if (c.mutation_ops.empty()) {
        throw Error(ErrorKind::config_error, "mutation_ops must not be empty");
    }
    const auto& lim = c.tree.limits;
    if (lim.max_depth < 1 || lim.max_inputs < 2 || lim.max_inputs > max_supported_arity) {
        throw Error(ErrorKind::config_error,
            "max_depth must be >= 1 and max_inputs in [2, " + std::to_string(max_supported_arity) + "]");
    }
    if (lim.n_features != train.features()) {
        throw Error(ErrorKind::feature_mismatch, "tree limits assume " + std::to_string(lim.n_features)
                + " features, training set has " + std::to_string(train.features()));
    }
}

std::vector<Objectives> objectives_of(std::span<const Individual> pop)
{
    std::vector<Objectives> out;
    out.reserve(pop.size());
    for (const auto& ind : pop) {
        out.push_back(ind.objectives);
    }
    return out;
}

std::vector<Objectives> front_of(std::span<const Individual> pop)
{
    std::vector<Objectives> out;
    for (const auto& ind : pop) {
        if (ind.rank == 0) {
            out.push_back(ind.objectives);
        }
    }
    return out;
}

void evaluate_all(std::vector<Individual>& pop, std::size_t first, const Dataset& train, std::size_t threads)
{
    parallel_for(pop.size() - first, threads,
        [&](std::size_t i) { pop[first + i].objectives = evaluate_objectives(pop[first + i].tree, train); });
}

GenerationRecord record(std::size_t generation, std::span<const Individual> pop, double ref_rmse, double ref_complexity)
{
    GenerationRecord r;
    r.generation = generation;
    r.best_rmse = std::numeric_limits<double>::infinity();
    r.best_complexity = std::numeric_limits<std::size_t>::max();
    const auto front = front_of(pop);
    for (const auto& o : front) {
        r.best_rmse = std::min(r.best_rmse, o.rmse);
        r.best_complexity = std::min(r.best_complexity, o.complexity);
    }
    r.front_size = front.size();
    r.hypervolume = hypervolume(front, ref_rmse, ref_complexity);
    return r;
}

} // namespace

bool dominates(const Objectives& a, const Objectives& b) noexcept
{
    return a.rmse <= b.rmse && a.complexity <= b.complexity && (a.rmse < b.rmse || a.complexity < b.complexity);
}

std::vector<std::size_t> nondominated_sort(std::span<const Objectives> points)
{
    const std::size_t n = points.size();
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> count(n, 0);
    std::vector<std::size_t> rank(n, 0);
    std::vector<std::size_t> current;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (dominates(points[i], points[j])) {
                dominated[i].push_back(j);
                ++count[j];
            } else if (dominates(points[j], points[i])) {
                dominated[j].push_back(i);
                ++count[i];
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (count[i] == 0) {
            current.push_back(i);
        }
    }
    std::size_t level = 0;
    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (auto i : current) {
            rank[i] = level;
            for (auto j : dominated[i]) {
                if (--count[j] == 0) {
                    next.push_back(j);
                }
            }
        }
        current = std::move(next);
        ++level;
    }
    return rank;
}

std::vector<std::size_t> rmse_ranks(std::span<const Objectives> points)
{
    std::vector<double> values;
    values.reserve(points.size());
    for (const auto& p : points) {
        values.push_back(p.rmse);
    }
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    std::vector<std::size_t> rank(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        rank[i] = static_cast<std::size_t>(std::lower_bound(values.begin(), values.end(), points[i].rmse) - values.begin());
    }
    return rank;
}

std::vector<double> crowding_distance(std::span<const Objectives> front)
{
    const std::size_t n = front.size();
    std::vector<double> dist(n, 0.0);
    if (n <= 2) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        return dist;
    }
    std::vector<std::size_t> order(n);
    auto accumulate = [&](auto value) {
        std::iota(order.begin(), order.end(), std::size_t { 0 });
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
        const double lo = value(order.front());
        const double hi = value(order.back());
        dist[order.front()] = std::numeric_limits<double>::infinity();
        dist[order.back()] = std::numeric_limits<double>::infinity();
        const double range = hi - lo;
        if (!(range > 0.0) || !std::isfinite(range)) {
            return;
        }
        for (std::size_t k = 1; k + 1 < n; ++k) {
            dist[order[k]] += (value(order[k + 1]) - value(order[k - 1])) / range;
        }
    };
    accumulate([&](std::size_t i) { return front[i].rmse; });
    accumulate([&](std::size_t i) { return static_cast<double>(front[i].complexity); });
    return dist;
}

void rank_population(std::vector<Individual>& population, ObjectiveMode mode)
{
    const auto points = objectives_of(population);
    const auto ranks = mode == ObjectiveMode::multi ? nondominated_sort(points) : rmse_ranks(points);
    for (std::size_t i = 0; i < population.size(); ++i) {
        population[i].rank = ranks[i];
        population[i].crowding = 0.0;
    }
    if (mode == ObjectiveMode::multi) {
        const std::size_t levels = population.empty() ? 0 : *std::max_element(ranks.begin(), ranks.end()) + 1;
        std::vector<std::vector<std::size_t>> members(levels);
        for (std::size_t i = 0; i < ranks.size(); ++i) {
            members[ranks[i]].push_back(i);
        }
        for (const auto& m : members) {
            std::vector<Objectives> front;
            for (auto i : m) {
                front.push_back(points[i]);
            }
            const auto d = crowding_distance(front);
            for (std::size_t k = 0; k < m.size(); ++k) {
                population[m[k]].crowding = d[k];
            }
        }
    }
    std::stable_sort(population.begin(), population.end(), [](const Individual& a, const Individual& b) {
        if (a.rank != b.rank) {
            return a.rank < b.rank;
        }
        return a.crowding > b.crowding;
    });
}

double hypervolume(std::span<const Objectives> points, double ref_rmse, double ref_complexity)
{
    std::vector<std::pair<double, double>> inside;
    for (const auto& p : points) {
        const auto c = static_cast<double>(p.complexity);
        if (p.rmse < ref_rmse && c < ref_complexity) {
            inside.emplace_back(p.rmse, c);
        }
    }
    std::sort(inside.begin(), inside.end());
    double volume = 0.0;
    double ceiling = ref_complexity;
    for (const auto& [r, c] : inside) {
        if (c < ceiling) {
            volume += (ref_rmse - r) * (ceiling - c);
            ceiling = c;
        }
    }
    return volume;
}

std::size_t tournament_winner(std::span<const Individual> pop, std::size_t i, std::size_t j) noexcept
{
    if (pop[i].rank != pop[j].rank) {
        return pop[i].rank < pop[j].rank ? i : j;
    }
    return pop[j].crowding > pop[i].crowding ? j : i;
}

std::size_t binary_tournament(std::span<const Individual> pop, Rng& rng)
{
    const std::size_t i = uniform_index(rng, pop.size());
    const std::size_t j = uniform_index(rng, pop.size());
    return tournament_winner(pop, i, j);
}

Objectives evaluate_objectives(const FuzzyTree& tree, const Dataset& train)
{
    const CompiledTree compiled(tree);
    const auto params = flatten_parameters(tree);
    double e = compiled.rmse(params, train.inputs, train.targets);
    if (!std::isfinite(e)) {
        e = std::numeric_limits<double>::max();
    }
    return { e, compiled.parameter_count() };
}

StructureSearch evolve_structure(
    const Dataset& train, const GpConfig& config, Rng& rng, const GenerationCallback& on_generation)
{
    validate(config, train);
    const std::size_t n = config.population;
    std::vector<Individual> pop(n);
    for (auto& ind : pop) {
        ind.tree = random_tree(rng, config.tree);
    }
    evaluate_all(pop, 0, train, config.threads);
    rank_population(pop, config.mode);

    // Fixed reference point so the logged hypervolume is comparable across
    // generations.
    double ref_rmse = 0.0;
    double ref_complexity = 0.0;
    for (const auto& ind : pop) {
        ref_rmse = std::max(ref_rmse, ind.objectives.rmse);
        ref_complexity = std::max(ref_complexity, static_cast<double>(ind.objectives.complexity));
    }
    ref_rmse = std::min(ref_rmse * reference_margin, std::numeric_limits<double>::max());
    ref_complexity *= reference_margin;

    StructureSearch result;
    auto log = [&](std::size_t g) {
        result.log.push_back(record(g, pop, ref_rmse, ref_complexity));
        if (on_generation) {
            on_generation(result.log.back());
        }
    };
    log(0);

    std::vector<std::size_t> pool(config.mating_pool);
    for (std::size_t g = 1; g <= config.iterations; ++g) {
        for (auto& p : pool) {
            p = binary_tournament(pop, rng);
        }
        std::vector<Individual> next = pop;
        next.reserve(2 * n);
        while (next.size() < 2 * n) {
            const std::size_t i = uniform_index(rng, pool.size());
            std::size_t j = i;
            if (pool.size() > 1) {
                j = uniform_index(rng, pool.size() - 1);
                j += j >= i ? 1 : 0;
            }
            const FuzzyTree& a = pop[pool[i]].tree;
            const FuzzyTree& b = pop[pool[j]].tree;
            FuzzyTree c1;
            FuzzyTree c2;
            if (uniform01(rng) < config.crossover_probability) {
                auto x = crossover(a, b, rng, config.tree.limits);
                c1 = std::move(x.first);
                c2 = std::move(x.second);
            } else {
                c1 = mutate(a, rng, config.tree, config.mutation_ops).tree;
                c2 = mutate(b, rng, config.tree, config.mutation_ops).tree;
            }
            next.push_back({ std::move(c1), {}, 0, 0.0 });
            if (next.size() < 2 * n) {
                next.push_back({ std::move(c2), {}, 0, 0.0 });
            }
        }
        evaluate_all(next, n, train, config.threads);
        rank_population(next, config.mode);
        next.resize(n);
        rank_population(next, config.mode);
        pop = std::move(next);
        log(g);
    }
    result.archive.individuals = std::move(pop);
    return result;
}

const Individual& pick_best(const ParetoArchive& archive)
{
    const Individual* best = nullptr;
    for (const auto& ind : archive.individuals) {
        if (ind.rank != 0) {
            continue;
        }
        if (!best || ind.objectives.rmse < best->objectives.rmse
            || (ind.objectives.rmse == best->objectives.rmse && ind.objectives.complexity < best->objectives.complexity)) {
            best = &ind;
        }
    }
    if (!best) {
        throw Error(ErrorKind::invalid_argument, "pick_best: archive has no rank-0 member");
    }
    return *best;
}

} // namespace hfit
