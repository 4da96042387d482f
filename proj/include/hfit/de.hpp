#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "hfit/rng.hpp"

namespace hfit {

struct DEConfig {
    std::size_t pop_size = 50;
    double F = 0.7;
    double cr = 0.9;
    std::size_t max_iters = 5000;
    std::size_t stall_window = 100; // stop after this many iterations without improvement; 0 disables
    double init_spread = 0.1;       // members 1.. are seed + U[-spread, spread]
    std::size_t threads = 1;
};

struct DEIteration {
    std::size_t iteration = 0;
    double best_fitness = 0.0;
    std::size_t stall = 0;
};

struct DEResult {
    std::vector<double> best;
    double best_fitness = 0.0;
    std::vector<DEIteration> history; // entry 0 is the initial population
};

/// Must be safe to call concurrently when threads > 1.
using Objective = std::function<double(std::span<const double>)>;

/// rand-to-best/1 mutation with binomial crossover. Slot j takes
/// a + F(g - a) + F(b - c) when r_j < cr or j is the forced index, else a.
[[nodiscard]] std::vector<double> de_trial(std::span<const double> a, std::span<const double> b,
    std::span<const double> c, std::span<const double> g, double F, double cr, Rng& rng);

/// Minimizes the objective starting from the seed vector. Member 0 is the seed
/// verbatim; slots flagged in `unit_mask` are clamped to [0, 1] when the other
/// members are perturbed. Replacement happens synchronously at the end of each
/// iteration and only on strict improvement.
[[nodiscard]] DEResult de_optimize(const Objective& objective, std::span<const double> seed, const DEConfig& config,
    Rng& rng, const std::vector<bool>& unit_mask = {});

} // namespace hfit
