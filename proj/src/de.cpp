#include "hfit/de.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hfit/error.hpp"
#include "hfit/parallel.hpp"

namespace hfit {

namespace {

void validate(const DEConfig& c, std::size_t n, std::size_t mask_size)
{
    if (c.pop_size < 4) {
        throw Error(ErrorKind::config_error, "de.pop_size must be at least 4");
    }
    if (!(c.F >= 0.0 && c.F <= 2.0)) {
        throw Error(ErrorKind::config_error, "de.F must lie in [0, 2]");
    }
    if (!(c.cr >= 0.0 && c.cr <= 1.0)) {
        throw Error(ErrorKind::config_error, "de.cr must lie in [0, 1]");
    }
    if (!(c.init_spread >= 0.0) || !std::isfinite(c.init_spread)) {
        throw Error(ErrorKind::config_error, "de.init_spread must be finite and >= 0");
    }
    if (n == 0) {
        throw Error(ErrorKind::invalid_argument, "de_optimize: empty seed vector");
    }
    if (mask_size != 0 && mask_size != n) {
        throw Error(ErrorKind::length_mismatch, "de_optimize: mask length " + std::to_string(mask_size)
                + " does not match seed length " + std::to_string(n));
    }
}

// Three indices distinct from each other and from `target`.
void pick_three(Rng& rng, std::size_t pop, std::size_t target, std::size_t out[3])
{
    for (std::size_t k = 0; k < 3; ++k) {
        while (true) {
            const std::size_t idx = uniform_index(rng, pop);
            bool clash = idx == target;
            for (std::size_t m = 0; m < k; ++m) {
                clash = clash || idx == out[m];
            }
            if (!clash) {
                out[k] = idx;
                break;
            }
        }
    }
}

std::size_t argmin(std::span<const double> v)
{
    return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

} // namespace

std::vector<double> de_trial(std::span<const double> a, std::span<const double> b, std::span<const double> c,
    std::span<const double> g, double F, double cr, Rng& rng)
{
    const std::size_t n = a.size();
    if (n == 0 || b.size() != n || c.size() != n || g.size() != n) {
        throw Error(ErrorKind::length_mismatch, "de_trial: vectors must have equal nonzero length");
    }
    const std::size_t forced = uniform_index(rng, n);
    std::vector<double> out(a.begin(), a.end());
    for (std::size_t j = 0; j < n; ++j) {
        const double r = uniform01(rng);
        if (r < cr || j == forced) {
            out[j] = a[j] + F * (g[j] - a[j]) + F * (b[j] - c[j]);
        }
    }
    return out;
}

DEResult de_optimize(const Objective& objective, std::span<const double> seed, const DEConfig& config, Rng& rng,
    const std::vector<bool>& unit_mask)
{
    const std::size_t n = seed.size();
    validate(config, n, unit_mask.size());
    const std::size_t P = config.pop_size;

    std::vector<std::vector<double>> pop(P, std::vector<double>(seed.begin(), seed.end()));
    for (std::size_t i = 1; i < P; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double v = seed[j] + uniform(rng, -config.init_spread, config.init_spread);
            if (!unit_mask.empty() && unit_mask[j]) {
                v = std::clamp(v, 0.0, 1.0);
            }
            pop[i][j] = v;
        }
    }
    std::vector<double> fit(P);
    parallel_for(P, config.threads, [&](std::size_t i) { fit[i] = objective(pop[i]); });
    for (std::size_t i = 0; i < P; ++i) {
        if (!std::isfinite(fit[i])) {
            throw Error(ErrorKind::invalid_argument,
                "de_optimize: objective is not finite for initial member " + std::to_string(i));
        }
    }

    DEResult result;
    std::size_t best = argmin(fit);
    std::size_t stall = 0;
    result.history.push_back({ 0, fit[best], 0 });

    std::vector<std::vector<double>> trials(P);
    std::vector<double> trial_fit(P);
    for (std::size_t it = 1; it <= config.max_iters; ++it) {
        for (std::size_t i = 0; i < P; ++i) {
            std::size_t abc[3];
            pick_three(rng, P, i, abc);
            trials[i] = de_trial(pop[abc[0]], pop[abc[1]], pop[abc[2]], pop[best], config.F, config.cr, rng);
        }
        parallel_for(P, config.threads, [&](std::size_t i) { trial_fit[i] = objective(trials[i]); });

        const double previous = fit[best];
        for (std::size_t i = 0; i < P; ++i) {
            if (trial_fit[i] < fit[i]) {
                pop[i].swap(trials[i]);
                fit[i] = trial_fit[i];
            }
        }
        best = argmin(fit);
        stall = fit[best] < previous ? 0 : stall + 1;
        result.history.push_back({ it, fit[best], stall });
        if (config.stall_window > 0 && stall >= config.stall_window) {
            break;
        }
    }
    result.best = pop[best];
    result.best_fitness = fit[best];
    return result;
}

} // namespace hfit
