#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hfit/matrix.hpp"
#include "hfit/rng.hpp"

namespace hfit {

/// Per-feature min/max of the training inputs plus the target range. Targets
/// are recorded but never rescaled.
struct Scaler {
    std::vector<double> min;
    std::vector<double> max;
    double target_min = 0.0;
    double target_max = 0.0;

    [[nodiscard]] bool empty() const noexcept { return min.empty(); }
    friend bool operator==(const Scaler&, const Scaler&) = default;
};

struct Dataset {
    Matrix inputs;
    std::vector<double> targets;
    std::vector<std::string> feature_names;
    Scaler scaler; // empty until normalize() has been applied

    [[nodiscard]] std::size_t size() const noexcept { return targets.size(); }
    [[nodiscard]] std::size_t features() const noexcept { return inputs.cols(); }
};

struct Metrics {
    double rmse = 0.0;
    double correlation = 0.0;
};

// --- benchmark generators --------------------------------------------------

/// Plant y(k+1) = y(k) / (1 + y(k)^2) + u(k)^3 driven by u(k) = sin(2 pi k / 100),
/// y(1) = 0. Patterns are (u(k), y(k)) -> y(k+1); training uses k = 1..n_train,
/// test the following n_test steps.
[[nodiscard]] std::pair<Dataset, Dataset> gen_plant(std::size_t n_train, std::size_t n_test);

/// Plant output sequence y(1), y(2), ..., y(n).
[[nodiscard]] std::vector<double> plant_series(std::size_t n);

/// Mackey-Glass delay equation integrated with classical RK4. The history is
/// x(t) = x0 for t <= 0; the result holds x(0), x(1), ..., x(k_end).
[[nodiscard]] std::vector<double> mackey_glass_series(double tau, double x0, std::size_t k_end, double step = 0.1);

/// Patterns [x(k-24), x(k-18), x(k-12), x(k-6)] -> x(k) for k in [k_start, k_end].
[[nodiscard]] Dataset mackey_glass_patterns(std::span<const double> series, std::size_t k_start, std::size_t k_end);

/// Series + patterns in one call (tau must exceed 17).
[[nodiscard]] Dataset gen_mackey_glass(double tau, double x0, std::size_t k_start, std::size_t k_end, double step = 0.1);

/// Gas-furnace style regressors: y(k) = f(y(k-1), u(k-4)).
[[nodiscard]] Dataset box_jenkins_patterns(std::span<const double> u, std::span<const double> y);

[[nodiscard]] std::vector<double> add_gaussian_noise(std::span<const double> series, double stddev, Rng& rng);

// --- CSV -------------------------------------------------------------------

struct CsvTable {
    std::vector<std::string> header; // empty when the file has none
    Matrix values;
};

/// Comma-delimited numeric text, optional header row, LF or CRLF. Blank lines
/// and lines starting with '#' are skipped.
[[nodiscard]] CsvTable read_csv(const std::filesystem::path& path, bool has_header);

/// Column selector: either a header name or a zero-based index as text.
[[nodiscard]] std::size_t resolve_column(const CsvTable& table, const std::string& column);

[[nodiscard]] Dataset load_csv(const std::filesystem::path& path, const std::vector<std::string>& input_columns,
    const std::string& target_column, bool has_header);

void write_csv(const std::filesystem::path& path, const Dataset& ds);

// --- preprocessing ---------------------------------------------------------

[[nodiscard]] Scaler fit_scaler(const Dataset& ds);

/// Min-max maps inputs into [0, 1] with the given scaler; values outside the
/// fitted range are clamped and constant features map to 0.5.
[[nodiscard]] Dataset apply_scaler(const Dataset& ds, const Scaler& scaler);

/// fit_scaler + apply_scaler.
[[nodiscard]] Dataset normalize(const Dataset& ds);

/// Inverse map of the input columns.
[[nodiscard]] Matrix denormalize_inputs(const Matrix& normalized, const Scaler& scaler);

struct Holdout {
    double train_fraction = 0.5;
};
struct FixedSplit {
    std::size_t n_train = 0;
};
struct KFold {
    std::size_t k = 10;
};
struct NoSplit {}; // train and test are the full set

using SplitScheme = std::variant<NoSplit, Holdout, FixedSplit, KFold>;

struct Partition {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// One partition for holdout/fixed/none, k for k-fold. Fixed keeps order.
[[nodiscard]] std::vector<Partition> split(std::size_t n, const SplitScheme& scheme, Rng& rng);

[[nodiscard]] Dataset subset(const Dataset& ds, std::span<const std::size_t> rows);

// --- metrics ---------------------------------------------------------------

[[nodiscard]] double rmse(std::span<const double> desired, std::span<const double> predicted);
[[nodiscard]] double correlation(std::span<const double> desired, std::span<const double> predicted);

} // namespace hfit
