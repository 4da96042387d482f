#include "hfit/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "hfit/error.hpp"

namespace hfit {

namespace {

double mackey_glass_rate(double x, double delayed)
{
    return 0.2 * delayed / (1.0 + std::pow(delayed, 10)) - 0.1 * x;
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string> split_fields(std::string_view line)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

bool parse_double(std::string_view s, double& out)
{
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    if (s.empty()) {
        return false;
    }
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
};

RawTable read_raw(const std::filesystem::path& path, bool has_header)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::file_not_found, "cannot open '" + path.string() + "'");
    }
    RawTable table;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    bool header_pending = has_header;
    while (std::getline(in, line)) {
        ++line_no;
        const auto view = trim(line);
        if (view.empty() || view.front() == '#') {
            continue;
        }
        auto fields = split_fields(view);
        if (header_pending) {
            table.header = std::move(fields);
            width = table.header.size();
            header_pending = false;
            continue;
        }
        if (width == 0) {
            width = fields.size();
        }
        if (fields.size() != width) {
            throw Error(ErrorKind::ragged_row, path.string() + ":" + std::to_string(line_no) + ": expected "
                    + std::to_string(width) + " fields, found " + std::to_string(fields.size()));
        }
        table.rows.push_back(std::move(fields));
        table.line_numbers.push_back(line_no);
    }
    return table;
}

std::size_t resolve(const std::vector<std::string>& header, std::size_t width, const std::string& column)
{
    const auto it = std::find(header.begin(), header.end(), column);
    if (it != header.end()) {
        return static_cast<std::size_t>(it - header.begin());
    }
    std::size_t idx = 0;
    const auto res = std::from_chars(column.data(), column.data() + column.size(), idx);
    if (res.ec != std::errc() || res.ptr != column.data() + column.size() || idx >= width) {
        throw Error(ErrorKind::invalid_argument, "unknown column '" + column + "'");
    }
    return idx;
}

} // namespace

std::vector<double> plant_series(std::size_t n)
{
    std::vector<double> y(n);
    if (n == 0) {
        return y;
    }
    y[0] = 0.0; // y(1)
    for (std::size_t i = 1; i < n; ++i) {
        const double k = static_cast<double>(i); // y[i] = y(k + 1), driven by u(k)
        const double u = std::sin(2.0 * std::numbers::pi * k / 100.0);
        y[i] = y[i - 1] / (1.0 + y[i - 1] * y[i - 1]) + u * u * u;
    }
    return y;
}

std::pair<Dataset, Dataset> gen_plant(std::size_t n_train, std::size_t n_test)
{
    if (n_train < 1 || n_test < 1) {
        throw Error(ErrorKind::invalid_argument, "gen_plant: need at least one training and one test pattern");
    }
    const std::size_t n = n_train + n_test;
    const auto y = plant_series(n + 1);
    auto make = [&](std::size_t k_first, std::size_t k_last) {
        Dataset ds;
        ds.feature_names = { "u(k)", "y(k)" };
        for (std::size_t k = k_first; k <= k_last; ++k) {
            const double u = std::sin(2.0 * std::numbers::pi * static_cast<double>(k) / 100.0);
            const double row[] = { u, y[k - 1] };
            ds.inputs.append_row(row);
            ds.targets.push_back(y[k]);
        }
        return ds;
    };
    return { make(1, n_train), make(n_train + 1, n) };
}

std::vector<double> mackey_glass_series(double tau, double x0, std::size_t k_end, double step)
{
    if (!(tau > step) || !(step > 0.0)) {
        throw Error(ErrorKind::invalid_argument, "mackey_glass_series: need tau > step > 0");
    }
    const auto per_unit = static_cast<std::size_t>(std::lround(1.0 / step));
    if (std::abs(static_cast<double>(per_unit) * step - 1.0) > 1e-9) {
        throw Error(ErrorKind::invalid_argument, "mackey_glass_series: 1/step must be an integer");
    }
    const std::size_t steps = k_end * per_unit;
    std::vector<double> x(steps + 1);
    std::vector<double> rate(steps + 1);

    // x(s) for s <= t_now, from the grid by cubic Hermite interpolation. The
    // constant pre-history is handled separately so the kink at s = 0 never
    // sits inside an interpolation interval.
    auto delayed = [&](double s) {
        if (s <= 0.0) {
            return x0;
        }
        const double pos = s / step;
        auto i = static_cast<std::size_t>(pos);
        if (i >= steps) {
            i = steps - 1;
        }
        const double theta = pos - static_cast<double>(i);
        if (theta == 0.0) {
            return x[i];
        }
        const double t2 = theta * theta;
        const double t3 = t2 * theta;
        return (2 * t3 - 3 * t2 + 1) * x[i] + (t3 - 2 * t2 + theta) * step * rate[i] + (-2 * t3 + 3 * t2) * x[i + 1]
            + (t3 - t2) * step * rate[i + 1];
    };

    x[0] = x0;
    rate[0] = mackey_glass_rate(x0, x0);
    for (std::size_t n = 0; n < steps; ++n) {
        const double t = static_cast<double>(n) * step;
        const double xn = x[n];
        const double k1 = rate[n];
        const double mid = delayed(t + 0.5 * step - tau);
        const double k2 = mackey_glass_rate(xn + 0.5 * step * k1, mid);
        const double k3 = mackey_glass_rate(xn + 0.5 * step * k2, mid);
        const double end = delayed(t + step - tau);
        const double k4 = mackey_glass_rate(xn + step * k3, end);
        x[n + 1] = xn + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        rate[n + 1] = mackey_glass_rate(x[n + 1], end);
    }

    std::vector<double> out(k_end + 1);
    for (std::size_t k = 0; k <= k_end; ++k) {
        out[k] = x[k * per_unit];
    }
    return out;
}

Dataset mackey_glass_patterns(std::span<const double> series, std::size_t k_start, std::size_t k_end)
{
    if (k_start < 24 || k_end < k_start || k_end >= series.size()) {
        throw Error(ErrorKind::invalid_argument, "mackey_glass_patterns: pattern range outside the series");
    }
    Dataset ds;
    ds.feature_names = { "x(k-24)", "x(k-18)", "x(k-12)", "x(k-6)" };
    for (std::size_t k = k_start; k <= k_end; ++k) {
        const double row[] = { series[k - 24], series[k - 18], series[k - 12], series[k - 6] };
        ds.inputs.append_row(row);
        ds.targets.push_back(series[k]);
    }
    return ds;
}

Dataset gen_mackey_glass(double tau, double x0, std::size_t k_start, std::size_t k_end, double step)
{
    if (!(tau > 17.0)) {
        throw Error(ErrorKind::invalid_argument, "gen_mackey_glass: tau must exceed 17 for the chaotic regime");
    }
    if (k_end <= k_start) {
        throw Error(ErrorKind::invalid_argument, "gen_mackey_glass: k_end must exceed k_start");
    }
    const auto series = mackey_glass_series(tau, x0, k_end, step);
    return mackey_glass_patterns(series, k_start, k_end);
}

Dataset box_jenkins_patterns(std::span<const double> u, std::span<const double> y)
{
    if (u.size() != y.size()) {
        throw Error(ErrorKind::length_mismatch, "box_jenkins_patterns: u and y differ in length");
    }
    if (u.size() < 5) {
        throw Error(ErrorKind::invalid_argument, "box_jenkins_patterns: series too short");
    }
    Dataset ds;
    ds.feature_names = { "y(k-1)", "u(k-4)" };
    for (std::size_t k = 4; k < y.size(); ++k) {
        const double row[] = { y[k - 1], u[k - 4] };
        ds.inputs.append_row(row);
        ds.targets.push_back(y[k]);
    }
    return ds;
}

std::vector<double> add_gaussian_noise(std::span<const double> series, double stddev, Rng& rng)
{
    if (!(stddev >= 0.0)) {
        throw Error(ErrorKind::invalid_argument, "add_gaussian_noise: stddev must be >= 0");
    }
    std::vector<double> out(series.begin(), series.end());
    if (stddev == 0.0) {
        return out;
    }
    std::normal_distribution<double> noise(0.0, stddev);
    for (auto& v : out) {
        v += noise(rng);
    }
    return out;
}

CsvTable read_csv(const std::filesystem::path& path, bool has_header)
{
    auto raw = read_raw(path, has_header);
    CsvTable table;
    table.header = std::move(raw.header);
    for (std::size_t r = 0; r < raw.rows.size(); ++r) {
        std::vector<double> row(raw.rows[r].size());
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (!parse_double(raw.rows[r][c], row[c])) {
                throw Error(ErrorKind::non_numeric, path.string() + ":" + std::to_string(raw.line_numbers[r])
                        + ": non-numeric value '" + raw.rows[r][c] + "' in column " + std::to_string(c));
            }
        }
        table.values.append_row(row);
    }
    return table;
}

std::size_t resolve_column(const CsvTable& table, const std::string& column)
{
    return resolve(table.header, table.values.cols(), column);
}

Dataset load_csv(const std::filesystem::path& path, const std::vector<std::string>& input_columns,
    const std::string& target_column, bool has_header)
{
    const auto raw = read_raw(path, has_header);
    if (raw.rows.empty()) {
        throw Error(ErrorKind::invalid_argument, "'" + path.string() + "' has no data rows");
    }
    const std::size_t width = raw.rows.front().size();
    std::vector<std::size_t> cols;
    for (const auto& c : input_columns) {
        cols.push_back(resolve(raw.header, width, c));
    }
    const std::size_t target = resolve(raw.header, width, target_column);
    if (cols.empty()) {
        for (std::size_t c = 0; c < width; ++c) {
            if (c != target) {
                cols.push_back(c);
            }
        }
    }

    Dataset ds;
    for (auto c : cols) {
        ds.feature_names.push_back(raw.header.empty() ? "x" + std::to_string(c + 1) : raw.header[c]);
    }
    std::vector<double> row(cols.size());
    for (std::size_t r = 0; r < raw.rows.size(); ++r) {
        const auto where = path.string() + ":" + std::to_string(raw.line_numbers[r]);
        double t = 0.0;
        if (!parse_double(raw.rows[r][target], t)) {
            throw Error(ErrorKind::non_numeric, where + ": non-numeric target '" + raw.rows[r][target] + "'");
        }
        for (std::size_t j = 0; j < cols.size(); ++j) {
            if (!parse_double(raw.rows[r][cols[j]], row[j])) {
                throw Error(ErrorKind::non_numeric, where + ": non-numeric value '" + raw.rows[r][cols[j]] + "'");
            }
        }
        ds.inputs.append_row(row);
        ds.targets.push_back(t);
    }
    return ds;
}

void write_csv(const std::filesystem::path& path, const Dataset& ds)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::file_not_found, "cannot write '" + path.string() + "'");
    }
    out.precision(17);
    for (std::size_t j = 0; j < ds.features(); ++j) {
        out << (j < ds.feature_names.size() ? ds.feature_names[j] : "x" + std::to_string(j + 1)) << ',';
    }
    out << "target\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (double v : ds.inputs.row(i)) {
            out << v << ',';
        }
        out << ds.targets[i] << '\n';
    }
}

Scaler fit_scaler(const Dataset& ds)
{
    if (ds.size() == 0 || ds.features() == 0) {
        throw Error(ErrorKind::invalid_argument, "normalize: empty dataset");
    }
    Scaler s;
    s.min.assign(ds.features(), 0.0);
    s.max.assign(ds.features(), 0.0);
    for (std::size_t j = 0; j < ds.features(); ++j) {
        s.min[j] = s.max[j] = ds.inputs(0, j);
        for (std::size_t i = 1; i < ds.size(); ++i) {
            s.min[j] = std::min(s.min[j], ds.inputs(i, j));
            s.max[j] = std::max(s.max[j], ds.inputs(i, j));
        }
    }
    const auto [lo, hi] = std::minmax_element(ds.targets.begin(), ds.targets.end());
    s.target_min = *lo;
    s.target_max = *hi;
    return s;
}

Dataset apply_scaler(const Dataset& ds, const Scaler& scaler)
{
    if (scaler.min.size() != ds.features()) {
        throw Error(ErrorKind::feature_mismatch, "normalize: scaler has " + std::to_string(scaler.min.size())
                + " features, dataset has " + std::to_string(ds.features()));
    }
    Dataset out = ds;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < ds.features(); ++j) {
            const double range = scaler.max[j] - scaler.min[j];
            double v = 0.5;
            if (range > 0.0) {
                v = std::clamp((ds.inputs(i, j) - scaler.min[j]) / range, 0.0, 1.0);
            }
            out.inputs(i, j) = v;
        }
    }
    out.scaler = scaler;
    return out;
}

Dataset normalize(const Dataset& ds) { return apply_scaler(ds, fit_scaler(ds)); }

Matrix denormalize_inputs(const Matrix& normalized, const Scaler& scaler)
{
    Matrix out = normalized;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        for (std::size_t j = 0; j < out.cols(); ++j) {
            out(i, j) = scaler.min[j] + normalized(i, j) * (scaler.max[j] - scaler.min[j]);
        }
    }
    return out;
}

std::vector<Partition> split(std::size_t n, const SplitScheme& scheme, Rng& rng)
{
    if (n == 0) {
        throw Error(ErrorKind::invalid_argument, "split: empty dataset");
    }
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t { 0 });
    auto shuffle = [&] {
        for (std::size_t i = n; i > 1; --i) {
            std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
        }
    };

    return std::visit(
        [&](const auto& s) -> std::vector<Partition> {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, NoSplit>) {
                return { Partition { idx, idx } };
            } else if constexpr (std::is_same_v<T, FixedSplit>) {
                if (s.n_train < 1 || s.n_train >= n) {
                    throw Error(ErrorKind::invalid_argument,
                        "split: fixed(" + std::to_string(s.n_train) + ") infeasible for " + std::to_string(n) + " rows");
                }
                return { Partition { { idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(s.n_train) },
                    { idx.begin() + static_cast<std::ptrdiff_t>(s.n_train), idx.end() } } };
            } else if constexpr (std::is_same_v<T, Holdout>) {
                const auto n_train = static_cast<std::size_t>(std::llround(s.train_fraction * static_cast<double>(n)));
                if (!(s.train_fraction > 0.0 && s.train_fraction < 1.0) || n_train < 1 || n_train >= n) {
                    throw Error(ErrorKind::invalid_argument, "split: holdout fraction infeasible");
                }
                shuffle();
                Partition p { { idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train) },
                    { idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end() } };
                std::sort(p.train.begin(), p.train.end());
                std::sort(p.test.begin(), p.test.end());
                return { std::move(p) };
            } else {
                if (s.k < 2 || s.k > n) {
                    throw Error(ErrorKind::invalid_argument, "split: kfold(" + std::to_string(s.k) + ") infeasible");
                }
                shuffle();
                std::vector<Partition> folds(s.k);
                for (std::size_t f = 0; f < s.k; ++f) {
                    const std::size_t lo = f * n / s.k;
                    const std::size_t hi = (f + 1) * n / s.k;
                    for (std::size_t i = 0; i < n; ++i) {
                        (i >= lo && i < hi ? folds[f].test : folds[f].train).push_back(idx[i]);
                    }
                    std::sort(folds[f].train.begin(), folds[f].train.end());
                    std::sort(folds[f].test.begin(), folds[f].test.end());
                }
                return folds;
            }
        },
        scheme);
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> rows)
{
    Dataset out;
    out.feature_names = ds.feature_names;
    out.scaler = ds.scaler;
    out.inputs = Matrix(0, ds.features());
    for (auto r : rows) {
        out.inputs.append_row(ds.inputs.row(r));
        out.targets.push_back(ds.targets[r]);
    }
    return out;
}

double rmse(std::span<const double> desired, std::span<const double> predicted)
{
    if (desired.size() != predicted.size() || desired.empty()) {
        throw Error(ErrorKind::length_mismatch, "rmse: vectors must have equal nonzero length");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < desired.size(); ++i) {
        const double e = desired[i] - predicted[i];
        sum += e * e;
    }
    return std::sqrt(sum / static_cast<double>(desired.size()));
}

double correlation(std::span<const double> desired, std::span<const double> predicted)
{
    if (desired.size() != predicted.size() || desired.size() < 2) {
        throw Error(ErrorKind::length_mismatch, "correlation: vectors must have equal length >= 2");
    }
    const auto n = static_cast<double>(desired.size());
    const double md = std::accumulate(desired.begin(), desired.end(), 0.0) / n;
    const double my = std::accumulate(predicted.begin(), predicted.end(), 0.0) / n;
    double sdy = 0.0;
    double sdd = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < desired.size(); ++i) {
        const double a = desired[i] - md;
        const double b = predicted[i] - my;
        sdy += a * b;
        sdd += a * a;
        syy += b * b;
    }
    if (sdd == 0.0 || syy == 0.0) {
        throw Error(ErrorKind::degenerate, "correlation: undefined for a constant vector");
    }
    return std::clamp(sdy / std::sqrt(sdd * syy), -1.0, 1.0);
}

} // namespace hfit
