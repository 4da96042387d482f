#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hfit/data.hpp"
#include "hfit/de.hpp"
#include "hfit/model_io.hpp"
#include "hfit/mogp.hpp"

namespace hfit {

enum class DataSource { plant, mackey_glass, csv, box_jenkins };

struct DatasetSpec {
    DataSource source = DataSource::plant;

    // plant
    std::size_t plant_train = 200;
    std::size_t plant_test = 200;

    // mackey-glass
    double tau = 30.0;
    double x0 = 1.2;
    double step = 0.1;
    std::size_t k_start = 124;
    std::size_t k_end = 1123;
    double noise = 0.0; // std of Gaussian noise added to the series

    // csv and box-jenkins
    std::string path;
    std::vector<std::string> inputs; // empty: every column except the target
    std::string target;
    bool header = true;
    std::string u_column = "u";
    std::string y_column = "y";
};

struct RunConfig {
    FisKind kind = FisKind::type2;
    MembershipShape t1_shape = MembershipShape::bell;
    ObjectiveMode mode = ObjectiveMode::multi;
    GpConfig gp;  // tree kind, shape, mode and feature count are filled in per run
    DEConfig de;
    DatasetSpec data;
    std::string split = "auto"; // auto | none | holdout:<fraction> | fixed:<n> | kfold:<k>
    std::uint64_t seed = 1;
    std::size_t rounds = 1;
    std::size_t repetitions = 1;
    std::size_t threads = 1;
    std::filesystem::path output_dir = "hfit-run";
};

/// Canonical JSON (sorted keys, compact). Thread count and output directory are
/// left out because they do not affect any numeric result.
[[nodiscard]] std::string config_to_json(const RunConfig& config);

/// Parses and validates; unknown keys and bad values raise config_error naming
/// every offending field. Fields absent from the text keep their defaults.
[[nodiscard]] RunConfig config_from_json(const std::string& text, const RunConfig& base = {});

/// Throws config_error listing every invalid field.
void validate_config(const RunConfig& config);

/// 16 hex digits of FNV-1a over config_to_json.
[[nodiscard]] std::string config_hash(const RunConfig& config);

[[nodiscard]] SplitScheme parse_split(const std::string& text, const DatasetSpec& data, std::size_t n_patterns);

/// Seed of repetition r.
[[nodiscard]] std::uint64_t repetition_seed(std::uint64_t master, std::size_t repetition);

struct PreparedData {
    Dataset train; // inputs normalized with the training scaler
    Dataset test;
    bool separate_test = false;
};

/// Builds the dataset, splits it for the given repetition and normalizes
/// inputs with a scaler fitted on the training rows.
[[nodiscard]] PreparedData prepare_data(const RunConfig& config, std::uint64_t rep_seed, std::size_t repetition);

/// The raw (unnormalized) pattern set named by the spec.
[[nodiscard]] Dataset load_dataset(const DatasetSpec& spec, std::uint64_t rep_seed);

struct RepetitionResult {
    std::size_t repetition = 0;
    std::uint64_t seed = 0;
    Metrics train;
    Metrics test;
    std::size_t parameter_count = 0;
    std::set<std::size_t> features;
    double seconds = 0.0;
    Model model;
    ParetoArchive archive;
};

struct TrainSummary {
    std::vector<RepetitionResult> repetitions;
    std::size_t best = 0; // lowest training rmse
};

/// Two-phase training for every repetition; writes all artifacts under
/// config.output_dir. Progress lines go to `log` when given.
TrainSummary cmd_train(const RunConfig& config, std::ostream* log = nullptr);

enum class Part { all, train, test };

struct EvaluateOptions {
    std::optional<DatasetSpec> data; // default: the dataset recorded in the model
    Part part = Part::all;
    std::filesystem::path predictions; // empty: no export
};

[[nodiscard]] Metrics cmd_evaluate(const Model& model, const EvaluateOptions& options);

/// Final archive of the best repetition as rows (rmse, parameter_count, rank).
/// Returns the number of rows written.
std::size_t cmd_export_pareto(const std::filesystem::path& run_dir, const std::filesystem::path& out);

[[nodiscard]] std::string cmd_describe(const Model& model);

/// "{1..5}" style listing of 1-based feature numbers.
[[nodiscard]] std::string format_features(const std::set<std::size_t>& zero_based);

/// Re-reads report.csv and summary.csv of a run and checks that the summary
/// rows follow from the per-repetition rows. Returns a description of the
/// first mismatch, if any.
[[nodiscard]] std::optional<std::string> verify_report(const std::filesystem::path& run_dir);

/// Shortest round-trip text form of a double ("nan" for NaN).
[[nodiscard]] std::string format_double(double v);

} // namespace hfit
