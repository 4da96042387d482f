#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hfit/error.hpp"
#include "hfit/model_io.hpp"
#include "hfit/run.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;

// Command-line values that override the configuration file. Only options the
// user actually passed end up in the patch; apply() runs after parsing.
struct Overrides {
    json patch = json::object();
    std::vector<std::pair<CLI::Option*, std::function<void()>>> bound;

    template <typename T>
    CLI::Option* bind(CLI::App* app, const std::string& flag, std::vector<std::string> path, T& storage,
        const std::string& help)
    {
        auto* opt = app->add_option(flag, storage, help);
        bound.emplace_back(opt, [this, path, &storage] { set(path, storage); });
        return opt;
    }

    void on(CLI::Option* opt, std::function<void()> fn) { bound.emplace_back(opt, std::move(fn)); }

    void apply()
    {
        for (auto& [opt, fn] : bound) {
            if (opt->count() > 0) {
                fn();
            }
        }
    }

    template <typename T>
    void set(const std::vector<std::string>& path, const T& value)
    {
        json* node = &patch;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            node = &(*node)[path[i]];
        }
        (*node)[path.back()] = value;
    }
};

struct DataFlags {
    std::string source;
    std::string path;
    std::vector<std::string> inputs;
    std::string target;
    bool no_header = false;
    double tau = 0.0;
    double x0 = 0.0;
    double noise = 0.0;
    std::size_t k_start = 0;
    std::size_t k_end = 0;
    std::size_t plant_train = 0;
    std::size_t plant_test = 0;
    std::string u_column;
    std::string y_column;
};

void add_data_flags(CLI::App* app, Overrides& o, DataFlags& d)
{
    o.bind(app, "--data", { "data", "source" }, d.source, "plant | mackey-glass | csv | box-jenkins");
    o.bind(app, "--data-path", { "data", "path" }, d.path, "CSV file for csv and box-jenkins data");
    o.bind(app, "--inputs", { "data", "inputs" }, d.inputs, "Input columns (names or zero-based indices)")
        ->delimiter(',');
    o.bind(app, "--target", { "data", "target" }, d.target, "Target column");
    o.on(app->add_flag("--no-header", d.no_header, "CSV file has no header row"),
        [&o] { o.set({ "data", "header" }, false); });
    o.bind(app, "--tau", { "data", "tau" }, d.tau, "Mackey-Glass delay");
    o.bind(app, "--x0", { "data", "x0" }, d.x0, "Mackey-Glass initial value");
    o.bind(app, "--noise", { "data", "noise" }, d.noise, "Std of Gaussian noise added to the Mackey-Glass series");
    o.bind(app, "--k-start", { "data", "k_start" }, d.k_start, "First Mackey-Glass pattern index");
    o.bind(app, "--k-end", { "data", "k_end" }, d.k_end, "Last Mackey-Glass pattern index");
    o.bind(app, "--plant-train", { "data", "plant_train" }, d.plant_train, "Plant training patterns");
    o.bind(app, "--plant-test", { "data", "plant_test" }, d.plant_test, "Plant test patterns");
    o.bind(app, "--u-column", { "data", "u_column" }, d.u_column, "Box-Jenkins input column");
    o.bind(app, "--y-column", { "data", "y_column" }, d.y_column, "Box-Jenkins output column");
}

json merged(const std::string& base_text, const json& patch)
{
    json base = base_text.empty() ? json::object() : json::parse(base_text);
    base.merge_patch(patch);
    return base;
}

int fail(const hfit::Error& e)
{
    std::cerr << "error: " << e.what() << "\n";
    return hfit::exit_code(e.kind());
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app { "Hierarchical fuzzy inference trees: structure search by multiobjective GP, parameter tuning "
                   "by differential evolution." };
    app.require_subcommand(1);

    // train
    auto* train = app.add_subcommand("train", "Run the two-phase training loop");
    Overrides train_o;
    std::string config_file;
    bool print_config = false;
    bool quiet = false;
    std::string fis_kind, shape, mode, split, output;
    std::uint64_t seed = 0;
    std::size_t rounds = 0, reps = 0, threads = 0;
    std::size_t gp_pop = 0, gp_pool = 0, gp_iters = 0, max_depth = 0, max_inputs = 0;
    double gp_pc = 0.0, gp_pm = 0.0, p_terminal = 0.0;
    std::size_t de_pop = 0, de_iters = 0, de_stall = 0;
    double de_f = 0.0, de_cr = 0.0;
    DataFlags train_data;
    train->add_option("--config", config_file, "JSON configuration file; flags override its values")
        ->check(CLI::ExistingFile);
    train_o.bind(train, "--fis-kind", { "fis_kind" }, fis_kind, "type1 | type2");
    train_o.bind(train, "--shape", { "membership_shape" }, shape, "Type-1 membership shape: bell | gaussian");
    train_o.bind(train, "--mode", { "objective_mode" }, mode, "multi (Pareto ranking) | single (rmse ranking)");
    train_o.bind(train, "--seed", { "seed" }, seed, "Master seed");
    train_o.bind(train, "--rounds", { "rounds" }, rounds, "Structure+parameter rounds per repetition");
    train_o.bind(train, "--repetitions", { "repetitions" }, reps, "Independent repetitions");
    train_o.bind(train, "--threads", { "threads" }, threads, "Worker threads for fitness evaluation");
    train_o.bind(train, "-o,--output", { "output_dir" }, output, "Output directory");
    train_o.bind(train, "--split", { "split" }, split, "auto | none | holdout:<f> | fixed:<n> | kfold:<k>");
    train_o.bind(train, "--gp-population", { "gp", "population" }, gp_pop, "GP population size");
    train_o.bind(train, "--gp-pool", { "gp", "mating_pool" }, gp_pool, "GP mating pool size");
    train_o.bind(train, "--gp-iterations", { "gp", "iterations" }, gp_iters, "GP generations");
    train_o.bind(train, "--gp-crossover", { "gp", "crossover_probability" }, gp_pc, "GP crossover probability");
    train_o.bind(train, "--gp-mutation", { "gp", "mutation_probability" }, gp_pm,
        "GP mutation probability (must equal 1 - crossover)");
    train_o.bind(train, "--max-depth", { "gp", "max_depth" }, max_depth, "Maximum tree depth in node layers");
    train_o.bind(train, "--max-inputs", { "gp", "max_inputs" }, max_inputs, "Maximum inputs per node");
    train_o.bind(train, "--p-terminal", { "gp", "p_terminal" }, p_terminal, "Probability of a terminal when growing");
    train_o.bind(train, "--de-population", { "de", "pop_size" }, de_pop, "DE population size");
    train_o.bind(train, "--de-F", { "de", "F" }, de_f, "DE mutation factor");
    train_o.bind(train, "--de-cr", { "de", "cr" }, de_cr, "DE crossover rate");
    train_o.bind(train, "--de-iterations", { "de", "max_iters" }, de_iters, "DE iterations");
    train_o.bind(train, "--de-stall", { "de", "stall_window" }, de_stall, "Stop DE after this many idle iterations");
    add_data_flags(train, train_o, train_data);
    train->add_flag("--print-config", print_config, "Print the resolved configuration and exit");
    train->add_flag("-q,--quiet", quiet, "No progress output");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Apply a model to a dataset");
    Overrides eval_o;
    std::string model_path, part = "all", predictions;
    DataFlags eval_data;
    evaluate->add_option("model", model_path, "Model file")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--part", part, "all | train | test rows of the split recorded in the model")
        ->check(CLI::IsMember({ "all", "train", "test" }));
    evaluate->add_option("--predictions", predictions, "Write index,target,prediction rows here");
    add_data_flags(evaluate, eval_o, eval_data);

    // export-pareto
    auto* pareto = app.add_subcommand("export-pareto", "Export the final Pareto front of a run");
    std::string run_dir, pareto_out;
    pareto->add_option("run_dir", run_dir, "Training output directory")->required()->check(CLI::ExistingDirectory);
    pareto->add_option("-o,--output", pareto_out, "Output file (default <run_dir>/pareto_front.csv)");

    // describe
    auto* describe = app.add_subcommand("describe", "Summarize a model");
    std::string describe_path;
    describe->add_option("model", describe_path, "Model file")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    train_o.apply();
    eval_o.apply();
    try {
        if (*train) {
            const std::string base = config_file.empty() ? std::string() : hfit::read_text(config_file);
            json cfg_json;
            try {
                cfg_json = merged(base, train_o.patch);
            } catch (const json::parse_error& e) {
                throw hfit::Error(hfit::ErrorKind::config_error,
                    config_file + ": malformed JSON at byte " + std::to_string(e.byte));
            }
            const auto config = hfit::config_from_json(cfg_json.dump());
            if (print_config) {
                std::cout << json::parse(hfit::config_to_json(config)).dump(1, '\t') << "\n";
                return 0;
            }
            const auto summary = hfit::cmd_train(config, quiet ? nullptr : &std::cerr);
            const auto& best = summary.repetitions[summary.best];
            std::cout << "best repetition " << best.repetition << ": train rmse " << hfit::format_double(best.train.rmse)
                      << ", test rmse " << hfit::format_double(best.test.rmse) << ", " << best.parameter_count
                      << " parameters\n"
                      << "artifacts in " << config.output_dir.string() << "\n";
        } else if (*evaluate) {
            const auto model = hfit::load_model(model_path);
            hfit::EvaluateOptions opts;
            opts.part = part == "train" ? hfit::Part::train : part == "test" ? hfit::Part::test : hfit::Part::all;
            opts.predictions = predictions;
            if (eval_o.patch.contains("data")) {
                const json patch = { { "data", eval_o.patch["data"] } };
                opts.data = hfit::config_from_json(merged(model.config_json, patch).dump()).data;
            }
            const auto m = hfit::cmd_evaluate(model, opts);
            std::cout << "rmse " << hfit::format_double(m.rmse) << "\ncorrelation " << hfit::format_double(m.correlation)
                      << "\n";
        } else if (*pareto) {
            const std::filesystem::path out
                = pareto_out.empty() ? std::filesystem::path(run_dir) / "pareto_front.csv" : std::filesystem::path(pareto_out);
            const auto rows = hfit::cmd_export_pareto(run_dir, out);
            std::cout << rows << " rows written to " << out.string() << "\n";
        } else if (*describe) {
            std::cout << hfit::cmd_describe(hfit::load_model(describe_path));
        }
    } catch (const hfit::Error& e) {
        return fail(e);
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(hfit::Error(hfit::ErrorKind::file_not_found, e.what()));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
