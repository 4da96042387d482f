#include "hfit/run.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "hfit/error.hpp"
#include "json.hpp"

namespace hfit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Independent random streams of one repetition.
constexpr std::uint64_t stream_noise = 1;
constexpr std::uint64_t stream_split = 2;
constexpr std::uint64_t stream_search = 3;

const std::map<std::string, MutationOp> mutation_names {
    { "replace_terminal", MutationOp::replace_terminal },
    { "replace_terminals", MutationOp::replace_terminals },
    { "replace_node", MutationOp::replace_node },
    { "grow_terminal", MutationOp::grow_terminal },
    { "delete_element", MutationOp::delete_element },
};

std::string mutation_name(MutationOp op)
{
    for (const auto& [name, value] : mutation_names) {
        if (value == op) {
            return name;
        }
    }
    return "?";
}

const char* source_name(DataSource s)
{
    switch (s) {
    case DataSource::plant:
        return "plant";
    case DataSource::mackey_glass:
        return "mackey-glass";
    case DataSource::csv:
        return "csv";
    case DataSource::box_jenkins:
        return "box-jenkins";
    }
    return "?";
}

json config_object(const RunConfig& c)
{
    json ops = json::array();
    for (auto op : c.gp.mutation_ops) {
        ops.push_back(mutation_name(op));
    }
    const auto& d = c.data;
    return {
        { "fis_kind", c.kind == FisKind::type1 ? "type1" : "type2" },
        { "membership_shape", c.t1_shape == MembershipShape::bell ? "bell" : "gaussian" },
        { "objective_mode", c.mode == ObjectiveMode::multi ? "multi" : "single" },
        { "seed", c.seed },
        { "rounds", c.rounds },
        { "repetitions", c.repetitions },
        { "split", c.split },
        { "gp",
            { { "population", c.gp.population }, { "mating_pool", c.gp.mating_pool },
                { "iterations", c.gp.iterations }, { "crossover_probability", c.gp.crossover_probability },
                { "max_depth", c.gp.tree.limits.max_depth }, { "max_inputs", c.gp.tree.limits.max_inputs },
                { "p_terminal", c.gp.tree.p_terminal }, { "mutation_ops", ops } } },
        { "de",
            { { "pop_size", c.de.pop_size }, { "F", c.de.F }, { "cr", c.de.cr }, { "max_iters", c.de.max_iters },
                { "stall_window", c.de.stall_window }, { "init_spread", c.de.init_spread } } },
        { "data",
            { { "source", source_name(d.source) }, { "plant_train", d.plant_train }, { "plant_test", d.plant_test },
                { "tau", d.tau }, { "x0", d.x0 }, { "step", d.step }, { "k_start", d.k_start },
                { "k_end", d.k_end }, { "noise", d.noise }, { "path", d.path }, { "inputs", d.inputs },
                { "target", d.target }, { "header", d.header }, { "u_column", d.u_column },
                { "y_column", d.y_column } } },
    };
}

// Walks a JSON object, assigning known fields and collecting every problem.
class ConfigReader {
public:
    std::vector<std::string> errors;

    void object(const json& j, const std::string& prefix,
        const std::map<std::string, std::function<void(const json&, const std::string&)>>& fields)
    {
        if (!j.is_object()) {
            errors.push_back("'" + prefix + "' must be an object");
            return;
        }
        for (const auto& [key, value] : j.items()) {
            const std::string name = prefix.empty() ? key : prefix + "." + key;
            const auto it = fields.find(key);
            if (it == fields.end()) {
                errors.push_back("unknown field '" + name + "'");
                continue;
            }
            it->second(value, name);
        }
    }

    auto count(std::size_t& out)
    {
        return [this, &out](const json& v, const std::string& name) {
            if (v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
                out = v.get<std::size_t>();
            } else {
                errors.push_back("'" + name + "' must be a non-negative integer");
            }
        };
    }

    auto seed(std::uint64_t& out)
    {
        return [this, &out](const json& v, const std::string& name) {
            if (v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
                out = v.get<std::uint64_t>();
            } else {
                errors.push_back("'" + name + "' must be a non-negative integer");
            }
        };
    }

    auto real(double& out)
    {
        return [this, &out](const json& v, const std::string& name) {
            if (v.is_number()) {
                out = v.get<double>();
            } else {
                errors.push_back("'" + name + "' must be a number");
            }
        };
    }

    auto flag(bool& out)
    {
        return [this, &out](const json& v, const std::string& name) {
            if (v.is_boolean()) {
                out = v.get<bool>();
            } else {
                errors.push_back("'" + name + "' must be true or false");
            }
        };
    }

    auto text(std::string& out)
    {
        return [this, &out](const json& v, const std::string& name) {
            if (v.is_string()) {
                out = v.get<std::string>();
            } else {
                errors.push_back("'" + name + "' must be a string");
            }
        };
    }

    auto texts(std::vector<std::string>& out)
    {
        return [this, &out](const json& v, const std::string& name) {
            if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_string(); })) {
                errors.push_back("'" + name + "' must be an array of strings");
                return;
            }
            out = v.get<std::vector<std::string>>();
        };
    }

    template <typename E>
    auto choice(E& out, std::map<std::string, E> options)
    {
        return [this, &out, options = std::move(options)](const json& v, const std::string& name) {
            const auto it = v.is_string() ? options.find(v.get<std::string>()) : options.end();
            if (it != options.end()) {
                out = it->second;
                return;
            }
            std::string allowed;
            for (const auto& [k, unused] : options) {
                allowed += (allowed.empty() ? "" : ", ") + k;
            }
            errors.push_back("'" + name + "' must be one of: " + allowed);
        };
    }
};

std::string hex64(std::uint64_t v)
{
    char buf[17];
    const auto res = std::to_chars(buf, buf + 16, v, 16);
    std::string s(buf, res.ptr);
    return std::string(16 - s.size(), '0') + s;
}

std::string provenance(const std::string& hash, std::uint64_t seed)
{
    return "# config_hash=" + hash + "\n# seed=" + std::to_string(seed) + "\n";
}

std::string rep_dir_name(std::size_t r)
{
    std::string s = std::to_string(r);
    return "rep_" + std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

Metrics metrics(std::span<const double> desired, std::span<const double> predicted)
{
    Metrics m;
    m.rmse = rmse(desired, predicted);
    try {
        m.correlation = correlation(desired, predicted);
    } catch (const Error&) {
        m.correlation = std::numeric_limits<double>::quiet_NaN();
    }
    return m;
}

struct Stats {
    double best = 0.0;
    double mean = 0.0;
    double std = 0.0;
};

// Sample standard deviation (n - 1); zero for a single value.
Stats stats(std::span<const double> v, bool lower_is_better)
{
    Stats s;
    if (v.empty()) {
        return s;
    }
    s.best = lower_is_better ? *std::min_element(v.begin(), v.end()) : *std::max_element(v.begin(), v.end());
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) {
            ss += (x - s.mean) * (x - s.mean);
        }
        s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return s;
}

std::vector<std::string> split_commas(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

// Data rows of one of our own CSV exports (comments and header dropped).
std::vector<std::vector<std::string>> rows_from_text(const std::string& text)
{
    std::istringstream in(text);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') {
            continue;
        }
        if (header) {
            header = false;
            continue;
        }
        rows.push_back(split_commas(line));
    }
    return rows;
}

std::vector<std::vector<std::string>> read_rows(const fs::path& path) { return rows_from_text(read_text(path)); }

double to_double(const std::string& s, const fs::path& where)
{
    if (s == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (s == "inf" || s == "-inf") {
        return s == "inf" ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    }
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw Error(ErrorKind::parse_error, where.string() + ": bad number '" + s + "'");
    }
    return v;
}

std::string summary_csv(const std::vector<RepetitionResult>& reps)
{
    std::vector<double> en, rn, et, rt, cw;
    for (const auto& r : reps) {
        en.push_back(r.train.rmse);
        rn.push_back(r.train.correlation);
        et.push_back(r.test.rmse);
        rt.push_back(r.test.correlation);
        cw.push_back(static_cast<double>(r.parameter_count));
    }
    const Stats s[] = { stats(en, true), stats(rn, false), stats(et, true), stats(rt, false), stats(cw, true) };
    std::string out = "statistic,E_n,r_n,E_t,r_t,c_w\n";
    const char* names[] = { "best", "mean", "std" };
    for (int k = 0; k < 3; ++k) {
        out += names[k];
        for (const auto& st : s) {
            out += "," + format_double(k == 0 ? st.best : k == 1 ? st.mean : st.std);
        }
        out += "\n";
    }
    return out;
}

void check_features(const Model& model, const Dataset& ds)
{
    if (ds.features() == model.n_features) {
        return;
    }
    std::string names;
    for (std::size_t j = 0; j < model.n_features; ++j) {
        names += (j ? ", " : "") + (j < model.feature_names.size() ? model.feature_names[j] : "x" + std::to_string(j + 1));
    }
    throw Error(ErrorKind::feature_mismatch, "model expects " + std::to_string(model.n_features) + " features ("
            + names + "), dataset has " + std::to_string(ds.features()));
}

std::vector<std::size_t> part_rows(const RunConfig& cfg, const DatasetSpec& spec, std::size_t n, std::uint64_t seed,
    std::size_t repetition, Part part)
{
    if (part == Part::all) {
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), std::size_t { 0 });
        return all;
    }
    Rng rng(mix_seed(seed, stream_split));
    const auto parts = split(n, parse_split(cfg.split, spec, n), rng);
    const auto& p = parts[repetition % parts.size()];
    return part == Part::train ? p.train : p.test;
}

RepetitionResult run_repetition(
    const RunConfig& cfg, std::size_t rep, const std::string& hash, const fs::path& dir, std::ostream* log)
{
    const auto start = std::chrono::steady_clock::now();
    RepetitionResult result;
    result.repetition = rep;
    result.seed = repetition_seed(cfg.seed, rep);
    const auto data = prepare_data(cfg, result.seed, rep);
    const Dataset& train = data.train;

    GpConfig gp = cfg.gp;
    gp.tree.kind = cfg.kind;
    gp.tree.t1_shape = cfg.t1_shape;
    gp.tree.limits.n_features = train.features();
    gp.mode = cfg.mode;
    gp.threads = cfg.threads;
    DEConfig de = cfg.de;
    de.threads = cfg.threads;

    Rng rng(mix_seed(result.seed, stream_search));
    std::ostringstream gp_log;
    std::ostringstream de_log;
    gp_log << provenance(hash, cfg.seed) << "# repetition=" << rep << "\n"
           << "round,generation,best_rmse,best_complexity,front_size,hypervolume\n";
    de_log << provenance(hash, cfg.seed) << "# repetition=" << rep << "\n" << "round,iteration,best_rmse,stall\n";

    std::optional<FuzzyTree> best_tree;
    double best_rmse = std::numeric_limits<double>::infinity();
    for (std::size_t round = 0; round < cfg.rounds; ++round) {
        auto search = evolve_structure(train, gp, rng, [&](const GenerationRecord& g) {
            gp_log << round << ',' << g.generation << ',' << format_double(g.best_rmse) << ',' << g.best_complexity
                   << ',' << g.front_size << ',' << format_double(g.hypervolume) << '\n';
        });
        const FuzzyTree& chosen = pick_best(search.archive).tree;
        FuzzyTree tuned = chosen;
        if (de.max_iters > 0) {
            const CompiledTree compiled(chosen);
            const auto objective = [&](std::span<const double> p) {
                return compiled.rmse(p, train.inputs, train.targets);
            };
            const auto res = de_optimize(objective, flatten_parameters(chosen), de, rng, membership_mask(chosen));
            for (const auto& h : res.history) {
                de_log << round << ',' << h.iteration << ',' << format_double(h.best_fitness) << ',' << h.stall << '\n';
            }
            tuned = load_parameters(chosen, res.best);
        }
        const double e = CompiledTree(tuned).rmse(flatten_parameters(tuned), train.inputs, train.targets);
        if (log) {
            *log << "repetition " << rep << " round " << round << ": structure rmse "
                 << format_double(pick_best(search.archive).objectives.rmse) << ", tuned rmse " << format_double(e)
                 << ", " << parameter_count(tuned) << " parameters\n";
        }
        if (!best_tree || e < best_rmse) {
            best_tree = std::move(tuned);
            best_rmse = e;
            result.archive = std::move(search.archive);
        }
    }

    Model& model = result.model;
    model.tree = std::move(*best_tree);
    model.n_features = train.features();
    model.feature_names = train.feature_names;
    model.scaler = train.scaler;
    model.seed = result.seed;
    model.repetition = rep;
    model.config_hash = hash;
    model.config_json = config_to_json(cfg);

    const auto train_pred = evaluate_tree(model.tree, train.inputs);
    const auto test_pred = evaluate_tree(model.tree, data.test.inputs);
    result.train = metrics(train.targets, train_pred);
    result.test = metrics(data.test.targets, test_pred);
    result.parameter_count = parameter_count(model.tree);
    result.features = selected_features(model.tree);

    const fs::path rd = dir / rep_dir_name(rep);
    fs::create_directories(rd);
    save_model(rd / "model.json", model);
    write_text(rd / "gp_log.csv", gp_log.str());
    write_text(rd / "de_log.csv", de_log.str());
    std::string archive = provenance(hash, cfg.seed) + "rank,rmse,parameter_count,crowding\n";
    for (const auto& ind : result.archive.individuals) {
        archive += std::to_string(ind.rank) + "," + format_double(ind.objectives.rmse) + ","
            + std::to_string(ind.objectives.complexity) + "," + format_double(ind.crowding) + "\n";
    }
    write_text(rd / "archive.csv", archive);

    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

} // namespace

std::string format_double(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string config_to_json(const RunConfig& config) { return config_object(config).dump(); }

RunConfig config_from_json(const std::string& text, const RunConfig& base)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::config_error, "config: malformed JSON at byte " + std::to_string(e.byte));
    }
    RunConfig c = base;
    ConfigReader r;
    double mutation_probability = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::string> ops;
    bool ops_given = false;
    std::string output_dir = c.output_dir.string();
    auto& d = c.data;
    r.object(j, "",
        {
            { "fis_kind", r.choice(c.kind, std::map<std::string, FisKind> { { "type1", FisKind::type1 }, { "type2", FisKind::type2 } }) },
            { "membership_shape",
                r.choice(c.t1_shape,
                    std::map<std::string, MembershipShape> {
                        { "bell", MembershipShape::bell }, { "gaussian", MembershipShape::gaussian } }) },
            { "objective_mode",
                r.choice(c.mode,
                    std::map<std::string, ObjectiveMode> { { "multi", ObjectiveMode::multi }, { "single", ObjectiveMode::single } }) },
            { "seed", r.seed(c.seed) },
            { "rounds", r.count(c.rounds) },
            { "repetitions", r.count(c.repetitions) },
            { "threads", r.count(c.threads) },
            { "split", r.text(c.split) },
            { "output_dir", r.text(output_dir) },
            { "gp",
                [&](const json& v, const std::string& name) {
                    r.object(v, name,
                        {
                            { "population", r.count(c.gp.population) },
                            { "mating_pool", r.count(c.gp.mating_pool) },
                            { "iterations", r.count(c.gp.iterations) },
                            { "crossover_probability", r.real(c.gp.crossover_probability) },
                            { "mutation_probability", r.real(mutation_probability) },
                            { "max_depth", r.count(c.gp.tree.limits.max_depth) },
                            { "max_inputs", r.count(c.gp.tree.limits.max_inputs) },
                            { "p_terminal", r.real(c.gp.tree.p_terminal) },
                            { "mutation_ops",
                                [&](const json& o, const std::string& n) {
                                    ops_given = true;
                                    r.texts(ops)(o, n);
                                } },
                        });
                } },
            { "de",
                [&](const json& v, const std::string& name) {
                    r.object(v, name,
                        {
                            { "pop_size", r.count(c.de.pop_size) },
                            { "F", r.real(c.de.F) },
                            { "cr", r.real(c.de.cr) },
                            { "max_iters", r.count(c.de.max_iters) },
                            { "stall_window", r.count(c.de.stall_window) },
                            { "init_spread", r.real(c.de.init_spread) },
                        });
                } },
            { "data",
                [&](const json& v, const std::string& name) {
                    r.object(v, name,
                        {
                            { "source",
                                r.choice(d.source,
                                    std::map<std::string, DataSource> { { "plant", DataSource::plant },
                                        { "mackey-glass", DataSource::mackey_glass }, { "csv", DataSource::csv },
                                        { "box-jenkins", DataSource::box_jenkins } }) },
                            { "plant_train", r.count(d.plant_train) },
                            { "plant_test", r.count(d.plant_test) },
                            { "tau", r.real(d.tau) },
                            { "x0", r.real(d.x0) },
                            { "step", r.real(d.step) },
                            { "k_start", r.count(d.k_start) },
                            { "k_end", r.count(d.k_end) },
                            { "noise", r.real(d.noise) },
                            { "path", r.text(d.path) },
                            { "inputs", r.texts(d.inputs) },
                            { "target", r.text(d.target) },
                            { "header", r.flag(d.header) },
                            { "u_column", r.text(d.u_column) },
                            { "y_column", r.text(d.y_column) },
                        });
                } },
        });
    if (ops_given) {
        c.gp.mutation_ops.clear();
        for (const auto& name : ops) {
            const auto it = mutation_names.find(name);
            if (it == mutation_names.end()) {
                r.errors.push_back("'gp.mutation_ops' has unknown operator '" + name + "'");
            } else {
                c.gp.mutation_ops.push_back(it->second);
            }
        }
    }
    if (!std::isnan(mutation_probability)
        && std::abs(mutation_probability + c.gp.crossover_probability - 1.0) > 1e-12) {
        r.errors.push_back("'gp.mutation_probability' must equal 1 - gp.crossover_probability");
    }
    c.output_dir = output_dir;
    if (!r.errors.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : r.errors) {
            msg += "\n  " + e;
        }
        throw Error(ErrorKind::config_error, msg);
    }
    validate_config(c);
    return c;
}

void validate_config(const RunConfig& c)
{
    std::vector<std::string> errors;
    auto need = [&](bool ok, const std::string& message) {
        if (!ok) {
            errors.push_back(message);
        }
    };
    need(c.gp.population >= 2, "'gp.population' must be at least 2");
    need(c.gp.mating_pool >= 1, "'gp.mating_pool' must be at least 1");
    need(c.gp.crossover_probability >= 0.0 && c.gp.crossover_probability <= 1.0,
        "'gp.crossover_probability' must lie in [0, 1]");
    need(c.gp.tree.limits.max_depth >= 1, "'gp.max_depth' must be at least 1");
    need(c.gp.tree.limits.max_inputs >= 2 && c.gp.tree.limits.max_inputs <= max_supported_arity,
        "'gp.max_inputs' must lie in [2, " + std::to_string(max_supported_arity) + "]");
    need(c.gp.tree.p_terminal >= 0.0 && c.gp.tree.p_terminal <= 1.0, "'gp.p_terminal' must lie in [0, 1]");
    need(!c.gp.mutation_ops.empty(), "'gp.mutation_ops' must not be empty");
    need(c.de.pop_size >= 4, "'de.pop_size' must be at least 4");
    need(c.de.F >= 0.0 && c.de.F <= 2.0, "'de.F' must lie in [0, 2]");
    need(c.de.cr >= 0.0 && c.de.cr <= 1.0, "'de.cr' must lie in [0, 1]");
    need(c.de.init_spread >= 0.0 && std::isfinite(c.de.init_spread), "'de.init_spread' must be finite and >= 0");
    need(c.rounds >= 1, "'rounds' must be at least 1");
    need(c.repetitions >= 1, "'repetitions' must be at least 1");
    need(c.threads >= 1, "'threads' must be at least 1");
    const auto& d = c.data;
    switch (d.source) {
    case DataSource::plant:
        need(d.plant_train >= 1, "'data.plant_train' must be at least 1");
        need(d.plant_test >= 1, "'data.plant_test' must be at least 1");
        break;
    case DataSource::mackey_glass:
        need(d.tau > 17.0, "'data.tau' must exceed 17");
        need(d.step > 0.0 && d.step < d.tau, "'data.step' must lie in (0, tau)");
        need(d.k_start >= 24, "'data.k_start' must be at least 24");
        need(d.k_end > d.k_start, "'data.k_end' must exceed data.k_start");
        need(d.noise >= 0.0 && std::isfinite(d.noise), "'data.noise' must be finite and >= 0");
        break;
    case DataSource::csv:
        need(!d.path.empty(), "'data.path' is required for csv data");
        need(!d.target.empty(), "'data.target' is required for csv data");
        break;
    case DataSource::box_jenkins:
        need(!d.path.empty(), "'data.path' is required for box-jenkins data");
        break;
    }
    try {
        (void)parse_split(c.split, d, 0);
    } catch (const Error& e) {
        errors.push_back(std::string("'split': ") + e.what());
    }
    if (!errors.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : errors) {
            msg += "\n  " + e;
        }
        throw Error(ErrorKind::config_error, msg);
    }
}

std::string config_hash(const RunConfig& config)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : config_to_json(config)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return hex64(h);
}

SplitScheme parse_split(const std::string& text, const DatasetSpec& data, std::size_t n_patterns)
{
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    auto bad = [&]() -> Error {
        return Error(ErrorKind::config_error,
            "split '" + text + "' is not one of auto, none, holdout:<fraction>, fixed:<n>, kfold:<k>");
    };
    if (kind == "auto" && arg.empty()) {
        switch (data.source) {
        case DataSource::plant:
            return FixedSplit { data.plant_train };
        case DataSource::mackey_glass:
            return FixedSplit { n_patterns / 2 };
        default:
            return NoSplit {};
        }
    }
    if (kind == "none" && arg.empty()) {
        return NoSplit {};
    }
    if (arg.empty()) {
        throw bad();
    }
    if (kind == "holdout") {
        double f = 0.0;
        const auto res = std::from_chars(arg.data(), arg.data() + arg.size(), f);
        if (res.ec != std::errc() || res.ptr != arg.data() + arg.size() || !(f > 0.0 && f < 1.0)) {
            throw bad();
        }
        return Holdout { f };
    }
    std::size_t v = 0;
    const auto res = std::from_chars(arg.data(), arg.data() + arg.size(), v);
    if (res.ec != std::errc() || res.ptr != arg.data() + arg.size()) {
        throw bad();
    }
    if (kind == "fixed" && v >= 1) {
        return FixedSplit { v };
    }
    if (kind == "kfold" && v >= 2) {
        return KFold { v };
    }
    throw bad();
}

std::uint64_t repetition_seed(std::uint64_t master, std::size_t repetition)
{
    return mix_seed(master, static_cast<std::uint64_t>(repetition));
}

Dataset load_dataset(const DatasetSpec& spec, std::uint64_t rep_seed)
{
    switch (spec.source) {
    case DataSource::plant: {
        auto [train, test] = gen_plant(spec.plant_train, spec.plant_test);
        for (std::size_t i = 0; i < test.size(); ++i) {
            train.inputs.append_row(test.inputs.row(i));
            train.targets.push_back(test.targets[i]);
        }
        return std::move(train);
    }
    case DataSource::mackey_glass: {
        if (!(spec.tau > 17.0)) {
            throw Error(ErrorKind::invalid_argument, "mackey-glass: tau must exceed 17");
        }
        auto series = mackey_glass_series(spec.tau, spec.x0, spec.k_end, spec.step);
        if (spec.noise > 0.0) {
            Rng rng(mix_seed(rep_seed, stream_noise));
            series = add_gaussian_noise(series, spec.noise, rng);
        }
        return mackey_glass_patterns(series, spec.k_start, spec.k_end);
    }
    case DataSource::csv:
        return load_csv(spec.path, spec.inputs, spec.target, spec.header);
    case DataSource::box_jenkins: {
        const auto table = read_csv(spec.path, spec.header);
        const std::size_t uc = resolve_column(table, spec.u_column);
        const std::size_t yc = resolve_column(table, spec.y_column);
        std::vector<double> u;
        std::vector<double> y;
        for (std::size_t i = 0; i < table.values.rows(); ++i) {
            u.push_back(table.values(i, uc));
            y.push_back(table.values(i, yc));
        }
        return box_jenkins_patterns(u, y);
    }
    }
    throw Error(ErrorKind::config_error, "unknown data source");
}

PreparedData prepare_data(const RunConfig& config, std::uint64_t rep_seed, std::size_t repetition)
{
    const Dataset raw = load_dataset(config.data, rep_seed);
    const auto scheme = parse_split(config.split, config.data, raw.size());
    Rng rng(mix_seed(rep_seed, stream_split));
    const auto parts = split(raw.size(), scheme, rng);
    const auto& p = parts[repetition % parts.size()];
    PreparedData out;
    out.separate_test = !std::holds_alternative<NoSplit>(scheme);
    const Dataset train = subset(raw, p.train);
    const Scaler scaler = fit_scaler(train);
    out.train = apply_scaler(train, scaler);
    out.test = apply_scaler(subset(raw, p.test), scaler);
    return out;
}

TrainSummary cmd_train(const RunConfig& config, std::ostream* log)
{
    validate_config(config);
    const auto hash = config_hash(config);
    const fs::path dir = config.output_dir;
    fs::create_directories(dir);
    write_text(dir / "config.json", config_object(config).dump(1, '\t') + "\n");

    TrainSummary summary;
    for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
        summary.repetitions.push_back(run_repetition(config, rep, hash, dir, log));
    }
    const auto& reps = summary.repetitions;
    for (std::size_t r = 1; r < reps.size(); ++r) {
        if (reps[r].train.rmse < reps[summary.best].train.rmse) {
            summary.best = r;
        }
    }

    std::string report = provenance(hash, config.seed)
        + "repetition,seed,train_rmse,train_r,test_rmse,test_r,parameter_count,features\n";
    std::string timing = provenance(hash, config.seed) + "repetition,seconds\n";
    std::vector<double> seconds;
    for (const auto& r : reps) {
        std::string features;
        for (auto f : r.features) {
            features += (features.empty() ? "" : ";") + std::to_string(f + 1);
        }
        report += std::to_string(r.repetition) + "," + std::to_string(r.seed) + "," + format_double(r.train.rmse) + ","
            + format_double(r.train.correlation) + "," + format_double(r.test.rmse) + ","
            + format_double(r.test.correlation) + "," + std::to_string(r.parameter_count) + "," + features + "\n";
        timing += std::to_string(r.repetition) + "," + format_double(r.seconds) + "\n";
        seconds.push_back(r.seconds);
    }
    const auto t = stats(seconds, true);
    timing += "best," + format_double(t.best) + "\nmean," + format_double(t.mean) + "\nstd," + format_double(t.std) + "\n";
    write_text(dir / "report.csv", report);
    write_text(dir / "summary.csv", provenance(hash, config.seed) + summary_csv(reps));
    write_text(dir / "timing.csv", timing);
    save_model(dir / "model.json", reps[summary.best].model);
    const json manifest = { { "config_hash", hash }, { "seed", config.seed },
        { "objective_mode", config.mode == ObjectiveMode::multi ? "multi" : "single" },
        { "repetitions", config.repetitions }, { "best_repetition", summary.best } };
    write_text(dir / "run.json", manifest.dump(1, '\t') + "\n");
    return summary;
}

Metrics cmd_evaluate(const Model& model, const EvaluateOptions& options)
{
    const RunConfig cfg = model.config_json.empty() ? RunConfig {} : config_from_json(model.config_json);
    const DatasetSpec spec = options.data.value_or(cfg.data);
    const Dataset raw = load_dataset(spec, model.seed);
    check_features(model, raw);
    const auto rows = part_rows(cfg, spec, raw.size(), model.seed, model.repetition, options.part);
    if (rows.empty()) {
        throw Error(ErrorKind::invalid_argument, "evaluate: the selected part has no rows");
    }
    Dataset ds = subset(raw, rows);
    if (!model.scaler.empty()) {
        ds = apply_scaler(ds, model.scaler);
    }
    const auto pred = evaluate_tree(model.tree, ds.inputs);
    const Metrics m = metrics(ds.targets, pred);
    if (!options.predictions.empty()) {
        std::string out = provenance(model.config_hash, model.seed) + "index,target,prediction\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out += std::to_string(rows[i]) + "," + format_double(ds.targets[i]) + "," + format_double(pred[i]) + "\n";
        }
        write_text(options.predictions, out);
    }
    return m;
}

std::size_t cmd_export_pareto(const fs::path& run_dir, const fs::path& out)
{
    json manifest;
    try {
        manifest = json::parse(read_text(run_dir / "run.json"));
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::parse_error, (run_dir / "run.json").string() + ": malformed at byte " + std::to_string(e.byte));
    }
    if (manifest.value("objective_mode", "") != "multi") {
        throw Error(ErrorKind::no_pareto_front,
            "run in '" + run_dir.string() + "' used single-objective ranking by rmse, so it has no Pareto front");
    }
    const auto best = manifest.at("best_repetition").get<std::size_t>();
    const fs::path archive = run_dir / rep_dir_name(best) / "archive.csv";
    struct Row {
        std::size_t rank;
        Objectives obj;
    };
    std::vector<Row> rows;
    for (const auto& f : read_rows(archive)) {
        if (f.size() < 3) {
            throw Error(ErrorKind::parse_error, archive.string() + ": short row");
        }
        rows.push_back({ static_cast<std::size_t>(to_double(f[0], archive)),
            { to_double(f[1], archive), static_cast<std::size_t>(to_double(f[2], archive)) } });
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return a.rank != b.rank ? a.rank < b.rank : a.obj.rmse < b.obj.rmse;
    });
    for (const auto& a : rows) {
        for (const auto& b : rows) {
            if (a.rank == 0 && b.rank == 0 && dominates(b.obj, a.obj)) {
                throw Error(ErrorKind::invariant_violation, "archive front contains a dominated member");
            }
        }
    }
    std::string text = provenance(manifest.at("config_hash").get<std::string>(), manifest.at("seed").get<std::uint64_t>())
        + "rmse,parameter_count,rank\n";
    for (const auto& r : rows) {
        text += format_double(r.obj.rmse) + "," + std::to_string(r.obj.complexity) + "," + std::to_string(r.rank) + "\n";
    }
    write_text(out, text);
    return rows.size();
}

std::string format_features(const std::set<std::size_t>& zero_based)
{
    std::vector<std::size_t> v;
    for (auto f : zero_based) {
        v.push_back(f + 1);
    }
    std::string out = "{";
    for (std::size_t i = 0; i < v.size();) {
        std::size_t j = i;
        while (j + 1 < v.size() && v[j + 1] == v[j] + 1) {
            ++j;
        }
        out += (i ? "," : "");
        if (j - i >= 2) {
            out += std::to_string(v[i]) + ".." + std::to_string(v[j]);
        } else {
            for (std::size_t k = i; k <= j; ++k) {
                out += (k > i ? "," : "") + std::to_string(v[k]);
            }
        }
        i = j + 1;
    }
    return out + "}";
}

std::string cmd_describe(const Model& model)
{
    const FuzzyTree& tree = model.tree;
    std::ostringstream out;
    const std::size_t nodes = node_count(tree);
    out << nodes << (nodes == 1 ? " node" : " nodes") << ", depth " << depth(tree) << ", " << parameter_count(tree)
        << " parameters, features " << format_features(selected_features(tree)) << "\n";
    out << "fis_kind: "
        << (tree.kind == FisKind::type2 ? "type2 (interval type-2 Gaussian sets with uncertain mean)"
                                        : tree.t1_shape == MembershipShape::bell ? "type1 (bell sets)"
                                                                                 : "type1 (Gaussian sets)")
        << "\n";
    if (!model.feature_names.empty()) {
        out << "inputs:";
        for (std::size_t j = 0; j < model.feature_names.size(); ++j) {
            out << " x" << j + 1 << "=" << model.feature_names[j];
        }
        out << "\n";
    }
    std::vector<std::string> lines;
    std::size_t next = 0;
    auto walk = [&](auto& self, const FuzzyNode& node, std::size_t level) -> std::size_t {
        const std::size_t id = ++next;
        if (lines.size() < id) {
            lines.resize(id);
        }
        std::string inputs;
        for (const auto& c : node.children) {
            inputs += inputs.empty() ? "" : ", ";
            inputs += c.is_terminal() ? "x" + std::to_string(c.feature() + 1)
                                      : "node " + std::to_string(self(self, c.node(), level + 1));
        }
        lines[id - 1] = "node " + std::to_string(id) + ": depth " + std::to_string(level) + ", "
            + std::to_string(node.arity()) + " inputs (" + inputs + "), "
            + std::to_string(std::size_t { 1 } << node.arity()) + " rules\n";
        return id;
    };
    walk(walk, tree.root, 1);
    for (const auto& l : lines) {
        out << l;
    }
    return out.str();
}

std::optional<std::string> verify_report(const fs::path& run_dir)
{
    const auto report = read_rows(run_dir / "report.csv");
    const auto summary = read_rows(run_dir / "summary.csv");
    std::vector<RepetitionResult> reps;
    for (const auto& f : report) {
        if (f.size() < 7) {
            return "report.csv: short row";
        }
        RepetitionResult r;
        r.train = { to_double(f[2], "report.csv"), to_double(f[3], "report.csv") };
        r.test = { to_double(f[4], "report.csv"), to_double(f[5], "report.csv") };
        r.parameter_count = static_cast<std::size_t>(to_double(f[6], "report.csv"));
        reps.push_back(std::move(r));
    }
    const auto expected = rows_from_text(summary_csv(reps));
    if (expected.size() != summary.size()) {
        return "summary.csv: expected " + std::to_string(expected.size()) + " rows";
    }
    for (std::size_t i = 0; i < summary.size(); ++i) {
        for (std::size_t k = 1; k < expected[i].size(); ++k) {
            const double want = to_double(expected[i][k], "summary");
            const double got = k < summary[i].size() ? to_double(summary[i][k], "summary.csv") : std::nan("");
            const bool same = (std::isnan(want) && std::isnan(got)) || std::abs(want - got) <= 1e-12 * std::max(1.0, std::abs(want));
            if (!same) {
                return "summary.csv: " + summary[i][0] + " column " + std::to_string(k) + " is " + format_double(got)
                    + ", recomputed " + format_double(want);
            }
        }
    }
    return std::nullopt;
}

} // namespace hfit
