#include "hfit/model_io.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include "hfit/error.hpp"
#include "json.hpp"

namespace hfit {

namespace {

using nlohmann::json;

constexpr std::string_view format_name = "hfit-model";
constexpr int format_version = 1;

[[noreturn]] void schema_error(const std::string& where, const std::string& what)
{
    throw Error(ErrorKind::parse_error, "model: field '" + where + "': " + what);
}

const json& field(const json& j, const char* key, const std::string& where)
{
    if (!j.is_object()) {
        schema_error(where, "expected an object");
    }
    const auto it = j.find(key);
    if (it == j.end()) {
        schema_error(where.empty() ? key : where + "." + key, "missing");
    }
    return *it;
}

double number(const json& j, const std::string& where)
{
    if (!j.is_number()) {
        schema_error(where, "expected a number");
    }
    return j.get<double>();
}

std::size_t count(const json& j, const std::string& where)
{
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
        schema_error(where, "expected a non-negative integer");
    }
    return j.get<std::size_t>();
}

std::vector<double> numbers(const json& j, const std::string& where)
{
    if (!j.is_array()) {
        schema_error(where, "expected an array");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
    }
    return out;
}

json node_to_json(const FuzzyNode& node)
{
    json inputs = json::array();
    for (const auto& c : node.children) {
        inputs.push_back(c.is_terminal() ? json(c.feature()) : node_to_json(c.node()));
    }
    json mfs = json::array();
    json rules = json::array();
    if (const auto* rb = std::get_if<T1RuleBase>(&node.rules)) {
        for (const auto& mf : rb->mfs) {
            mfs.push_back({ mf.m, mf.sigma });
        }
        for (const auto& r : rb->rules) {
            rules.push_back({ { "c", r.coeffs } });
        }
    } else {
        const auto& rb2 = std::get<IT2RuleBase>(node.rules);
        for (const auto& mf : rb2.mfs) {
            mfs.push_back({ mf.m1, mf.m2, mf.sigma });
        }
        for (const auto& r : rb2.rules) {
            rules.push_back({ { "c", r.coeffs }, { "s", r.spreads } });
        }
    }
    return { { "inputs", std::move(inputs) }, { "mfs", std::move(mfs) }, { "rules", std::move(rules) } };
}

FuzzyNode node_from_json(const json& j, FisKind kind, const std::string& where)
{
    FuzzyNode node;
    const auto& inputs = field(j, "inputs", where);
    if (!inputs.is_array()) {
        schema_error(where + ".inputs", "expected an array");
    }
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto w = where + ".inputs[" + std::to_string(i) + "]";
        if (inputs[i].is_object()) {
            node.children.emplace_back(node_from_json(inputs[i], kind, w));
        } else {
            node.children.emplace_back(count(inputs[i], w));
        }
    }
    const auto& mfs = field(j, "mfs", where);
    const auto& rules = field(j, "rules", where);
    if (!mfs.is_array() || !rules.is_array()) {
        schema_error(where, "mfs and rules must be arrays");
    }
    const std::size_t width = kind == FisKind::type1 ? 2 : 3;
    std::vector<std::vector<double>> mf_values;
    for (std::size_t i = 0; i < mfs.size(); ++i) {
        auto v = numbers(mfs[i], where + ".mfs[" + std::to_string(i) + "]");
        if (v.size() != width) {
            schema_error(where + ".mfs[" + std::to_string(i) + "]", "expected " + std::to_string(width) + " values");
        }
        mf_values.push_back(std::move(v));
    }
    if (kind == FisKind::type1) {
        T1RuleBase rb;
        for (const auto& v : mf_values) {
            rb.mfs.push_back({ v[0], v[1] });
        }
        for (std::size_t r = 0; r < rules.size(); ++r) {
            const auto w = where + ".rules[" + std::to_string(r) + "]";
            rb.rules.push_back({ numbers(field(rules[r], "c", w), w + ".c") });
        }
        node.rules = std::move(rb);
    } else {
        IT2RuleBase rb;
        for (const auto& v : mf_values) {
            rb.mfs.push_back({ v[0], v[1], v[2] });
        }
        for (std::size_t r = 0; r < rules.size(); ++r) {
            const auto w = where + ".rules[" + std::to_string(r) + "]";
            rb.rules.push_back({ numbers(field(rules[r], "c", w), w + ".c"), numbers(field(rules[r], "s", w), w + ".s") });
        }
        node.rules = std::move(rb);
    }
    return node;
}

} // namespace

std::string model_to_json(const Model& model)
{
    json j;
    j["format"] = format_name;
    j["version"] = format_version;
    j["fis_kind"] = model.tree.kind == FisKind::type1 ? "type1" : "type2";
    j["membership_shape"] = model.tree.t1_shape == MembershipShape::bell ? "bell" : "gaussian";
    j["n_features"] = model.n_features;
    j["feature_names"] = model.feature_names;
    j["scaler"] = { { "min", model.scaler.min }, { "max", model.scaler.max },
        { "target_min", model.scaler.target_min }, { "target_max", model.scaler.target_max } };
    j["tree"] = node_to_json(model.tree.root);
    j["seed"] = model.seed;
    j["repetition"] = model.repetition;
    j["config_hash"] = model.config_hash;
    j["config"] = model.config_json.empty() ? json::object() : json::parse(model.config_json);
    return j.dump(1, '\t') + "\n";
}

Model model_from_json(std::string_view text)
{
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::parse_error, "model: malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    if (!j.is_object()) {
        schema_error("", "top level must be an object");
    }
    const auto& fmt = field(j, "format", "");
    if (!fmt.is_string() || fmt.get<std::string>() != format_name) {
        schema_error("format", "not an hfit model");
    }
    if (count(field(j, "version", ""), "version") != format_version) {
        schema_error("version", "unsupported version");
    }

    Model m;
    const auto& kind = field(j, "fis_kind", "");
    if (kind == "type1") {
        m.tree.kind = FisKind::type1;
    } else if (kind == "type2") {
        m.tree.kind = FisKind::type2;
    } else {
        schema_error("fis_kind", "expected \"type1\" or \"type2\"");
    }
    const auto& shape = field(j, "membership_shape", "");
    if (shape == "bell") {
        m.tree.t1_shape = MembershipShape::bell;
    } else if (shape == "gaussian") {
        m.tree.t1_shape = MembershipShape::gaussian;
    } else {
        schema_error("membership_shape", "expected \"bell\" or \"gaussian\"");
    }
    m.n_features = count(field(j, "n_features", ""), "n_features");
    const auto& names = field(j, "feature_names", "");
    if (!names.is_array()) {
        schema_error("feature_names", "expected an array");
    }
    for (const auto& n : names) {
        if (!n.is_string()) {
            schema_error("feature_names", "expected strings");
        }
        m.feature_names.push_back(n.get<std::string>());
    }
    const auto& sc = field(j, "scaler", "");
    m.scaler.min = numbers(field(sc, "min", "scaler"), "scaler.min");
    m.scaler.max = numbers(field(sc, "max", "scaler"), "scaler.max");
    m.scaler.target_min = number(field(sc, "target_min", "scaler"), "scaler.target_min");
    m.scaler.target_max = number(field(sc, "target_max", "scaler"), "scaler.target_max");
    if (m.scaler.min.size() != m.scaler.max.size() || (!m.scaler.empty() && m.scaler.min.size() != m.n_features)) {
        schema_error("scaler", "min/max length must equal n_features");
    }
    m.tree.root = node_from_json(field(j, "tree", ""), m.tree.kind, "tree");
    const auto& seed = field(j, "seed", "");
    if (!seed.is_number_unsigned()) {
        schema_error("seed", "expected a non-negative integer");
    }
    m.seed = seed.get<std::uint64_t>();
    m.repetition = count(field(j, "repetition", ""), "repetition");
    const auto& hash = field(j, "config_hash", "");
    if (!hash.is_string()) {
        schema_error("config_hash", "expected a string");
    }
    m.config_hash = hash.get<std::string>();
    const auto& cfg = field(j, "config", "");
    m.config_json = cfg.empty() ? std::string() : cfg.dump();

    TreeLimits limits;
    limits.max_depth = std::numeric_limits<std::size_t>::max();
    limits.max_inputs = max_supported_arity;
    limits.n_features = m.n_features;
    if (auto why = check_invariants(m.tree, limits)) {
        throw Error(ErrorKind::invariant_violation, "model: " + *why);
    }
    return m;
}

void write_text(const std::filesystem::path& path, std::string_view text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::file_not_found, "cannot write '" + path.string() + "'");
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::file_not_found, "cannot open '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void save_model(const std::filesystem::path& path, const Model& model) { write_text(path, model_to_json(model)); }

Model load_model(const std::filesystem::path& path) { return model_from_json(read_text(path)); }

} // namespace hfit
