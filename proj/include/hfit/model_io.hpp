#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hfit/data.hpp"
#include "hfit/tree.hpp"

namespace hfit {

/// A trained tree plus everything needed to apply it to raw data.
struct Model {
    FuzzyTree tree;
    std::size_t n_features = 0;
    std::vector<std::string> feature_names;
    Scaler scaler;

    // provenance
    std::uint64_t seed = 0;   // seed of the repetition that produced the model
    std::size_t repetition = 0;
    std::string config_hash;
    std::string config_json;  // canonical run configuration, embedded verbatim
};

/// Pretty-printed JSON; doubles use shortest round-trip form so a save/load
/// cycle reproduces every parameter bit for bit.
[[nodiscard]] std::string model_to_json(const Model& model);

/// Throws Error(parse_error) with the byte offset for malformed text and a
/// field path for schema violations.
[[nodiscard]] Model model_from_json(std::string_view text);

void save_model(const std::filesystem::path& path, const Model& model);
[[nodiscard]] Model load_model(const std::filesystem::path& path);

/// Writes text to a file, throwing file_not_found when it cannot be opened.
void write_text(const std::filesystem::path& path, std::string_view text);
[[nodiscard]] std::string read_text(const std::filesystem::path& path);

} // namespace hfit
