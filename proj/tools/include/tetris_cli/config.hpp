#pragma once

#include "tetris/analysis/report.hpp"
#include "tetris/error.hpp"
#include "tetris/spin_models.hpp"
#include "tetris/tetris_model.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tetris::cli {

class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
    const char* kind() const noexcept override { return "config"; }
};

enum class ModelKind { tfim, igt };

struct Paths {
    std::filesystem::path dataset = "dataset.tphz";
    std::filesystem::path checkpoint = "model.ckpt";
    std::filesystem::path trace = "trace.csv";
    std::filesystem::path report = "report";
    std::filesystem::path sweep = "sweep.csv";
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    ModelKind model = ModelKind::tfim;
    TfimParams tfim;
    IgtParams igt;
    TetrisConfig network;
    AnalysisOptions analysis;
    std::vector<double> sweep_lambda_max;
    int sweep_repeats = 5;
    Paths paths;

    std::string dataset_name() const;  // "tfim_z", "tfim_y" or "igt"
};

// Hyperparameter defaults for one dataset: "tfim_z", "tfim_y" or "igt".
TetrisConfig default_network(const std::string& dataset);

nlohmann::json load_json(const std::filesystem::path& path);

// "a.b.c=value": value is parsed as JSON when possible, else taken as a
// string. Intermediate objects are created as needed.
void apply_override(nlohmann::json& config, const std::string& assignment);

// Unknown keys are rejected so typos surface. Relative paths are resolved
// against `base`.
ExperimentConfig parse_config(const nlohmann::json& config, const std::filesystem::path& base = {});

// The configuration with every default filled in, as JSON.
nlohmann::json to_json(const ExperimentConfig& config);

// Linearly spaced grid helper: {"start", "stop", "count"} or an explicit array.
std::vector<double> parse_grid(const nlohmann::json& grid);

} // namespace tetris::cli
