#ifndef FRACSHAPE_EXPERIMENTS_HPP
#define FRACSHAPE_EXPERIMENTS_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fracshape/io.hpp"

namespace fracshape {

enum class ExperimentKind { grid, eig, torsion, two_ball, minimize, classify, lieb, bounds_audit };
std::string to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(const std::string& name);

struct MaskSpec {
    std::optional<std::string> cells;  // run-length bitstring over the grid
    std::optional<Point> center;       // ball mask centre ...
    std::optional<double> volume;      // ... and volume
};

struct TwoBallSettings {
    double total_volume = 0.0;
    std::vector<double> distances;  // length units
};

struct MinimizeSettings {
    double volume = 0.0;
    int iterations = 1000;
    double initial_temperature = -1.0;
    double cooling = 0.995;
    double adjacent_fraction = 0.8;
    int checkpoints = 32;
};

struct ClassifySettings {
    std::string family = "translating-bump";
    int dim = 1;
    int length = 14;
    double h = 0.5;
    double growth = 1.4142135623730951;
    double bump_mass = 1.0;
    double epsilon_fraction = 0.1;  // epsilon = fraction * mass_limit
};

struct LiebSettings {
    int trials = 50;
    int min_cells = 4;
};

struct AuditSettings {
    int trials = 10;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::two_ball;
    std::optional<Grid> grid;
    double s = 0.5;
    std::optional<std::string> functional;
    std::vector<std::uint64_t> seeds{1};
    std::filesystem::path output_dir = "out";
    std::map<std::string, double> tolerances;
    std::optional<MaskSpec> mask;
    int k = 3;
    TwoBallSettings two_ball;
    MinimizeSettings minimize;
    ClassifySettings classify;
    LiebSettings lieb;
    AuditSettings audit;
    Json source;  // the parsed document, echoed into the manifest
};

/// Parses and validates; unknown keys and out-of-range values raise
/// ParameterError naming the field path (e.g. "two_ball.distances").
ExperimentConfig parse_config(const Json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
void validate_config(const ExperimentConfig& cfg);

/// Tolerance names accepted in the "tolerances" map.
std::vector<std::string> tolerance_names();
SolverOptions solver_options(const ExperimentConfig& cfg);

struct OutputFile {
    std::string path;  // relative to the output directory
    std::string sha256;
    std::size_t bytes = 0;
};

struct ReportBundle {
    std::filesystem::path output_dir;
    std::vector<OutputFile> files;  // in write order; the manifest is not listed
    bool passed = true;             // false when an audit or experiment check fails
    Json summary;
};

/// Runs the configured experiment, writes its artifacts and manifest.json.
ReportBundle run_experiment(const ExperimentConfig& cfg);

}  // namespace fracshape

#endif
