#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mvpa/defaults.hpp"
#include "mvpa/report.hpp"
#include "mvpa/searchlight.hpp"
#include "mvpa/synth.hpp"

namespace mvpa {

// A voxel-selection request before it is resolved against a subject.
// Text form: "roi:IFG+MTG", "stable:500", "file:path/to/selection.json".
struct SelectionSpec {
    enum class Kind { Roi, Stable, File };
    Kind kind = Kind::Roi;
    std::set<std::string> regions;
    std::size_t top_k = defaults::kStableVoxelCount;
    std::filesystem::path file;

    std::string label() const;
};

SelectionSpec parse_selection_spec(const std::string& text);

struct DecodeParams {
    std::size_t folds = defaults::kDecodeFolds;
    std::size_t permutations = 0;   // 0 = skip the permutation test
    double c = defaults::kSvmC;
    double alpha = defaults::kAlpha;
};

struct ClusterParams {
    std::size_t k = defaults::kClusterCount;
    std::size_t restarts = defaults::kClusterRestarts;
};

struct EncodeParams {
    std::size_t folds = defaults::kDecodeFolds;
    double lambda = defaults::kRidgeLambda;
    std::vector<std::string> embeddings;      // empty = every embedding the subject has
    std::size_t random_initializations = 0;   // 0 = skip the random baseline
    std::size_t random_dimension = defaults::kRandomEmbeddingDim;
};

struct RsaParams {
    std::vector<std::string> embeddings;      // empty = every embedding the subject has
};

struct SearchlightParams {
    std::size_t folds = defaults::kDecodeFolds;
    double radius_mm = defaults::kSearchlightRadiusMm;
    double c = defaults::kSvmC;
    double threshold = defaults::kAreaAccuracyThreshold;
    ThresholdMode threshold_mode = ThresholdMode::CrossSubjectMean;
};

// Parsed run configuration. Analyses left out of the config do not run.
struct ExperimentConfig {
    std::vector<std::filesystem::path> subjects;   // dataset directories
    std::vector<std::string> paradigms;            // empty = all the subject has
    std::vector<SelectionSpec> selections;
    std::optional<DecodeParams> decode;
    std::optional<ClusterParams> cluster;
    std::optional<EncodeParams> encode;
    std::optional<RsaParams> rsa;
    std::optional<SearchlightParams> searchlight;
    std::optional<std::uint64_t> seed;             // mandatory before running
    int threads = 1;
    std::filesystem::path output_dir = "out";
    bool save_selections = false;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Loads every subject and checks that all referenced paradigms, regions,
// embeddings and selection files resolve. Throws on the first problem;
// writes nothing. Backs the --dry-run flag.
void validate_experiment_inputs(const ExperimentConfig& config);

struct ExperimentOutcome {
    Report report;
    std::size_t n_failed = 0;   // tasks that errored; the run continues past them
};

// Runs subject x paradigm x selection x analysis, collecting one report row
// per metric. Task failures are recorded and do not stop independent tasks.
// Writes report.csv, report.json and searchlight artifacts to output_dir.
ExperimentOutcome run_experiment(const ExperimentConfig& config);

// PlantSpec from JSON. Voxel lists may be given explicitly, as a count to
// sample at random (resolved deterministically from the spec seed), or as a
// reference to a declared roi/area.
PlantSpec load_plant_spec(const std::filesystem::path& path);

} // namespace mvpa
