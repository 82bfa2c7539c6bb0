#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mvpa/analyses.hpp"
#include "mvpa/dataset.hpp"

namespace mvpa {

// Whole-volume sphere decoding. One sphere per voxel; each sphere is scored
// with exactly the decode_cv used everywhere else, on the sphere's member
// columns.
struct AccuracyMap {
    std::vector<double> accuracy;           // per center voxel
    std::vector<std::uint32_t> sphere_size; // members actually present
    std::vector<std::uint8_t> degenerate;   // 1 = unusable sphere, accuracy forced to 0.5
    double radius_mm = 0.0;

    std::size_t voxel_count() const { return accuracy.size(); }
};

// rows/y: the labeled concept rows of the paradigm matrix and their +1/-1
// targets. A sphere whose submatrix has zero total variance (or whose fit
// degenerates) gets accuracy 0.5 and its degenerate flag set; everything
// else propagates. Centers are processed in parallel with disjoint output
// slots, so the map is bitwise independent of n_threads.
AccuracyMap run_searchlight(const SubjectData& subject, const std::string& paradigm,
                            const std::vector<std::size_t>& rows, const std::vector<int>& y,
                            const FoldPlan& folds, double radius_mm = 4.0,
                            const SvmConfig& config = {}, int n_threads = 1);

// Mean sphere accuracy per atlas area (voxels with an empty area label are
// skipped). Degenerate spheres contribute their 0.5 placeholder.
std::map<std::string, double> aggregate_by_area(const VolumeGeometry& geometry,
                                                const AccuracyMap& map);

enum class ThresholdMode {
    CrossSubjectMean,   // keep areas whose mean accuracy over subjects passes
    EverySubject,       // keep areas that pass in each subject separately
};

struct AreaRanking {
    std::vector<std::string> areas;    // every shared area, best mean rank first
    std::vector<double> mean_accuracy; // across subjects
    std::vector<double> mean_rank;     // across subjects; rank 1 = best, ties averaged
    Matrix per_subject_accuracy;       // areas x subjects
    Matrix per_subject_rank;
    std::vector<bool> passes;          // threshold filter per area
    double threshold = 0.52;
    ThresholdMode mode = ThresholdMode::CrossSubjectMean;
    std::size_t n_subjects = 0;
};

// Areas are ranked within each subject by accuracy (descending, fractional
// ranks on ties) over the intersection of area names across subjects; an
// empty intersection throws DegenerateInput.
AreaRanking rank_areas_across_subjects(const std::vector<std::map<std::string, double>>& per_subject,
                                       double threshold = 0.52,
                                       ThresholdMode mode = ThresholdMode::CrossSubjectMean);

// Raw little-endian float32 accuracy values, one per voxel.
void write_accuracy_map(const std::filesystem::path& path, const AccuracyMap& map);
std::vector<double> read_accuracy_map(const std::filesystem::path& path);

// CSV (area,mean_accuracy,mean_rank,n_subjects) of the areas passing the
// threshold, in ranking order.
void write_area_ranking(const std::filesystem::path& path, const AreaRanking& ranking);

} // namespace mvpa
