#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "mvpa/dataset.hpp"

namespace mvpa {

enum class SelectionMethod { Roi, Stable, Sphere };

std::string to_string(SelectionMethod m);

// A set of voxel columns plus how it was obtained. `indices` is always
// sorted ascending and duplicate-free.
struct VoxelSelection {
    SelectionMethod method = SelectionMethod::Roi;
    std::vector<std::size_t> indices;

    // roi
    std::vector<std::string> regions;
    // stable
    std::size_t top_k = 0;
    std::vector<double> stability_scores;   // aligned with indices
    // sphere
    std::size_t center_index = 0;
    double radius_mm = 0.0;

    // Compact label for reports, e.g. "roi:IFG+MTG", "stable:500".
    std::string describe() const;
};

// Integer offsets (dx,dy,dz) with |offset * voxel_size| <= radius, boundary
// inclusive. Shared by every sphere lookup so member counts cannot drift
// between the single-sphere and whole-volume paths.
struct SphereTemplate {
    double radius_mm = 0.0;
    double voxel_size_mm = 0.0;
    std::vector<std::array<int, 3>> offsets;

    static SphereTemplate make(double radius_mm, double voxel_size_mm);
};

// Dense grid lookup from integer voxel coordinates to column index.
// Built once per geometry; sphere queries are O(template size).
class VoxelGridIndex {
public:
    explicit VoxelGridIndex(const VolumeGeometry& geometry);

    // Voxels present at center + offset for each template offset, sorted
    // ascending. Offsets falling outside the volume are skipped.
    std::vector<std::size_t> sphere_at(std::size_t center,
                                       const SphereTemplate& sphere) const;

private:
    std::array<std::int64_t, 3> dims_;
    std::vector<std::int32_t> cell_;               // -1 = empty
    std::vector<std::array<std::int32_t, 3>> grid_; // per-voxel integer coords
};

// Union of the voxels belonging to any of the named regions. Unknown region
// names throw InvalidArgument listing the offender.
VoxelSelection select_roi(const VolumeGeometry& geometry,
                          const std::set<std::string>& regions);

// Top `top_k` voxels by stability: mean Pearson correlation of a voxel's
// across-concept activation vector between all pairs of paradigms. A pair
// where either vector has zero variance contributes 0. Ties on the score are
// broken toward the lower voxel index. Requires >= 2 paradigms.
VoxelSelection select_stable(const SubjectData& subject, std::size_t top_k = 500);

// Stability score for every voxel, in voxel order.
std::vector<double> stability_scores(const SubjectData& subject);

// Voxels within radius_mm of the given center voxel (boundary inclusive).
VoxelSelection sphere_members(const VolumeGeometry& geometry, std::size_t center,
                              double radius_mm = 4.0);

void save_selection(const std::filesystem::path& path, const VoxelSelection& selection);
VoxelSelection load_selection(const std::filesystem::path& path);

} // namespace mvpa
