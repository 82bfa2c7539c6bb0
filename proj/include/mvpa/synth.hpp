#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mvpa/dataset.hpp"

namespace mvpa {

// Synthetic subjects: Gaussian background noise plus additive planted
// effects whose strength is expressed in units of the noise sigma. The same
// spec and seed always reproduce the dataset bit for bit; generated values
// are quantized to float32 so a write/load round trip is exact.

enum class EffectKind {
    // Shifts concrete rows by +delta/2 and abstract rows by -delta/2 on the
    // target voxels; the class mean difference is exactly effect_size*sigma.
    ClassSeparation,
    // A binary +/- factor counterbalanced within each class: adds structure
    // that carries no class information.
    LatentFactor,
    // Activations receive embedding . W / sqrt(dim), scaled to
    // effect_size*sigma, plus optional map noise.
    LinearMap,
    // A concept-dependent pattern added identically to every paradigm.
    CrossParadigmStability,
};

std::string to_string(EffectKind kind);

struct PlantedEffect {
    EffectKind kind = EffectKind::ClassSeparation;
    std::vector<std::size_t> voxels;   // empty = every voxel
    double effect_size = 1.0;          // in noise-sigma units
    std::string source_embedding;      // LinearMap: which EmbeddingSpec feeds it
    double map_noise_sigma = 0.0;      // LinearMap only
};

struct EmbeddingSpec {
    std::string name;
    std::size_t dimension = 0;
};

struct PlantSpec {
    std::string subject_id = "synth-01";
    std::size_t n_concrete = 69;
    std::size_t n_abstract = 63;
    std::size_t n_excluded = 48;
    std::array<std::size_t, 3> grid = {10, 10, 10};
    double voxel_size_mm = 2.0;
    std::vector<std::string> paradigms = kParadigmNames;
    double noise_sigma = 1.0;
    std::vector<EmbeddingSpec> embeddings;
    std::vector<PlantedEffect> effects;
    std::map<std::string, std::vector<std::size_t>> rois;   // region -> voxels
    std::map<std::string, std::vector<std::size_t>> areas;  // area -> voxels
    std::uint64_t seed = 0;

    std::size_t n_concepts() const { return n_concrete + n_abstract + n_excluded; }
    std::size_t n_voxels() const { return grid[0] * grid[1] * grid[2]; }
};

// Generates ratings whose recomputed mean/std thresholds reproduce the
// requested split exactly, then the volume, activations, embeddings and
// planted effects. Throws InvalidArgument on inconsistent specs.
Dataset generate_subject(const PlantSpec& spec);

// Contiguous z-slab partition of a grid into n_slabs areas named
// "slab01".."slabNN"; the remainder voxels go to the last slab.
std::map<std::string, std::vector<std::size_t>> slab_areas(const std::array<std::size_t, 3>& grid,
                                                           std::size_t n_slabs);

} // namespace mvpa
