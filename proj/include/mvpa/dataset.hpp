#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mvpa/matrix.hpp"

namespace mvpa {

// Presentation paradigms a subject can have. Matrices are keyed by these
// names; anything else in a manifest is rejected.
inline const std::vector<std::string> kParadigmNames = {"sentence", "picture", "wordcloud"};

bool is_valid_paradigm(const std::string& name);

enum class ConcretenessLabel { Concrete, Abstract, Excluded };

std::string to_string(ConcretenessLabel label);

// Splits ratings into concrete (>= mean + factor * std), abstract
// (<= mean - factor * std) and excluded (the band in between). Uses the
// population standard deviation. Zero-variance or non-finite ratings throw.
std::vector<ConcretenessLabel> label_concreteness(const std::vector<double>& ratings,
                                                  double half_std_factor = 0.5);

struct Concept {
    std::string id;
    std::string word;
    double rating = 0.0;
};

// The stimulus list plus the labels derived from its ratings. Labels are
// always recomputed from the stored ratings, never loaded, so they cannot
// drift out of sync.
class ConceptSet {
public:
    ConceptSet() = default;
    explicit ConceptSet(std::vector<Concept> concepts, double half_std_factor = 0.5);

    std::size_t size() const { return concepts_.size(); }
    const std::vector<Concept>& concepts() const { return concepts_; }
    const Concept& at(std::size_t i) const { return concepts_[i]; }
    const std::vector<ConcretenessLabel>& labels() const { return labels_; }
    std::vector<double> ratings() const;

    std::size_t count(ConcretenessLabel label) const;

    // Row indices of concrete and abstract concepts, in concept order.
    // Excluded concepts stay in the matrices but take part in no analysis.
    std::vector<std::size_t> labeled_indices() const;

    // +1 for concrete, -1 for abstract, aligned with labeled_indices().
    std::vector<int> labeled_targets() const;

    // Fraction of labeled concepts that are abstract.
    double abstract_proportion() const;

private:
    std::vector<Concept> concepts_;
    std::vector<ConcretenessLabel> labels_;
};

// Voxel positions in millimetres on a regular grid, with optional atlas area
// names and region-of-interest memberships per voxel.
struct VolumeGeometry {
    double voxel_size_mm = 2.0;
    std::vector<std::array<double, 3>> coordinates;
    std::vector<std::string> area_labels;                // "" = unlabeled
    std::vector<std::vector<std::string>> roi_labels;    // sorted, unique per voxel

    std::size_t voxel_count() const { return coordinates.size(); }
    std::set<std::string> roi_names() const;
    std::set<std::string> area_names() const;            // skips ""
};

// Checks grid consistency: coordinates must sit on a voxel_size_mm grid
// (up to a common origin offset) and be pairwise distinct; label vectors
// must match the voxel count. Throws FormatError on violation.
void validate_geometry(const VolumeGeometry& geometry);

// One subject: geometry plus one concepts x voxels matrix per paradigm.
struct SubjectData {
    std::string subject_id;
    VolumeGeometry geometry;
    std::map<std::string, Matrix> paradigms;

    const Matrix& activation(const std::string& paradigm) const;
};

struct EmbeddingSet {
    std::string name;
    Matrix vectors;   // n_concepts x dimension

    std::size_t dimension() const { return vectors.cols(); }
};

// A subject directory loaded into memory.
struct Dataset {
    SubjectData subject;
    ConceptSet concepts;
    std::map<std::string, EmbeddingSet> embeddings;
};

// Mean across repeated presentations: rows of `instances` are repetitions,
// the result is the per-column average.
std::vector<double> average_repetitions(const Matrix& instances);

// concepts.csv reader (header: id,word,rating). Duplicate ids and malformed
// rows throw FormatError.
ConceptSet load_concepts_csv(const std::filesystem::path& path,
                             double half_std_factor = 0.5);

// Keyed embedding CSV (header: id,<dim names...>): rows may come in any
// order and are matched to `concepts` by id. Missing or unknown ids and
// inconsistent dimensions throw FormatError.
EmbeddingSet load_embeddings(const std::filesystem::path& path,
                             const ConceptSet& concepts,
                             const std::string& name = "embedding");

// Reads a subject directory (manifest.json + concepts.csv + voxels.csv +
// raw float32 activation/embedding files). Every declared dimension is
// checked against actual file sizes.
Dataset load_dataset(const std::filesystem::path& dir);

// Writes the same layout load_dataset reads. Activations and embeddings are
// stored as little-endian float32, so a write/load round trip reproduces
// matrices exactly when their entries are float32-representable.
void write_dataset(const std::filesystem::path& dir, const Dataset& dataset);

// Raw little-endian float32 matrix files.
Matrix read_f32_matrix(const std::filesystem::path& path, std::size_t rows, std::size_t cols);
void write_f32_matrix(const std::filesystem::path& path, const Matrix& m);

} // namespace mvpa
