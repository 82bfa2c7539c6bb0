#include "mvpa/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "mvpa/rng.hpp"
#include "mvpa/stats.hpp"

namespace mvpa {

std::string to_string(EffectKind kind) {
    switch (kind) {
        case EffectKind::ClassSeparation: return "class_separation";
        case EffectKind::LatentFactor: return "latent_factor";
        case EffectKind::LinearMap: return "linear_map";
        case EffectKind::CrossParadigmStability: return "cross_paradigm_stability";
    }
    return "?";
}

namespace {

// Sub-stream tags; every random draw comes from derive_seed(spec.seed, tag)
// so adding data never shifts unrelated streams.
constexpr std::uint64_t kRatingStream = 0;
constexpr std::uint64_t kClassStream = 1;
constexpr std::uint64_t kEmbeddingStream = 100;
constexpr std::uint64_t kNoiseStream = 200;
constexpr std::uint64_t kEffectStream = 1000;
constexpr std::uint64_t kEffectNoiseStream = 3000;

double quantize(double v) { return static_cast<double>(static_cast<float>(v)); }

void quantize_matrix(Matrix& m) {
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = quantize(m.data()[i]);
}

// Ratings drawn per class around well-separated anchors, then nudged until
// the recomputed mean/std thresholds reproduce the requested labels exactly.
std::vector<double> make_ratings(const std::vector<ConcretenessLabel>& wanted, Rng& rng) {
    const std::size_t n = wanted.size();
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
        switch (wanted[i]) {
            case ConcretenessLabel::Concrete: r[i] = 4.4 + 0.25 * rng.next_normal(); break;
            case ConcretenessLabel::Abstract: r[i] = 1.9 + 0.25 * rng.next_normal(); break;
            case ConcretenessLabel::Excluded: r[i] = 3.15 + 0.12 * rng.next_normal(); break;
        }
        r[i] = std::min(std::max(r[i], 1.0), 5.0);
    }

    for (int pass = 0; pass < 500; ++pass) {
        // Same mean/std routine the labeling rule uses, so the projected
        // values land on the same side of the thresholds it will compute.
        const double m = mean(r);
        const double s = population_stddev(r);
        if (s == 0.0) {
            r[0] += 0.5;   // cannot threshold a constant vector; break the tie
            continue;
        }
        const double hi = m + 0.5 * s;
        const double lo = m - 0.5 * s;
        const double margin = std::max(0.02 * s, 1e-9);

        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            double v = r[i];
            switch (wanted[i]) {
                case ConcretenessLabel::Concrete:
                    if (v < hi) { v = hi + margin; changed = true; }
                    break;
                case ConcretenessLabel::Abstract:
                    if (v > lo) { v = lo - margin; changed = true; }
                    break;
                case ConcretenessLabel::Excluded:
                    if (v >= hi) { v = hi - margin; changed = true; }
                    else if (v <= lo) { v = lo + margin; changed = true; }
                    break;
            }
            r[i] = v;
        }
        if (!changed) {
            const auto labels = label_concreteness(r);
            if (labels == wanted) return r;
        }
    }
    throw Error("generate_subject: rating construction did not converge");
}

} // namespace

std::map<std::string, std::vector<std::size_t>> slab_areas(const std::array<std::size_t, 3>& grid,
                                                           std::size_t n_slabs) {
    const std::size_t gz = grid[2];
    if (n_slabs == 0 || n_slabs > gz)
        throw InvalidArgument("slab_areas: slab count must be in [1, grid z]");
    std::map<std::string, std::vector<std::size_t>> areas;
    const std::size_t per = gz / n_slabs;
    for (std::size_t s = 0; s < n_slabs; ++s) {
        char name[32];
        std::snprintf(name, sizeof(name), "slab%02u", static_cast<unsigned>(s + 1));
        const std::size_t z0 = s * per;
        const std::size_t z1 = (s + 1 == n_slabs) ? gz : z0 + per;
        auto& voxels = areas[name];
        for (std::size_t z = z0; z < z1; ++z)
            for (std::size_t y = 0; y < grid[1]; ++y)
                for (std::size_t x = 0; x < grid[0]; ++x)
                    voxels.push_back((z * grid[1] + y) * grid[0] + x);
    }
    return areas;
}

Dataset generate_subject(const PlantSpec& spec) {
    const std::size_t n_concepts = spec.n_concepts();
    const std::size_t n_voxels = spec.n_voxels();
    if (spec.n_concrete == 0 || spec.n_abstract == 0)
        throw InvalidArgument("generate_subject: need at least one concrete and one abstract concept");
    if (spec.grid[0] == 0 || spec.grid[1] == 0 || spec.grid[2] == 0)
        throw InvalidArgument("generate_subject: grid dimensions must be positive");
    if (!(spec.voxel_size_mm > 0.0))
        throw InvalidArgument("generate_subject: voxel size must be positive");
    if (!(spec.noise_sigma >= 0.0))
        throw InvalidArgument("generate_subject: noise sigma must be >= 0");
    if (spec.paradigms.empty())
        throw InvalidArgument("generate_subject: at least one paradigm required");
    {
        std::set<std::string> seen;
        for (const auto& p : spec.paradigms) {
            if (!is_valid_paradigm(p))
                throw InvalidArgument("generate_subject: unknown paradigm '" + p + "'");
            if (!seen.insert(p).second)
                throw InvalidArgument("generate_subject: duplicate paradigm '" + p + "'");
        }
    }
    for (const auto& e : spec.embeddings)
        if (e.name.empty() || e.dimension == 0)
            throw InvalidArgument("generate_subject: embedding spec needs a name and dimension");
    for (const auto& eff : spec.effects) {
        for (auto v : eff.voxels)
            if (v >= n_voxels)
                throw InvalidArgument("generate_subject: effect voxel index out of range");
        if (eff.kind == EffectKind::LinearMap) {
            const bool known = std::any_of(spec.embeddings.begin(), spec.embeddings.end(),
                                           [&](const EmbeddingSpec& e) {
                                               return e.name == eff.source_embedding;
                                           });
            if (!known)
                throw InvalidArgument("generate_subject: linear_map references unknown embedding '" +
                                      eff.source_embedding + "'");
        }
        if (!(eff.effect_size >= 0.0))
            throw InvalidArgument("generate_subject: effect size must be >= 0");
    }

    // Class of each concept row, shuffled so row order carries no signal.
    std::vector<ConcretenessLabel> wanted;
    wanted.insert(wanted.end(), spec.n_concrete, ConcretenessLabel::Concrete);
    wanted.insert(wanted.end(), spec.n_abstract, ConcretenessLabel::Abstract);
    wanted.insert(wanted.end(), spec.n_excluded, ConcretenessLabel::Excluded);
    {
        Rng rng(derive_seed(spec.seed, kClassStream));
        rng.shuffle(wanted);
    }

    std::vector<double> ratings;
    {
        Rng rng(derive_seed(spec.seed, kRatingStream));
        ratings = make_ratings(wanted, rng);
    }

    int width = 1;
    for (std::size_t v = n_concepts; v >= 10; v /= 10) ++width;
    std::vector<Concept> concepts(n_concepts);
    for (std::size_t i = 0; i < n_concepts; ++i) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "c%0*u", width, static_cast<unsigned>(i + 1));
        concepts[i].id = buf;
        std::snprintf(buf, sizeof(buf), "item%0*u", width, static_cast<unsigned>(i + 1));
        concepts[i].word = buf;
        concepts[i].rating = ratings[i];
    }

    Dataset ds;
    ds.concepts = ConceptSet(std::move(concepts));
    if (ds.concepts.labels() != wanted)
        throw Error("generate_subject: constructed ratings do not reproduce the requested split");

    // Geometry: x fastest, then y, then z, so slab_areas covers contiguous
    // index ranges.
    VolumeGeometry& geom = ds.subject.geometry;
    geom.voxel_size_mm = spec.voxel_size_mm;
    geom.coordinates.resize(n_voxels);
    geom.area_labels.assign(n_voxels, "");
    geom.roi_labels.assign(n_voxels, {});
    for (std::size_t z = 0; z < spec.grid[2]; ++z)
        for (std::size_t y = 0; y < spec.grid[1]; ++y)
            for (std::size_t x = 0; x < spec.grid[0]; ++x) {
                const std::size_t idx = (z * spec.grid[1] + y) * spec.grid[0] + x;
                geom.coordinates[idx] = {static_cast<double>(x) * spec.voxel_size_mm,
                                         static_cast<double>(y) * spec.voxel_size_mm,
                                         static_cast<double>(z) * spec.voxel_size_mm};
            }
    for (const auto& [area, voxels] : spec.areas)
        for (auto v : voxels) {
            if (v >= n_voxels)
                throw InvalidArgument("generate_subject: area voxel index out of range");
            if (!geom.area_labels[v].empty())
                throw InvalidArgument("generate_subject: voxel " + std::to_string(v) +
                                      " assigned to two areas");
            geom.area_labels[v] = area;
        }
    for (const auto& [roi, voxels] : spec.rois)
        for (auto v : voxels) {
            if (v >= n_voxels)
                throw InvalidArgument("generate_subject: roi voxel index out of range");
            geom.roi_labels[v].push_back(roi);
        }
    for (auto& labels : geom.roi_labels) std::sort(labels.begin(), labels.end());

    ds.subject.subject_id = spec.subject_id;

    for (std::size_t e = 0; e < spec.embeddings.size(); ++e) {
        Rng rng(derive_seed(spec.seed, kEmbeddingStream + e));
        Matrix vectors(n_concepts, spec.embeddings[e].dimension);
        for (std::size_t i = 0; i < vectors.size(); ++i) vectors.data()[i] = rng.next_normal();
        quantize_matrix(vectors);
        ds.embeddings[spec.embeddings[e].name] = EmbeddingSet{spec.embeddings[e].name,
                                                              std::move(vectors)};
    }

    for (std::size_t p = 0; p < spec.paradigms.size(); ++p) {
        Matrix m(n_concepts, n_voxels);
        if (spec.noise_sigma > 0.0) {
            Rng rng(derive_seed(spec.seed, kNoiseStream + p));
            for (std::size_t i = 0; i < m.size(); ++i)
                m.data()[i] = spec.noise_sigma * rng.next_normal();
        }
        ds.subject.paradigms[spec.paradigms[p]] = std::move(m);
    }

    const double sigma_ref = spec.noise_sigma > 0.0 ? spec.noise_sigma : 1.0;
    const auto& labels = ds.concepts.labels();

    for (std::size_t e = 0; e < spec.effects.size(); ++e) {
        const PlantedEffect& eff = spec.effects[e];
        std::vector<std::size_t> voxels = eff.voxels;
        if (voxels.empty()) {
            voxels.resize(n_voxels);
            std::iota(voxels.begin(), voxels.end(), std::size_t{0});
        }
        const double scale = eff.effect_size * sigma_ref;

        switch (eff.kind) {
            case EffectKind::ClassSeparation: {
                for (auto& [name, m] : ds.subject.paradigms) {
                    for (std::size_t i = 0; i < n_concepts; ++i) {
                        double shift = 0.0;
                        if (labels[i] == ConcretenessLabel::Concrete) shift = scale / 2.0;
                        else if (labels[i] == ConcretenessLabel::Abstract) shift = -scale / 2.0;
                        if (shift == 0.0) continue;
                        for (auto v : voxels) m(i, v) += shift;
                    }
                }
                break;
            }
            case EffectKind::LatentFactor: {
                // +/- factor counterbalanced within each class so it cannot
                // separate concrete from abstract.
                Rng rng(derive_seed(spec.seed, kEffectStream + e));
                std::vector<double> sign(n_concepts, 0.0);
                for (auto cls : {ConcretenessLabel::Concrete, ConcretenessLabel::Abstract,
                                 ConcretenessLabel::Excluded}) {
                    std::vector<std::size_t> members;
                    for (std::size_t i = 0; i < n_concepts; ++i)
                        if (labels[i] == cls) members.push_back(i);
                    rng.shuffle(members);
                    for (std::size_t k = 0; k < members.size(); ++k)
                        sign[members[k]] = (k < (members.size() + 1) / 2) ? 1.0 : -1.0;
                }
                for (auto& [name, m] : ds.subject.paradigms)
                    for (std::size_t i = 0; i < n_concepts; ++i) {
                        const double shift = sign[i] * scale / 2.0;
                        for (auto v : voxels) m(i, v) += shift;
                    }
                break;
            }
            case EffectKind::LinearMap: {
                const Matrix& emb = ds.embeddings.at(eff.source_embedding).vectors;
                const std::size_t dim = emb.cols();
                Rng rng(derive_seed(spec.seed, kEffectStream + e));
                Matrix w(dim, voxels.size());
                for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = rng.next_normal();
                const double map_scale = scale / std::sqrt(static_cast<double>(dim));

                Matrix contribution(n_concepts, voxels.size());
                for (std::size_t i = 0; i < n_concepts; ++i)
                    for (std::size_t v = 0; v < voxels.size(); ++v) {
                        double s = 0.0;
                        for (std::size_t d = 0; d < dim; ++d) s += emb(i, d) * w(d, v);
                        contribution(i, v) = map_scale * s;
                    }
                std::size_t p = 0;
                for (auto& [name, m] : ds.subject.paradigms) {
                    for (std::size_t i = 0; i < n_concepts; ++i)
                        for (std::size_t v = 0; v < voxels.size(); ++v)
                            m(i, voxels[v]) += contribution(i, v);
                    if (eff.map_noise_sigma > 0.0) {
                        Rng noise(derive_seed(spec.seed, kEffectNoiseStream + e * 8 + p));
                        for (std::size_t i = 0; i < n_concepts; ++i)
                            for (auto v : voxels)
                                m(i, v) += eff.map_noise_sigma * noise.next_normal();
                    }
                    ++p;
                }
                break;
            }
            case EffectKind::CrossParadigmStability: {
                Rng rng(derive_seed(spec.seed, kEffectStream + e));
                Matrix pattern(n_concepts, voxels.size());
                for (std::size_t i = 0; i < pattern.size(); ++i)
                    pattern.data()[i] = scale * rng.next_normal();
                for (auto& [name, m] : ds.subject.paradigms)
                    for (std::size_t i = 0; i < n_concepts; ++i)
                        for (std::size_t v = 0; v < voxels.size(); ++v)
                            m(i, voxels[v]) += pattern(i, v);
                break;
            }
        }
    }

    for (auto& [name, m] : ds.subject.paradigms) quantize_matrix(m);
    return ds;
}

} // namespace mvpa
