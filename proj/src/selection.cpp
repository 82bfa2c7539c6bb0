#include "mvpa/selection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "mvpa/stats.hpp"

namespace mvpa {

using nlohmann::json;

std::string to_string(SelectionMethod m) {
    switch (m) {
        case SelectionMethod::Roi: return "roi";
        case SelectionMethod::Stable: return "stable";
        case SelectionMethod::Sphere: return "sphere";
    }
    return "?";
}

std::string VoxelSelection::describe() const {
    switch (method) {
        case SelectionMethod::Roi: {
            std::string s = "roi:";
            for (std::size_t i = 0; i < regions.size(); ++i) {
                if (i) s += '+';
                s += regions[i];
            }
            return s;
        }
        case SelectionMethod::Stable:
            return "stable:" + std::to_string(top_k);
        case SelectionMethod::Sphere:
            return "sphere:" + std::to_string(center_index);
    }
    return "?";
}

SphereTemplate SphereTemplate::make(double radius_mm, double voxel_size_mm) {
    if (!(radius_mm > 0.0)) throw InvalidArgument("SphereTemplate: radius must be positive");
    if (!(voxel_size_mm > 0.0)) throw InvalidArgument("SphereTemplate: voxel size must be positive");
    SphereTemplate t;
    t.radius_mm = radius_mm;
    t.voxel_size_mm = voxel_size_mm;
    const int reach = static_cast<int>(std::floor(radius_mm / voxel_size_mm));
    const double r2 = radius_mm * radius_mm;
    const double vs2 = voxel_size_mm * voxel_size_mm;
    for (int dx = -reach; dx <= reach; ++dx)
        for (int dy = -reach; dy <= reach; ++dy)
            for (int dz = -reach; dz <= reach; ++dz) {
                const double d2 = static_cast<double>(dx * dx + dy * dy + dz * dz) * vs2;
                if (d2 <= r2) t.offsets.push_back({dx, dy, dz});
            }
    return t;
}

VoxelGridIndex::VoxelGridIndex(const VolumeGeometry& geometry) {
    validate_geometry(geometry);
    const std::size_t n = geometry.voxel_count();
    if (n == 0) throw InvalidArgument("VoxelGridIndex: empty geometry");

    std::array<double, 3> origin = geometry.coordinates[0];
    for (const auto& c : geometry.coordinates)
        for (int k = 0; k < 3; ++k) origin[k] = std::min(origin[k], c[k]);

    grid_.resize(n);
    std::array<std::int64_t, 3> max_grid{0, 0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < 3; ++k) {
            const auto g = static_cast<std::int64_t>(
                std::llround((geometry.coordinates[i][k] - origin[k]) / geometry.voxel_size_mm));
            grid_[i][k] = static_cast<std::int32_t>(g);
            max_grid[k] = std::max(max_grid[k], g);
        }
    }
    for (int k = 0; k < 3; ++k) dims_[k] = max_grid[k] + 1;

    const std::int64_t cells = dims_[0] * dims_[1] * dims_[2];
    if (cells > (std::int64_t{1} << 31))
        throw InvalidArgument("VoxelGridIndex: bounding box too large");
    cell_.assign(static_cast<std::size_t>(cells), -1);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& g = grid_[i];
        const std::size_t flat = static_cast<std::size_t>(
            (static_cast<std::int64_t>(g[0]) * dims_[1] + g[1]) * dims_[2] + g[2]);
        cell_[flat] = static_cast<std::int32_t>(i);
    }
}

std::vector<std::size_t> VoxelGridIndex::sphere_at(std::size_t center,
                                                   const SphereTemplate& sphere) const {
    if (center >= grid_.size()) throw InvalidArgument("sphere_at: center index out of range");
    const auto& c = grid_[center];
    std::vector<std::size_t> members;
    members.reserve(sphere.offsets.size());
    for (const auto& off : sphere.offsets) {
        const std::int64_t x = c[0] + off[0];
        const std::int64_t y = c[1] + off[1];
        const std::int64_t z = c[2] + off[2];
        if (x < 0 || y < 0 || z < 0 || x >= dims_[0] || y >= dims_[1] || z >= dims_[2]) continue;
        const std::int32_t v = cell_[static_cast<std::size_t>((x * dims_[1] + y) * dims_[2] + z)];
        if (v >= 0) members.push_back(static_cast<std::size_t>(v));
    }
    std::sort(members.begin(), members.end());
    return members;
}

VoxelSelection select_roi(const VolumeGeometry& geometry,
                          const std::set<std::string>& regions) {
    if (regions.empty()) throw InvalidArgument("select_roi: no regions given");
    const auto known = geometry.roi_names();
    for (const auto& r : regions)
        if (!known.count(r))
            throw InvalidArgument("select_roi: unknown region '" + r + "'");

    VoxelSelection sel;
    sel.method = SelectionMethod::Roi;
    sel.regions.assign(regions.begin(), regions.end());
    for (std::size_t v = 0; v < geometry.voxel_count(); ++v) {
        for (const auto& label : geometry.roi_labels[v]) {
            if (regions.count(label)) {
                sel.indices.push_back(v);
                break;
            }
        }
    }
    return sel;
}

namespace {

// Pearson correlation, with the convention that a zero-variance input makes
// the pair contribute 0 instead of failing. Stability must stay total: a
// flat voxel is simply maximally unstable.
double correlation_or_zero(std::span<const double> x, std::span<const double> y) {
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

} // namespace

std::vector<double> stability_scores(const SubjectData& subject) {
    if (subject.paradigms.size() < 2)
        throw InvalidArgument("stability_scores: need at least 2 paradigms");
    std::vector<const Matrix*> mats;
    for (const auto& [name, m] : subject.paradigms) mats.push_back(&m);
    const std::size_t n_voxels = mats[0]->cols();
    const std::size_t n_concepts = mats[0]->rows();
    const std::size_t n_pairs = mats.size() * (mats.size() - 1) / 2;

    std::vector<double> scores(n_voxels, 0.0);
    std::vector<double> a(n_concepts), b(n_concepts);
    for (std::size_t v = 0; v < n_voxels; ++v) {
        double total = 0.0;
        for (std::size_t p = 0; p < mats.size(); ++p) {
            for (std::size_t q = p + 1; q < mats.size(); ++q) {
                for (std::size_t i = 0; i < n_concepts; ++i) {
                    a[i] = (*mats[p])(i, v);
                    b[i] = (*mats[q])(i, v);
                }
                total += correlation_or_zero(a, b);
            }
        }
        scores[v] = total / static_cast<double>(n_pairs);
    }
    return scores;
}

VoxelSelection select_stable(const SubjectData& subject, std::size_t top_k) {
    const std::size_t n_voxels = subject.geometry.voxel_count();
    if (top_k == 0) throw InvalidArgument("select_stable: top_k must be positive");
    if (top_k > n_voxels)
        throw InvalidArgument("select_stable: top_k=" + std::to_string(top_k) +
                              " exceeds voxel count " + std::to_string(n_voxels));

    const auto scores = stability_scores(subject);

    // Rank by score descending; equal scores keep the lower voxel index first.
    std::vector<std::size_t> order(n_voxels);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return scores[x] > scores[y];
    });
    order.resize(top_k);
    std::sort(order.begin(), order.end());

    VoxelSelection sel;
    sel.method = SelectionMethod::Stable;
    sel.top_k = top_k;
    sel.indices = std::move(order);
    sel.stability_scores.reserve(top_k);
    for (auto v : sel.indices) sel.stability_scores.push_back(scores[v]);
    return sel;
}

VoxelSelection sphere_members(const VolumeGeometry& geometry, std::size_t center,
                              double radius_mm) {
    if (center >= geometry.voxel_count())
        throw InvalidArgument("sphere_members: center index out of range");
    const auto tmpl = SphereTemplate::make(radius_mm, geometry.voxel_size_mm);
    const VoxelGridIndex index(geometry);

    VoxelSelection sel;
    sel.method = SelectionMethod::Sphere;
    sel.center_index = center;
    sel.radius_mm = radius_mm;
    sel.indices = index.sphere_at(center, tmpl);
    return sel;
}

void save_selection(const std::filesystem::path& path, const VoxelSelection& selection) {
    json j = {
        {"method", to_string(selection.method)},
        {"indices", selection.indices},
    };
    switch (selection.method) {
        case SelectionMethod::Roi:
            j["regions"] = selection.regions;
            break;
        case SelectionMethod::Stable:
            j["top_k"] = selection.top_k;
            j["stability_scores"] = selection.stability_scores;
            break;
        case SelectionMethod::Sphere:
            j["center_index"] = selection.center_index;
            j["radius_mm"] = selection.radius_mm;
            break;
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("short write on " + path.string());
}

VoxelSelection load_selection(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": invalid JSON: " + e.what());
    }

    VoxelSelection sel;
    try {
        const auto method = j.at("method").get<std::string>();
        if (method == "roi") sel.method = SelectionMethod::Roi;
        else if (method == "stable") sel.method = SelectionMethod::Stable;
        else if (method == "sphere") sel.method = SelectionMethod::Sphere;
        else throw FormatError(path.string() + ": unknown method '" + method + "'");

        sel.indices = j.at("indices").get<std::vector<std::size_t>>();
        if (!std::is_sorted(sel.indices.begin(), sel.indices.end()) ||
            std::adjacent_find(sel.indices.begin(), sel.indices.end()) != sel.indices.end())
            throw FormatError(path.string() + ": indices must be sorted and unique");

        if (sel.method == SelectionMethod::Roi && j.contains("regions"))
            sel.regions = j.at("regions").get<std::vector<std::string>>();
        if (sel.method == SelectionMethod::Stable) {
            sel.top_k = j.value("top_k", sel.indices.size());
            if (j.contains("stability_scores"))
                sel.stability_scores = j.at("stability_scores").get<std::vector<double>>();
        }
        if (sel.method == SelectionMethod::Sphere) {
            sel.center_index = j.value("center_index", std::size_t{0});
            sel.radius_mm = j.value("radius_mm", 0.0);
        }
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return sel;
}

} // namespace mvpa
