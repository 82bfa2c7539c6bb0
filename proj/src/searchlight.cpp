#include "mvpa/searchlight.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "mvpa/parallel.hpp"
#include "mvpa/selection.hpp"
#include "mvpa/stats.hpp"

namespace mvpa {

AccuracyMap run_searchlight(const SubjectData& subject, const std::string& paradigm,
                            const std::vector<std::size_t>& rows, const std::vector<int>& y,
                            const FoldPlan& folds, double radius_mm, const SvmConfig& config,
                            int n_threads) {
    const Matrix& x = subject.activation(paradigm);
    const std::size_t n_voxels = subject.geometry.voxel_count();
    if (x.cols() != n_voxels)
        throw InvalidArgument("run_searchlight: geometry does not match activation columns");
    if (rows.size() != y.size())
        throw InvalidArgument("run_searchlight: rows and targets differ in length");
    if (folds.n_items != rows.size())
        throw InvalidArgument("run_searchlight: fold plan does not match row count");
    for (auto r : rows)
        if (r >= x.rows()) throw InvalidArgument("run_searchlight: concept row out of range");

    const auto sphere = SphereTemplate::make(radius_mm, subject.geometry.voxel_size_mm);
    const VoxelGridIndex index(subject.geometry);

    AccuracyMap map;
    map.radius_mm = radius_mm;
    map.accuracy.assign(n_voxels, 0.0);
    map.sphere_size.assign(n_voxels, 0);
    map.degenerate.assign(n_voxels, 0);

    parallel_for(n_voxels, n_threads, [&](std::size_t center) {
        const auto members = index.sphere_at(center, sphere);
        map.sphere_size[center] = static_cast<std::uint32_t>(members.size());

        const Matrix sub = gather(x, rows, members);
        bool varies = false;
        const double first = sub.size() ? sub.data()[0] : 0.0;
        for (std::size_t i = 1; i < sub.size() && !varies; ++i)
            varies = sub.data()[i] != first;
        if (!varies) {
            map.accuracy[center] = 0.5;
            map.degenerate[center] = 1;
            return;
        }
        try {
            map.accuracy[center] = decode_cv(sub, y, folds, config).accuracy;
        } catch (const DegenerateInput&) {
            map.accuracy[center] = 0.5;
            map.degenerate[center] = 1;
        }
    });
    return map;
}

std::map<std::string, double> aggregate_by_area(const VolumeGeometry& geometry,
                                                const AccuracyMap& map) {
    if (geometry.voxel_count() != map.voxel_count())
        throw InvalidArgument("aggregate_by_area: map does not match geometry");

    std::map<std::string, std::vector<double>> per_area;
    for (std::size_t v = 0; v < geometry.voxel_count(); ++v) {
        const std::string& area = geometry.area_labels[v];
        if (area.empty()) continue;
        per_area[area].push_back(map.accuracy[v]);
    }
    std::map<std::string, double> means;
    for (const auto& [area, values] : per_area) means[area] = mean(values);
    return means;
}

AreaRanking rank_areas_across_subjects(const std::vector<std::map<std::string, double>>& per_subject,
                                       double threshold, ThresholdMode mode) {
    if (per_subject.empty())
        throw InvalidArgument("rank_areas_across_subjects: no subjects");

    std::vector<std::string> shared;
    for (const auto& [area, acc] : per_subject[0]) {
        bool everywhere = true;
        for (std::size_t s = 1; s < per_subject.size() && everywhere; ++s)
            everywhere = per_subject[s].count(area) > 0;
        if (everywhere) shared.push_back(area);
    }
    if (shared.empty())
        throw DegenerateInput("rank_areas_across_subjects: no area occurs in every subject");

    const std::size_t n_areas = shared.size();
    const std::size_t n_subjects = per_subject.size();
    Matrix accuracy(n_areas, n_subjects);
    Matrix rank(n_areas, n_subjects);
    for (std::size_t s = 0; s < n_subjects; ++s) {
        std::vector<double> acc(n_areas);
        for (std::size_t a = 0; a < n_areas; ++a) acc[a] = per_subject[s].at(shared[a]);
        // fractional_ranks ranks ascending; flipping maps the best accuracy
        // to rank 1 while preserving tie averaging.
        const auto ascending = fractional_ranks(acc);
        for (std::size_t a = 0; a < n_areas; ++a) {
            accuracy(a, s) = acc[a];
            rank(a, s) = static_cast<double>(n_areas + 1) - ascending[a];
        }
    }

    std::vector<double> mean_rank(n_areas), mean_acc(n_areas);
    for (std::size_t a = 0; a < n_areas; ++a) {
        mean_rank[a] = mean(rank.row(a));
        mean_acc[a] = mean(accuracy.row(a));
    }

    std::vector<std::size_t> order(n_areas);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        if (mean_rank[i] != mean_rank[j]) return mean_rank[i] < mean_rank[j];
        return shared[i] < shared[j];
    });

    AreaRanking out;
    out.threshold = threshold;
    out.mode = mode;
    out.n_subjects = n_subjects;
    out.per_subject_accuracy = Matrix(n_areas, n_subjects);
    out.per_subject_rank = Matrix(n_areas, n_subjects);
    for (std::size_t pos = 0; pos < n_areas; ++pos) {
        const std::size_t a = order[pos];
        out.areas.push_back(shared[a]);
        out.mean_accuracy.push_back(mean_acc[a]);
        out.mean_rank.push_back(mean_rank[a]);
        for (std::size_t s = 0; s < n_subjects; ++s) {
            out.per_subject_accuracy(pos, s) = accuracy(a, s);
            out.per_subject_rank(pos, s) = rank(a, s);
        }
        bool pass;
        if (mode == ThresholdMode::CrossSubjectMean) {
            pass = mean_acc[a] >= threshold;
        } else {
            pass = true;
            for (std::size_t s = 0; s < n_subjects && pass; ++s)
                pass = accuracy(a, s) >= threshold;
        }
        out.passes.push_back(pass);
    }
    return out;
}

void write_accuracy_map(const std::filesystem::path& path, const AccuracyMap& map) {
    Matrix row(1, map.accuracy.size());
    for (std::size_t i = 0; i < map.accuracy.size(); ++i) row(0, i) = map.accuracy[i];
    write_f32_matrix(path, row);
}

std::vector<double> read_accuracy_map(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes % sizeof(float) != 0)
        throw FormatError(path.string() + ": size is not a multiple of 4 bytes");
    const Matrix m = read_f32_matrix(path, 1, bytes / sizeof(float));
    return {m.data(), m.data() + m.size()};
}

void write_area_ranking(const std::filesystem::path& path, const AreaRanking& ranking) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "area,mean_accuracy,mean_rank,n_subjects\n";
    char buf[64];
    for (std::size_t a = 0; a < ranking.areas.size(); ++a) {
        if (!ranking.passes[a]) continue;
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g", ranking.mean_accuracy[a],
                      ranking.mean_rank[a]);
        out << ranking.areas[a] << ',' << buf << ',' << ranking.n_subjects << '\n';
    }
    if (!out) throw IoError("short write on " + path.string());
}

} // namespace mvpa
