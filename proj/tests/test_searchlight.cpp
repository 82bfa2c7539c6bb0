#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "mvpa/rng.hpp"
#include "mvpa/searchlight.hpp"
#include "mvpa/selection.hpp"
#include "test_util.hpp"

using namespace mvpa;
using testutil::TempDir;

namespace {

// Subject with one paradigm whose labeled rows carry a per-voxel class shift
// on the voxels selected by `planted`.
SubjectData make_volume_subject(std::size_t nx, std::size_t ny, std::size_t nz,
                                std::size_t n_rows, const std::vector<bool>& planted,
                                double separation, std::uint64_t seed,
                                std::vector<int>& y) {
    SubjectData s;
    s.subject_id = "vol";
    s.geometry = testutil::make_grid_geometry(nx, ny, nz);
    const std::size_t n_voxels = s.geometry.voxel_count();
    Rng rng(seed);
    Matrix m(n_rows, n_voxels);
    y.assign(n_rows, 0);
    for (std::size_t i = 0; i < n_rows; ++i) {
        y[i] = (i % 2 == 0) ? +1 : -1;
        for (std::size_t j = 0; j < n_voxels; ++j) {
            m(i, j) = rng.next_normal();
            if (planted[j]) m(i, j) += y[i] * separation / 2.0;
        }
    }
    s.paradigms["sentence"] = m;
    return s;
}

std::vector<std::size_t> iota_rows(std::size_t n) {
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    return rows;
}

} // namespace

TEST_CASE("each sphere reproduces a standalone decode on its members") {
    std::vector<int> y;
    const std::size_t n_rows = 16;
    std::vector<bool> planted(4 * 3 * 3, false);
    for (std::size_t j = 0; j < 6; ++j) planted[j] = true;
    const auto subject = make_volume_subject(4, 3, 3, n_rows, planted, 3.0, 7, y);
    const auto rows = iota_rows(n_rows);
    const auto plan = make_folds(n_rows, 4, 5);

    const auto map = run_searchlight(subject, "sentence", rows, y, plan, 4.0);
    REQUIRE(map.voxel_count() == subject.geometry.voxel_count());
    CHECK(map.radius_mm == 4.0);

    for (std::size_t center : {std::size_t{0}, std::size_t{17}, std::size_t{35}}) {
        const auto sphere = sphere_members(subject.geometry, center, 4.0);
        CHECK(map.sphere_size[center] == sphere.indices.size());
        if (map.degenerate[center]) continue;
        const Matrix sub = gather(subject.activation("sentence"), rows, sphere.indices);
        const auto direct = decode_cv(sub, y, plan);
        CHECK(map.accuracy[center] == direct.accuracy);
    }
}

TEST_CASE("a constant volume is degenerate everywhere at accuracy one half") {
    SubjectData s;
    s.subject_id = "flat";
    s.geometry = testutil::make_grid_geometry(3, 3, 2);
    s.paradigms["picture"] = Matrix(8, 18, 1.25);
    std::vector<int> y = {+1, -1, +1, -1, +1, -1, +1, -1};
    const auto plan = make_folds(8, 2, 1);
    const auto map = run_searchlight(s, "picture", iota_rows(8), y, plan, 4.0);
    for (std::size_t v = 0; v < map.voxel_count(); ++v) {
        CHECK(map.degenerate[v] == 1);
        CHECK(map.accuracy[v] == 0.5);
    }
}

TEST_CASE("signal shows up in the planted blob and nowhere else") {
    const std::size_t nx = 10, ny = 10, nz = 6;
    std::vector<bool> planted(nx * ny * nz, false);
    std::vector<std::size_t> blob;
    for (std::size_t z = 0; z < 4; ++z)
        for (std::size_t yy = 0; yy < 5; ++yy)
            for (std::size_t xx = 0; xx < 5; ++xx) {
                const std::size_t v = xx + nx * (yy + ny * z);
                planted[v] = true;
                blob.push_back(v);
            }
    REQUIRE(blob.size() == 100);

    std::vector<int> y;
    const std::size_t n_rows = 24;
    const auto subject = make_volume_subject(nx, ny, nz, n_rows, planted, 5.0, 11, y);
    const auto plan = make_folds(n_rows, 4, 2);
    const auto map = run_searchlight(subject, "sentence", iota_rows(n_rows), y, plan, 4.0, {}, 2);

    // Spheres centered inside the blob carry at least their center's signal.
    double blob_sum = 0.0;
    for (auto v : blob) blob_sum += map.accuracy[v];
    CHECK(blob_sum / static_cast<double>(blob.size()) >= 0.8);

    // Centers at least 8 mm from every planted voxel see pure noise.
    double far_sum = 0.0;
    std::size_t far_count = 0;
    const auto& coords = subject.geometry.coordinates;
    for (std::size_t v = 0; v < map.voxel_count(); ++v) {
        double min_dist = 1e9;
        for (auto b : blob) {
            double d2 = 0.0;
            for (int k = 0; k < 3; ++k) {
                const double diff = coords[v][k] - coords[b][k];
                d2 += diff * diff;
            }
            min_dist = std::min(min_dist, std::sqrt(d2));
        }
        if (min_dist >= 8.0) {
            far_sum += map.accuracy[v];
            ++far_count;
        }
    }
    REQUIRE(far_count > 50);
    const double far_mean = far_sum / static_cast<double>(far_count);
    CHECK(far_mean >= 0.38);
    CHECK(far_mean <= 0.62);
}

TEST_CASE("the accuracy map does not depend on the thread count") {
    std::vector<bool> planted(4 * 4 * 2, false);
    planted[5] = true;
    std::vector<int> y;
    const auto subject = make_volume_subject(4, 4, 2, 12, planted, 2.0, 13, y);
    const auto plan = make_folds(12, 3, 3);
    const auto serial = run_searchlight(subject, "sentence", iota_rows(12), y, plan, 4.0, {}, 1);
    const auto parallel = run_searchlight(subject, "sentence", iota_rows(12), y, plan, 4.0, {}, 4);
    CHECK(serial.accuracy == parallel.accuracy);
    CHECK(serial.sphere_size == parallel.sphere_size);
    CHECK(serial.degenerate == parallel.degenerate);
}

TEST_CASE("area aggregation averages sphere accuracies per label") {
    VolumeGeometry g = testutil::make_grid_geometry(3, 1, 1);
    g.area_labels = {"A", "A", "B"};
    AccuracyMap map;
    map.accuracy = {0.6, 0.6, 0.4};
    map.sphere_size = {3, 3, 3};
    map.degenerate = {0, 0, 0};
    map.radius_mm = 4.0;
    const auto by_area = aggregate_by_area(g, map);
    REQUIRE(by_area.size() == 2);
    CHECK(by_area.at("A") == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(by_area.at("B") == doctest::Approx(0.4).epsilon(1e-15));

    g.area_labels = {"A", "", "A"};
    const auto skip_unlabeled = aggregate_by_area(g, map);
    REQUIRE(skip_unlabeled.size() == 1);
    CHECK(skip_unlabeled.at("A") == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("area ranking orders by mean rank with best first") {
    std::map<std::string, double> s1 = {{"a1", 0.70}, {"a2", 0.55}, {"a3", 0.50}};
    std::map<std::string, double> s2 = {{"a1", 0.65}, {"a2", 0.60}, {"a3", 0.45}};
    const auto ranking = rank_areas_across_subjects({s1, s2}, 0.52);
    REQUIRE(ranking.areas.size() == 3);
    CHECK(ranking.areas[0] == "a1");
    CHECK(ranking.mean_rank[0] == 1.0);
    CHECK(ranking.areas[1] == "a2");
    CHECK(ranking.mean_rank[1] == 2.0);
    CHECK(ranking.mean_accuracy[0] == doctest::Approx(0.675).epsilon(1e-12));
    CHECK(ranking.n_subjects == 2);
    // a1 and a2 pass the 0.52 cross-subject mean; a3 (mean 0.475) does not.
    CHECK(ranking.passes == std::vector<bool>{true, true, false});
}

TEST_CASE("reversed orders across two subjects average to the middle rank") {
    std::map<std::string, double> s1 = {{"a", 0.6}, {"b", 0.55}, {"c", 0.5}, {"d", 0.45}};
    std::map<std::string, double> s2 = {{"a", 0.45}, {"b", 0.5}, {"c", 0.55}, {"d", 0.6}};
    const auto ranking = rank_areas_across_subjects({s1, s2}, 0.52);
    for (double r : ranking.mean_rank) CHECK(r == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("every-subject thresholding is stricter than the mean") {
    std::map<std::string, double> s1 = {{"a", 0.70}, {"b", 0.54}};
    std::map<std::string, double> s2 = {{"a", 0.50}, {"b", 0.53}};
    const auto by_mean = rank_areas_across_subjects({s1, s2}, 0.52,
                                                    ThresholdMode::CrossSubjectMean);
    const auto strict = rank_areas_across_subjects({s1, s2}, 0.52,
                                                   ThresholdMode::EverySubject);
    // Area "a": mean 0.60 passes, but subject 2 fails it alone.
    // Area "b": passes both ways.
    REQUIRE(by_mean.areas == strict.areas);
    for (std::size_t i = 0; i < by_mean.areas.size(); ++i) {
        if (strict.passes[i]) CHECK(by_mean.passes[i]);
        if (by_mean.areas[i] == "a") {
            CHECK(by_mean.passes[i]);
            CHECK_FALSE(strict.passes[i]);
        }
    }
}

TEST_CASE("raising the threshold only shrinks the passing set") {
    std::map<std::string, double> s1 = {{"a", 0.7}, {"b", 0.6}, {"c", 0.5}, {"d", 0.4}};
    const auto low = rank_areas_across_subjects({s1}, 0.45);
    const auto high = rank_areas_across_subjects({s1}, 0.55);
    for (std::size_t i = 0; i < low.areas.size(); ++i)
        if (high.passes[i]) CHECK(low.passes[i]);
}

TEST_CASE("disjoint area sets across subjects are rejected") {
    std::map<std::string, double> s1 = {{"a", 0.6}};
    std::map<std::string, double> s2 = {{"b", 0.6}};
    CHECK_THROWS_AS((void)rank_areas_across_subjects({s1, s2}, 0.52), DegenerateInput);
    CHECK_THROWS_AS((void)rank_areas_across_subjects({}, 0.52), InvalidArgument);
}

TEST_CASE("accuracy maps round trip through float32 files") {
    const TempDir tmp;
    AccuracyMap map;
    map.accuracy = {0.5, 0.75, 1.0, 0.4375};   // all float32-representable
    map.sphere_size = {33, 33, 20, 11};
    map.degenerate = {0, 0, 0, 1};
    map.radius_mm = 4.0;
    const auto path = tmp / "map.f32";
    write_accuracy_map(path, map);
    CHECK(read_accuracy_map(path) == map.accuracy);
}

TEST_CASE("area ranking csv lists passing areas in order") {
    const TempDir tmp;
    std::map<std::string, double> s1 = {{"top", 0.7}, {"mid", 0.6}, {"low", 0.3}};
    const auto ranking = rank_areas_across_subjects({s1}, 0.52);
    const auto path = tmp / "ranking.csv";
    write_area_ranking(path, ranking);

    std::ifstream in(path);
    std::string header, line1, line2, rest;
    REQUIRE(std::getline(in, header));
    CHECK(header == "area,mean_accuracy,mean_rank,n_subjects");
    REQUIRE(std::getline(in, line1));
    REQUIRE(std::getline(in, line2));
    CHECK(line1.rfind("top,", 0) == 0);
    CHECK(line2.rfind("mid,", 0) == 0);
    CHECK_FALSE(std::getline(in, rest));   // "low" failed the threshold
}
