#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "mvpa/analyses.hpp"
#include "mvpa/errors.hpp"
#include "mvpa/selection.hpp"
#include "mvpa/synth.hpp"
#include "test_util.hpp"

using namespace mvpa;
using testutil::TempDir;

namespace {

PlantSpec small_spec(std::uint64_t seed) {
    PlantSpec spec;
    spec.subject_id = "synth-test";
    spec.n_concrete = 20;
    spec.n_abstract = 18;
    spec.n_excluded = 10;
    spec.grid = {5, 5, 4};
    spec.paradigms = {"sentence", "picture"};
    spec.noise_sigma = 1.0;
    spec.seed = seed;
    return spec;
}

} // namespace

TEST_CASE("the same spec and seed reproduce the dataset bit for bit") {
    const auto spec = small_spec(100);
    const auto a = generate_subject(spec);
    const auto b = generate_subject(spec);
    CHECK(a.subject.activation("sentence") == b.subject.activation("sentence"));
    CHECK(a.subject.activation("picture") == b.subject.activation("picture"));
    REQUIRE(a.concepts.size() == b.concepts.size());
    for (std::size_t i = 0; i < a.concepts.size(); ++i) {
        CHECK(a.concepts.at(i).id == b.concepts.at(i).id);
        CHECK(a.concepts.at(i).rating == b.concepts.at(i).rating);
    }

    auto other = spec;
    other.seed = 101;
    const auto c = generate_subject(other);
    CHECK_FALSE(a.subject.activation("sentence") == c.subject.activation("sentence"));
}

TEST_CASE("generated ratings reproduce the requested split exactly") {
    const auto ds = generate_subject(small_spec(200));
    CHECK(ds.concepts.size() == 48);
    CHECK(ds.concepts.count(ConcretenessLabel::Concrete) == 20);
    CHECK(ds.concepts.count(ConcretenessLabel::Abstract) == 18);
    CHECK(ds.concepts.count(ConcretenessLabel::Excluded) == 10);

    // The default full-size split works too.
    auto big = small_spec(201);
    big.n_concrete = 69;
    big.n_abstract = 63;
    big.n_excluded = 48;
    const auto ds_big = generate_subject(big);
    CHECK(ds_big.concepts.count(ConcretenessLabel::Concrete) == 69);
    CHECK(ds_big.concepts.count(ConcretenessLabel::Abstract) == 63);
    CHECK(ds_big.concepts.count(ConcretenessLabel::Excluded) == 48);
}

TEST_CASE("class separation adds exactly the documented shifts") {
    auto with_effect = small_spec(300);
    PlantedEffect effect;
    effect.kind = EffectKind::ClassSeparation;
    effect.voxels = {3, 7, 50};
    effect.effect_size = 5.0;
    with_effect.effects = {effect};

    auto without_effect = with_effect;
    without_effect.effects.clear();

    const auto planted = generate_subject(with_effect);
    const auto clean = generate_subject(without_effect);
    const auto& labels = planted.concepts.labels();

    for (const std::string paradigm : {"sentence", "picture"}) {
        const auto& a = planted.subject.activation(paradigm);
        const auto& b = clean.subject.activation(paradigm);
        for (std::size_t i = 0; i < a.rows(); ++i) {
            double expected = 0.0;
            if (labels[i] == ConcretenessLabel::Concrete) expected = +2.5;
            if (labels[i] == ConcretenessLabel::Abstract) expected = -2.5;
            for (std::size_t j = 0; j < a.cols(); ++j) {
                const double diff = a(i, j) - b(i, j);
                const bool is_planted = (j == 3 || j == 7 || j == 50);
                if (is_planted)
                    CHECK(diff == doctest::Approx(expected).scale(1.0).epsilon(1e-5));
                else
                    CHECK(diff == 0.0);
            }
        }
    }
}

TEST_CASE("latent factor structure clusters without class information") {
    auto spec = small_spec(400);
    spec.grid = {5, 5, 4};
    PlantedEffect effect;
    effect.kind = EffectKind::LatentFactor;
    effect.effect_size = 5.0;   // all voxels
    spec.effects = {effect};
    const auto ds = generate_subject(spec);

    const auto rows = ds.concepts.labeled_indices();
    const auto targets = ds.concepts.labeled_targets();
    std::vector<bool> is_abstract(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) is_abstract[i] = targets[i] == -1;

    KmeansConfig config;
    config.seed = 9;
    const auto report = cluster_composition(
        gather_rows(ds.subject.activation("sentence"), rows), is_abstract, config);
    const double expected = ds.concepts.abstract_proportion();
    for (double p : report.abstract_proportion)
        CHECK(p == doctest::Approx(expected).scale(1.0).epsilon(0.06));
    // The factor splits each class roughly in half, so neither cluster
    // dominates.
    for (auto size : report.cluster_sizes) {
        CHECK(size >= 13);
        CHECK(size <= 25);
    }
}

TEST_CASE("a noiseless linear map is decodable from the embedding") {
    PlantSpec spec;
    spec.subject_id = "lm";
    spec.n_concrete = 20;
    spec.n_abstract = 18;
    spec.n_excluded = 0;
    spec.grid = {5, 5, 2};
    spec.paradigms = {"sentence"};
    spec.noise_sigma = 0.0;
    spec.embeddings = {{"emb", 12}};
    PlantedEffect effect;
    effect.kind = EffectKind::LinearMap;
    effect.source_embedding = "emb";
    effect.effect_size = 1.0;
    spec.effects = {effect};
    spec.seed = 500;

    const auto ds = generate_subject(spec);
    const auto rows = ds.concepts.labeled_indices();
    const auto targets = ds.concepts.labeled_targets();
    const auto plan = make_folds(rows.size(), 5, 77);
    const auto result = encode_cv(gather_rows(ds.embeddings.at("emb").vectors, rows),
                                  gather_rows(ds.subject.activation("sentence"), rows),
                                  targets, plan, 1e-4);
    CHECK(result.mean_accuracy >= 0.99);
}

TEST_CASE("cross-paradigm stability raises the planted voxels to the top") {
    auto spec = small_spec(600);
    spec.paradigms = {"sentence", "picture", "wordcloud"};
    PlantedEffect effect;
    effect.kind = EffectKind::CrossParadigmStability;
    effect.voxels = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    effect.effect_size = 3.0;
    spec.effects = {effect};

    const auto ds = generate_subject(spec);
    const auto selection = select_stable(ds.subject, 10);
    CHECK(selection.indices == effect.voxels);
}

TEST_CASE("roi and area declarations come through the geometry") {
    auto spec = small_spec(700);
    spec.rois = {{"IFG", {0, 1, 2}}, {"MTG", {2, 3}}};
    spec.areas = slab_areas(spec.grid, 2);
    const auto ds = generate_subject(spec);

    const auto ifg = select_roi(ds.subject.geometry, {"IFG"});
    CHECK(ifg.indices == std::vector<std::size_t>{0, 1, 2});
    const auto both = select_roi(ds.subject.geometry, {"IFG", "MTG"});
    CHECK(both.indices == std::vector<std::size_t>{0, 1, 2, 3});

    const auto areas = ds.subject.geometry.area_names();
    CHECK(areas == std::set<std::string>{"slab01", "slab02"});
}

TEST_CASE("slab partition covers the grid with the remainder in the last slab") {
    const auto slabs = slab_areas({4, 4, 5}, 2);
    REQUIRE(slabs.size() == 2);
    CHECK(slabs.at("slab01").size() == 32);   // z layers 0-1
    CHECK(slabs.at("slab02").size() == 48);   // z layers 2-4
    std::set<std::size_t> all;
    for (const auto& [name, voxels] : slabs) all.insert(voxels.begin(), voxels.end());
    CHECK(all.size() == 80);
    CHECK(*all.rbegin() == 79);

    CHECK_THROWS_AS((void)slab_areas({4, 4, 5}, 0), InvalidArgument);
    CHECK_THROWS_AS((void)slab_areas({4, 4, 5}, 6), InvalidArgument);
}

TEST_CASE("generated datasets survive a disk round trip unchanged") {
    const TempDir tmp;
    auto spec = small_spec(800);
    spec.embeddings = {{"emb", 8}};
    spec.rois = {{"IFG", {1, 5, 9}}};
    const auto ds = generate_subject(spec);
    write_dataset(tmp.path, ds);
    const auto loaded = load_dataset(tmp.path);

    CHECK(loaded.subject.activation("sentence") == ds.subject.activation("sentence"));
    CHECK(loaded.subject.activation("picture") == ds.subject.activation("picture"));
    CHECK(loaded.embeddings.at("emb").vectors == ds.embeddings.at("emb").vectors);
    CHECK(loaded.subject.geometry.roi_labels == ds.subject.geometry.roi_labels);
    for (std::size_t i = 0; i < ds.concepts.size(); ++i)
        CHECK(loaded.concepts.at(i).rating == ds.concepts.at(i).rating);
}

TEST_CASE("plant spec validation") {
    auto spec = small_spec(900);

    auto no_concrete = spec;
    no_concrete.n_concrete = 0;
    CHECK_THROWS_AS((void)generate_subject(no_concrete), InvalidArgument);

    auto bad_voxel = spec;
    PlantedEffect effect;
    effect.voxels = {spec.n_voxels()};
    bad_voxel.effects = {effect};
    CHECK_THROWS_AS((void)generate_subject(bad_voxel), InvalidArgument);

    auto bad_paradigm = spec;
    bad_paradigm.paradigms = {"sentence", "audio"};
    CHECK_THROWS_AS((void)generate_subject(bad_paradigm), InvalidArgument);

    auto dup_paradigm = spec;
    dup_paradigm.paradigms = {"sentence", "sentence"};
    CHECK_THROWS_AS((void)generate_subject(dup_paradigm), InvalidArgument);

    auto dangling_map = spec;
    PlantedEffect lm;
    lm.kind = EffectKind::LinearMap;
    lm.source_embedding = "nope";
    dangling_map.effects = {lm};
    CHECK_THROWS_AS((void)generate_subject(dangling_map), InvalidArgument);

    auto bad_roi = spec;
    bad_roi.rois = {{"IFG", {9999}}};
    CHECK_THROWS_AS((void)generate_subject(bad_roi), InvalidArgument);

    auto bad_area = spec;
    bad_area.areas = {{"a1", {0}}, {"a2", {0}}};   // voxel in two areas
    CHECK_THROWS_AS((void)generate_subject(bad_area), InvalidArgument);

    auto negative_noise = spec;
    negative_noise.noise_sigma = -1.0;
    CHECK_THROWS_AS((void)generate_subject(negative_noise), InvalidArgument);
}

TEST_CASE("effect kind names") {
    CHECK(to_string(EffectKind::ClassSeparation) == "class_separation");
    CHECK(to_string(EffectKind::LatentFactor) == "latent_factor");
    CHECK(to_string(EffectKind::LinearMap) == "linear_map");
    CHECK(to_string(EffectKind::CrossParadigmStability) == "cross_paradigm_stability");
}
