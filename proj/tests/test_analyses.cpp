#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "mvpa/analyses.hpp"
#include "mvpa/errors.hpp"
#include "mvpa/oracles.hpp"
#include "mvpa/rng.hpp"
#include "mvpa/stats.hpp"

using namespace mvpa;

namespace {

// Two-class Gaussian data with a mean offset of `separation` sigma on every
// voxel. Interleaves the classes so folds stay balanced on average.
void make_labeled(std::uint64_t seed, std::size_t n, std::size_t n_voxels, double separation,
                  Matrix& x, std::vector<int>& y) {
    Rng rng(seed);
    x = Matrix(n, n_voxels);
    y.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = (i % 2 == 0) ? +1 : -1;
        for (std::size_t j = 0; j < n_voxels; ++j)
            x(i, j) = rng.next_normal() + y[i] * separation / 2.0;
    }
}

} // namespace

// ---------------------------------------------------------------- folds --

TEST_CASE("132 items over 11 folds give exactly 12 each") {
    const auto plan = make_folds(132, 11, 5);
    CHECK(plan.n_items == 132);
    CHECK(plan.n_folds == 11);
    const auto members = plan.members();
    REQUIRE(members.size() == 11);
    std::set<std::size_t> seen;
    for (const auto& fold : members) {
        CHECK(fold.size() == 12);
        seen.insert(fold.begin(), fold.end());
    }
    CHECK(seen.size() == 132);
}

TEST_CASE("uneven splits differ by at most one") {
    const auto plan = make_folds(10, 4, 1);
    std::vector<std::size_t> sizes;
    for (const auto& fold : plan.members()) sizes.push_back(fold.size());
    std::sort(sizes.begin(), sizes.end());
    CHECK(sizes == std::vector<std::size_t>{2, 2, 3, 3});
}

TEST_CASE("n folds of n items is leave-one-out") {
    const auto plan = make_folds(5, 5, 9);
    for (const auto& fold : plan.members()) CHECK(fold.size() == 1);
}

TEST_CASE("fold plans are seed-deterministic") {
    CHECK(make_folds(50, 7, 3).assignment == make_folds(50, 7, 3).assignment);
    CHECK(make_folds(50, 7, 3).assignment != make_folds(50, 7, 4).assignment);
}

TEST_CASE("fold plan validation") {
    CHECK_THROWS_AS((void)make_folds(3, 4, 0), InvalidArgument);
    CHECK_THROWS_AS((void)make_folds(10, 1, 0), InvalidArgument);
    CHECK_THROWS_AS((void)make_folds(0, 2, 0), InvalidArgument);
}

// -------------------------------------------------------------- decoding --

TEST_CASE("decoding a strong planted signal is nearly perfect") {
    Matrix x;
    std::vector<int> y;
    make_labeled(11, 60, 20, 5.0, x, y);
    const auto plan = make_folds(60, 6, 2);
    const auto scores = decode_cv(x, y, plan);
    CHECK(scores.accuracy >= 0.95);
}

TEST_CASE("pooled accuracy recombines exactly from the fold counts") {
    Matrix x;
    std::vector<int> y;
    make_labeled(12, 40, 8, 1.0, x, y);   // weak signal: accuracies vary by fold
    const auto plan = make_folds(40, 5, 3);
    const auto scores = decode_cv(x, y, plan);

    std::size_t total_correct = 0, total = 0;
    REQUIRE(scores.fold_correct.size() == 5);
    REQUIRE(scores.fold_size.size() == 5);
    for (std::size_t f = 0; f < 5; ++f) {
        total_correct += scores.fold_correct[f];
        total += scores.fold_size[f];
        CHECK(scores.per_fold_accuracy[f] ==
              static_cast<double>(scores.fold_correct[f]) /
                  static_cast<double>(scores.fold_size[f]));
        CHECK(scores.per_fold_accuracy[f] >= 0.0);
        CHECK(scores.per_fold_accuracy[f] <= 1.0);
    }
    CHECK(total == 40);
    CHECK(scores.accuracy == static_cast<double>(total_correct) / 40.0);
}

TEST_CASE("identical feature rows decode without crashing") {
    Matrix x(12, 5, 1.0);
    std::vector<int> y(12);
    for (std::size_t i = 0; i < 12; ++i) y[i] = (i % 2 == 0) ? +1 : -1;
    const auto plan = make_folds(12, 3, 4);
    const auto scores = decode_cv(x, y, plan);
    CHECK(scores.accuracy >= 0.0);
    CHECK(scores.accuracy <= 1.0);
}

TEST_CASE("a single-class training split names the offending fold") {
    const Matrix x(4, 2, 0.0);
    const std::vector<int> y = {+1, +1, +1, -1};
    FoldPlan plan;
    plan.n_items = 4;
    plan.n_folds = 2;
    plan.assignment = {1, 1, 1, 0};   // fold 0 trains on items 0..2: all +1
    try {
        (void)decode_cv(x, y, plan);
        FAIL("expected DegenerateInput");
    } catch (const DegenerateInput& e) {
        CHECK(std::string(e.what()).find("fold 0") != std::string::npos);
    }
}

TEST_CASE("decode input validation") {
    Matrix x;
    std::vector<int> y;
    make_labeled(13, 10, 3, 1.0, x, y);
    const auto plan = make_folds(10, 2, 0);
    auto bad_y = y;
    bad_y[0] = 2;
    CHECK_THROWS_AS((void)decode_cv(x, bad_y, plan), InvalidArgument);
    CHECK_THROWS_AS((void)decode_cv(x, y, make_folds(9, 3, 0)), InvalidArgument);
    x(0, 0) = std::nan("");
    CHECK_THROWS_AS((void)decode_cv(x, y, plan), DegenerateInput);
}

// ----------------------------------------------------------- permutation --

TEST_CASE("a strong signal reaches the smallest reachable p-value") {
    Matrix x;
    std::vector<int> y;
    make_labeled(14, 40, 15, 6.0, x, y);
    const auto plan = make_folds(40, 5, 5);
    const auto test = permutation_pvalue(x, y, plan, 99, 0.05, 21);
    CHECK(test.observed_accuracy >= 0.95);
    CHECK(test.p_value == doctest::Approx(1.0 / 100.0).epsilon(1e-15));
    CHECK(test.significant);
    CHECK(test.n_permutations == 99);
    CHECK(test.permuted_accuracies.size() == 99);
}

TEST_CASE("anti-learnable labels drive p to exactly one") {
    // Constant features make every decision equal to the bias, whose sign
    // is the training majority. Under leave-one-out with a balanced label
    // vector the held-out item is always the training minority, so every
    // prediction is wrong: observed accuracy is exactly 0, and the same
    // argument applies to every shuffled labeling. With all permuted runs
    // tying the observed one, the add-one count gives p = 1 exactly.
    Matrix x(12, 4, 2.5);
    std::vector<int> y(12);
    for (std::size_t i = 0; i < 12; ++i) y[i] = (i % 2 == 0) ? +1 : -1;
    const auto plan = make_folds(12, 12, 6);
    const auto test = permutation_pvalue(x, y, plan, 25, 0.05, 22);
    CHECK(test.observed_accuracy == 0.0);
    CHECK(test.p_value == 1.0);
    CHECK_FALSE(test.significant);
    for (double a : test.permuted_accuracies)
        CHECK(a == 0.0);
}

TEST_CASE("p-values stay within the reachable range on noise") {
    Matrix x;
    std::vector<int> y;
    make_labeled(15, 24, 6, 0.0, x, y);
    const auto plan = make_folds(24, 4, 7);
    const auto test = permutation_pvalue(x, y, plan, 19, 0.05, 23);
    CHECK(test.p_value >= 1.0 / 20.0 - 1e-15);
    CHECK(test.p_value <= 1.0);
}

TEST_CASE("permutation results do not depend on the thread count") {
    Matrix x;
    std::vector<int> y;
    make_labeled(16, 30, 8, 1.0, x, y);
    const auto plan = make_folds(30, 5, 8);
    const auto serial = permutation_pvalue(x, y, plan, 40, 0.05, 24, {}, 1);
    const auto parallel = permutation_pvalue(x, y, plan, 40, 0.05, 24, {}, 3);
    CHECK(serial.p_value == parallel.p_value);
    CHECK(serial.observed_accuracy == parallel.observed_accuracy);
    CHECK(serial.permuted_accuracies == parallel.permuted_accuracies);
}

TEST_CASE("significance respects alpha") {
    Matrix x;
    std::vector<int> y;
    make_labeled(17, 40, 15, 6.0, x, y);
    const auto plan = make_folds(40, 5, 9);
    const auto strict = permutation_pvalue(x, y, plan, 99, 0.005, 25);
    CHECK(strict.p_value == doctest::Approx(0.01).epsilon(1e-12));
    CHECK_FALSE(strict.significant);
    CHECK_THROWS_AS((void)permutation_pvalue(x, y, plan, 0, 0.05, 0), InvalidArgument);
    CHECK_THROWS_AS((void)permutation_pvalue(x, y, plan, 10, 1.5, 0), InvalidArgument);
}

// ------------------------------------------------------------ clustering --

TEST_CASE("well-separated class blobs sort into pure clusters") {
    Rng rng(31);
    const std::size_t n = 30;
    Matrix x(n, 6);
    std::vector<bool> is_abstract(n);
    for (std::size_t i = 0; i < n; ++i) {
        is_abstract[i] = (i % 2 == 1);
        const double center = is_abstract[i] ? 8.0 : -8.0;
        for (std::size_t j = 0; j < 6; ++j) x(i, j) = center + rng.next_normal();
    }
    KmeansConfig config;
    config.seed = 41;
    const auto report = cluster_composition(x, is_abstract, config);
    REQUIRE(report.abstract_proportion.size() == 2);
    auto props = report.abstract_proportion;
    std::sort(props.begin(), props.end());
    CHECK(props[0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(props[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(report.cluster_sizes[0] + report.cluster_sizes[1] == n);
    CHECK(report.dataset_abstract_proportion == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("cluster proportions recombine to the dataset share") {
    Rng rng(32);
    Matrix x(25, 4);
    std::vector<bool> is_abstract(25);
    for (std::size_t i = 0; i < 25; ++i) {
        is_abstract[i] = rng.next_double() < 0.4;
        for (std::size_t j = 0; j < 4; ++j) x(i, j) = rng.next_normal();
    }
    KmeansConfig config;
    config.k = 3;
    config.seed = 42;
    const auto report = cluster_composition(x, is_abstract, config);
    double weighted = 0.0;
    for (std::size_t c = 0; c < 3; ++c)
        weighted += report.abstract_proportion[c] *
                    static_cast<double>(report.cluster_sizes[c]);
    weighted /= 25.0;
    CHECK(weighted == doctest::Approx(report.dataset_abstract_proportion).epsilon(1e-12));
}

TEST_CASE("cluster_composition validates its inputs") {
    CHECK_THROWS_AS((void)cluster_composition(Matrix(4, 2), std::vector<bool>(3)),
                    InvalidArgument);
}

// -------------------------------------------------------------- encoding --

TEST_CASE("pairwise accuracy is 1 when predictions match observations") {
    Rng rng(51);
    Matrix obs(10, 5);
    for (std::size_t i = 0; i < obs.size(); ++i) obs.data()[i] = rng.next_normal();
    const auto acc = pairwise_accuracy(obs, obs);
    for (double a : acc) CHECK(a == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("cosine ties count as failures") {
    // Prediction (1,1,1) is equidistant from all three one-hot observations.
    const Matrix obs = Matrix::from_rows({{1.0, 0.0, 0.0},
                                          {0.0, 1.0, 0.0},
                                          {0.0, 0.0, 1.0}});
    Matrix pred(3, 3, 1.0);
    const auto acc = pairwise_accuracy(pred, obs);
    for (double a : acc) CHECK(a == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
}

TEST_CASE("pairwise accuracy agrees with the oracle") {
    Rng rng(52);
    Matrix pred(20, 8), obs(20, 8);
    for (std::size_t i = 0; i < pred.size(); ++i) pred.data()[i] = rng.next_normal();
    for (std::size_t i = 0; i < obs.size(); ++i)
        obs.data()[i] = 0.6 * pred.data()[i] + 0.8 * rng.next_normal();
    const auto fast = pairwise_accuracy(pred, obs);
    const auto slow = oracles::pairwise_accuracy(pred, obs);
    REQUIRE(fast.size() == slow.size());
    for (std::size_t i = 0; i < fast.size(); ++i)
        CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-12));
}

TEST_CASE("pairwise accuracy ignores positive row rescaling") {
    Rng rng(53);
    Matrix pred(8, 4), obs(8, 4);
    for (std::size_t i = 0; i < pred.size(); ++i) pred.data()[i] = rng.next_normal();
    for (std::size_t i = 0; i < obs.size(); ++i) obs.data()[i] = rng.next_normal();
    const auto base = pairwise_accuracy(pred, obs);
    Matrix scaled = pred;
    for (std::size_t i = 0; i < 8; ++i) {
        const double s = 0.1 + rng.next_double() * 5.0;
        for (std::size_t j = 0; j < 4; ++j) scaled(i, j) *= s;
    }
    CHECK(pairwise_accuracy(scaled, obs) == base);
}

TEST_CASE("pairwise accuracy validation") {
    CHECK_THROWS_AS((void)pairwise_accuracy(Matrix(3, 2), Matrix(3, 3)), InvalidArgument);
    CHECK_THROWS_AS((void)pairwise_accuracy(Matrix(1, 2, 1.0), Matrix(1, 2, 1.0)),
                    InvalidArgument);
}

TEST_CASE("an exact embedding-to-activation map encodes nearly perfectly") {
    Rng rng(54);
    const std::size_t n = 24, dim = 6;
    Matrix emb(n, dim);
    for (std::size_t i = 0; i < emb.size(); ++i) emb.data()[i] = rng.next_normal();
    const Matrix x = emb;   // activation is the embedding itself
    std::vector<int> targets(n);
    for (std::size_t i = 0; i < n; ++i) targets[i] = (i % 2 == 0) ? +1 : -1;
    const auto plan = make_folds(n, 6, 10);
    const auto result = encode_cv(emb, x, targets, plan, 1e-6);
    CHECK(result.mean_accuracy >= 0.99);
    CHECK(result.mean_accuracy_concrete >= 0.99);
    CHECK(result.mean_accuracy_abstract >= 0.99);
    REQUIRE(result.per_concept_accuracy.size() == n);
}

TEST_CASE("random embeddings against structured activations sit near chance") {
    Matrix x;
    std::vector<int> targets;
    make_labeled(55, 60, 30, 3.0, x, targets);
    const auto emb = random_embeddings(60, 20, 99);
    const auto plan = make_folds(60, 5, 11);
    const auto result = encode_cv(emb.vectors, x, targets, plan, 1.0);
    CHECK(result.mean_accuracy >= 0.42);
    CHECK(result.mean_accuracy <= 0.58);
}

TEST_CASE("encoding results follow a consistent row permutation") {
    Rng rng(56);
    const std::size_t n = 18, dim = 5, n_voxels = 7;
    Matrix emb(n, dim), x(n, n_voxels);
    for (std::size_t i = 0; i < emb.size(); ++i) emb.data()[i] = rng.next_normal();
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.next_normal();
    std::vector<int> targets(n);
    for (std::size_t i = 0; i < n; ++i) targets[i] = (i % 2 == 0) ? +1 : -1;
    const auto plan = make_folds(n, 3, 12);
    const auto base = encode_cv(emb, x, targets, plan, 1.0);

    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = (i * 5) % n;   // 5 coprime to 18
    Matrix emb_p(n, dim), x_p(n, n_voxels);
    std::vector<int> targets_p(n);
    FoldPlan plan_p;
    plan_p.n_items = n;
    plan_p.n_folds = plan.n_folds;
    plan_p.assignment.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < dim; ++j) emb_p(i, j) = emb(perm[i], j);
        for (std::size_t j = 0; j < n_voxels; ++j) x_p(i, j) = x(perm[i], j);
        targets_p[i] = targets[perm[i]];
        plan_p.assignment[i] = plan.assignment[perm[i]];
    }
    const auto permuted = encode_cv(emb_p, x_p, targets_p, plan_p, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        CHECK(permuted.per_concept_accuracy[i] ==
              doctest::Approx(base.per_concept_accuracy[perm[i]]).epsilon(1e-9));
}

TEST_CASE("random baseline with one initialization reproduces encode_cv") {
    Matrix x;
    std::vector<int> targets;
    make_labeled(57, 20, 10, 1.0, x, targets);
    const auto plan = make_folds(20, 4, 13);
    const std::uint64_t seed = 31;
    const auto baseline = random_baseline_accuracy(x, targets, plan, 12, 1, 1.0, seed);
    const auto emb = random_embeddings(20, 12, derive_seed(seed, 0));
    const auto direct = encode_cv(emb.vectors, x, targets, plan, 1.0);
    CHECK(baseline.mean.mean_accuracy == direct.mean_accuracy);
    CHECK(baseline.per_init_mean_accuracy.size() == 1);
    CHECK(baseline.per_init_mean_accuracy[0] == direct.mean_accuracy);
}

TEST_CASE("random baseline mean matches its per-init accuracies") {
    Matrix x;
    std::vector<int> targets;
    make_labeled(58, 16, 6, 0.0, x, targets);
    const auto plan = make_folds(16, 4, 14);
    const auto baseline = random_baseline_accuracy(x, targets, plan, 8, 20, 1.0, 32, 2);
    CHECK(baseline.per_init_mean_accuracy.size() == 20);
    CHECK(baseline.mean.mean_accuracy ==
          doctest::Approx(mean(baseline.per_init_mean_accuracy)).epsilon(1e-12));
    const auto serial = random_baseline_accuracy(x, targets, plan, 8, 20, 1.0, 32, 1);
    CHECK(serial.mean.mean_accuracy == baseline.mean.mean_accuracy);
    CHECK(serial.per_init_mean_accuracy == baseline.per_init_mean_accuracy);
}

// ------------------------------------------------------------------- rsa --

TEST_CASE("condensed rdm layout is row-major over pairs") {
    const Matrix x = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}});
    const auto rdm = compute_rdm(x);
    REQUIRE(rdm.size() == 3);
    CHECK(rdm[0] == doctest::Approx(cosine_distance(x.row(0), x.row(1))).epsilon(1e-15));
    CHECK(rdm[1] == doctest::Approx(cosine_distance(x.row(0), x.row(2))).epsilon(1e-15));
    CHECK(rdm[2] == doctest::Approx(cosine_distance(x.row(1), x.row(2))).epsilon(1e-15));

    const auto flat = compute_rdm(Matrix(5, 3, 1.0));
    REQUIRE(flat.size() == 10);
    for (double d : flat)
        CHECK(std::abs(d) <= 1e-15);
    CHECK_THROWS_AS((void)compute_rdm(Matrix(1, 3, 1.0)), InvalidArgument);
}

TEST_CASE("rsa of an rdm with itself is 1 and with its reflection -1") {
    Rng rng(61);
    Matrix x(10, 6);
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.next_normal();
    const auto rdm = compute_rdm(x);
    CHECK(rsa_correlate(rdm, rdm) == doctest::Approx(1.0).epsilon(1e-12));

    const double top = *std::max_element(rdm.begin(), rdm.end());
    std::vector<double> reflected(rdm.size());
    for (std::size_t i = 0; i < rdm.size(); ++i) reflected[i] = top - rdm[i];
    CHECK(rsa_correlate(rdm, reflected) == doctest::Approx(-1.0).epsilon(1e-12));

    CHECK_THROWS_AS((void)rsa_correlate(rdm, std::vector<double>(3, 0.0)), InvalidArgument);
    CHECK_THROWS_AS((void)rsa_correlate(std::vector<double>(rdm.size(), 0.5), rdm),
                    DegenerateInput);
}

TEST_CASE("rdm geometry survives an orthogonal rotation") {
    Rng rng(62);
    Matrix x(12, 6);
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.next_normal();
    const Matrix q = oracles::random_orthogonal(6, 63);
    Matrix rotated(12, 6);
    for (std::size_t i = 0; i < 12; ++i)
        for (std::size_t j = 0; j < 6; ++j) {
            double v = 0.0;
            for (std::size_t k = 0; k < 6; ++k) v += x(i, k) * q(k, j);
            rotated(i, j) = v;
        }
    const auto a = compute_rdm(x);
    const auto b = compute_rdm(rotated);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-9));
    CHECK(rsa_correlate(a, b) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("rsa_by_class subsets the classes independently") {
    Rng rng(64);
    const std::size_t n = 14, n_voxels = 9, dim = 5;
    Matrix x(n, n_voxels), emb(n, dim);
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.next_normal();
    for (std::size_t i = 0; i < emb.size(); ++i) emb.data()[i] = rng.next_normal();
    std::vector<int> targets(n);
    for (std::size_t i = 0; i < n; ++i) targets[i] = (i < 8) ? +1 : -1;

    const auto result = rsa_by_class(x, emb, targets);

    std::vector<std::size_t> concrete_rows, abstract_rows;
    for (std::size_t i = 0; i < n; ++i)
        (targets[i] == +1 ? concrete_rows : abstract_rows).push_back(i);
    const double rho_c = rsa_correlate(compute_rdm(gather_rows(x, concrete_rows)),
                                       compute_rdm(gather_rows(emb, concrete_rows)));
    const double rho_a = rsa_correlate(compute_rdm(gather_rows(x, abstract_rows)),
                                       compute_rdm(gather_rows(emb, abstract_rows)));
    CHECK(result.rho_concrete == rho_c);
    CHECK(result.rho_abstract == rho_a);
}

TEST_CASE("rsa_by_class needs three rows per class") {
    Matrix x(5, 4, 0.0), emb(5, 3, 0.0);
    Rng rng(65);
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.next_normal();
    for (std::size_t i = 0; i < emb.size(); ++i) emb.data()[i] = rng.next_normal();
    const std::vector<int> targets = {+1, +1, +1, -1, -1};
    CHECK_THROWS_AS((void)rsa_by_class(x, emb, targets), InvalidArgument);
}
