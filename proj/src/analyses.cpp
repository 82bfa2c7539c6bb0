#include "mvpa/analyses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mvpa/parallel.hpp"
#include "mvpa/ridge.hpp"
#include "mvpa/rng.hpp"
#include "mvpa/stats.hpp"

namespace mvpa {

// ---------------------------------------------------------------- folds --

std::vector<std::vector<std::size_t>> FoldPlan::members() const {
    std::vector<std::vector<std::size_t>> out(n_folds);
    for (std::size_t item = 0; item < assignment.size(); ++item)
        out[assignment[item]].push_back(item);
    return out;
}

FoldPlan make_folds(std::size_t n_items, std::size_t n_folds, std::uint64_t seed) {
    if (n_folds < 2) throw InvalidArgument("make_folds: need at least 2 folds");
    if (n_items < n_folds)
        throw InvalidArgument("make_folds: more folds (" + std::to_string(n_folds) +
                              ") than items (" + std::to_string(n_items) + ")");
    std::vector<std::size_t> items(n_items);
    std::iota(items.begin(), items.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(items);

    FoldPlan plan;
    plan.n_items = n_items;
    plan.n_folds = n_folds;
    plan.assignment.assign(n_items, 0);
    for (std::size_t pos = 0; pos < n_items; ++pos)
        plan.assignment[items[pos]] = pos % n_folds;
    return plan;
}

// -------------------------------------------------------------- decoding --

namespace {

struct FoldKernel {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    double gamma = 0.0;
    Matrix k_train;   // train x train
    Matrix k_test;    // test x train
};

// Kernels depend on the features and the fold plan but not on the labels,
// so a permutation test builds them once and reuses them for every permuted
// label vector. Entries match what svm_fit would compute on the gathered
// fold submatrix, term for term.
std::vector<FoldKernel> build_fold_kernels(const Matrix& x, const FoldPlan& folds,
                                           const SvmConfig& config) {
    const std::size_t n = x.rows();
    for (double v : std::span<const double>(x.data(), x.size()))
        if (!std::isfinite(v)) throw DegenerateInput("decode_cv: non-finite feature value");

    Matrix dist2(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        dist2(i, i) = 0.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = squared_distance(x.row(i), x.row(j));
            dist2(i, j) = d;
            dist2(j, i) = d;
        }
    }

    const auto members = folds.members();
    std::vector<FoldKernel> kernels(folds.n_folds);
    for (std::size_t f = 0; f < folds.n_folds; ++f) {
        FoldKernel& fk = kernels[f];
        fk.test = members[f];
        fk.train.reserve(n - fk.test.size());
        for (std::size_t item = 0; item < n; ++item)
            if (folds.assignment[item] != f) fk.train.push_back(item);

        fk.gamma = config.gamma ? *config.gamma : rbf_gamma_scale(x, fk.train);
        const std::size_t nt = fk.train.size();
        fk.k_train = Matrix(nt, nt);
        for (std::size_t a = 0; a < nt; ++a) {
            fk.k_train(a, a) = 1.0;
            for (std::size_t b = a + 1; b < nt; ++b) {
                const double k = std::exp(-fk.gamma * dist2(fk.train[a], fk.train[b]));
                fk.k_train(a, b) = k;
                fk.k_train(b, a) = k;
            }
        }
        fk.k_test = Matrix(fk.test.size(), nt);
        for (std::size_t t = 0; t < fk.test.size(); ++t)
            for (std::size_t a = 0; a < nt; ++a)
                fk.k_test(t, a) = std::exp(-fk.gamma * dist2(fk.test[t], fk.train[a]));
    }
    return kernels;
}

DecodeScores score_folds(const std::vector<FoldKernel>& kernels, const std::vector<int>& y,
                         const SvmConfig& config) {
    DecodeScores scores;
    scores.per_fold_accuracy.resize(kernels.size());
    scores.fold_correct.resize(kernels.size());
    scores.fold_size.resize(kernels.size());

    std::size_t total_correct = 0, total = 0;
    std::vector<int> y_train;
    for (std::size_t f = 0; f < kernels.size(); ++f) {
        const FoldKernel& fk = kernels[f];
        y_train.clear();
        bool has_pos = false, has_neg = false;
        for (auto item : fk.train) {
            y_train.push_back(y[item]);
            if (y[item] == 1) has_pos = true;
            else has_neg = true;
        }
        if (!has_pos || !has_neg)
            throw DegenerateInput("decode_cv: training split of fold " + std::to_string(f) +
                                  " contains a single class");

        const SmoSolution sol = smo_solve(fk.k_train, y_train, config.c, config.tol,
                                          config.max_iter);
        std::size_t correct = 0;
        for (std::size_t t = 0; t < fk.test.size(); ++t) {
            double g = 0.0;
            for (std::size_t a = 0; a < fk.train.size(); ++a)
                g += sol.alpha[a] * static_cast<double>(y_train[a]) * fk.k_test(t, a);
            g += sol.bias;
            const int predicted = g >= 0.0 ? 1 : -1;
            if (predicted == y[fk.test[t]]) ++correct;
        }
        scores.fold_correct[f] = correct;
        scores.fold_size[f] = fk.test.size();
        scores.per_fold_accuracy[f] =
            static_cast<double>(correct) / static_cast<double>(fk.test.size());
        total_correct += correct;
        total += fk.test.size();
    }
    scores.accuracy = static_cast<double>(total_correct) / static_cast<double>(total);
    return scores;
}

void check_labels(const Matrix& x, const std::vector<int>& y, const FoldPlan& folds) {
    if (x.rows() == 0 || x.cols() == 0) throw InvalidArgument("decode_cv: empty feature matrix");
    if (y.size() != x.rows())
        throw InvalidArgument("decode_cv: label count does not match rows");
    if (folds.n_items != x.rows())
        throw InvalidArgument("decode_cv: fold plan covers " + std::to_string(folds.n_items) +
                              " items, matrix has " + std::to_string(x.rows()) + " rows");
    for (int label : y)
        if (label != 1 && label != -1)
            throw InvalidArgument("decode_cv: labels must be +1 or -1");
}

} // namespace

DecodeScores decode_cv(const Matrix& x, const std::vector<int>& y, const FoldPlan& folds,
                       const SvmConfig& config) {
    check_labels(x, y, folds);
    const auto kernels = build_fold_kernels(x, folds, config);
    return score_folds(kernels, y, config);
}

PermutationTest permutation_pvalue(const Matrix& x, const std::vector<int>& y,
                                   const FoldPlan& folds, std::size_t n_permutations,
                                   double alpha, std::uint64_t seed, const SvmConfig& config,
                                   int n_threads) {
    if (n_permutations == 0)
        throw InvalidArgument("permutation_pvalue: need at least one permutation");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw InvalidArgument("permutation_pvalue: alpha must lie in (0, 1)");
    check_labels(x, y, folds);

    const auto kernels = build_fold_kernels(x, folds, config);

    PermutationTest result;
    result.alpha = alpha;
    result.n_permutations = n_permutations;
    result.observed_accuracy = score_folds(kernels, y, config).accuracy;
    result.permuted_accuracies.assign(n_permutations, 0.0);

    parallel_for(n_permutations, n_threads, [&](std::size_t p) {
        std::vector<int> shuffled = y;
        Rng rng(derive_seed(seed, p));
        rng.shuffle(shuffled);
        result.permuted_accuracies[p] = score_folds(kernels, shuffled, config).accuracy;
    });

    std::size_t at_least = 0;
    for (double acc : result.permuted_accuracies)
        if (acc >= result.observed_accuracy) ++at_least;
    result.p_value = static_cast<double>(1 + at_least) / static_cast<double>(n_permutations + 1);
    result.significant = result.p_value < alpha;
    return result;
}

// ------------------------------------------------------------ clustering --

ClusterReport cluster_composition(const Matrix& x, const std::vector<bool>& is_abstract,
                                  const KmeansConfig& config) {
    if (is_abstract.size() != x.rows())
        throw InvalidArgument("cluster_composition: flag count does not match rows");

    ClusterReport report;
    report.clustering = kmeans_cluster(x, config);

    report.cluster_sizes.assign(config.k, 0);
    std::vector<std::size_t> abstract_counts(config.k, 0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const std::size_t c = report.clustering.assignment[i];
        ++report.cluster_sizes[c];
        if (is_abstract[i]) ++abstract_counts[c];
    }
    report.abstract_proportion.assign(config.k, 0.0);
    for (std::size_t c = 0; c < config.k; ++c)
        report.abstract_proportion[c] = static_cast<double>(abstract_counts[c]) /
                                        static_cast<double>(report.cluster_sizes[c]);

    const std::size_t total_abstract =
        static_cast<std::size_t>(std::count(is_abstract.begin(), is_abstract.end(), true));
    report.dataset_abstract_proportion =
        static_cast<double>(total_abstract) / static_cast<double>(x.rows());
    return report;
}

// -------------------------------------------------------------- encoding --

std::vector<double> pairwise_accuracy(const Matrix& predicted, const Matrix& observed) {
    const std::size_t n = predicted.rows();
    if (observed.rows() != n || observed.cols() != predicted.cols())
        throw InvalidArgument("pairwise_accuracy: shape mismatch");
    if (n < 2) throw InvalidArgument("pairwise_accuracy: need at least 2 rows");

    std::vector<double> accuracy(n, 0.0);
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            dist[j] = cosine_distance(predicted.row(i), observed.row(j));
        std::size_t wins = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            if (dist[i] < dist[j]) ++wins;   // strict: a tie is a failure
        }
        accuracy[i] = static_cast<double>(wins) / static_cast<double>(n - 1);
    }
    return accuracy;
}

namespace {

void mean_class_accuracy(EncodingResult& result, const std::vector<int>& targets) {
    std::vector<double> concrete, abstract_;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets[i] == 1) concrete.push_back(result.per_concept_accuracy[i]);
        else abstract_.push_back(result.per_concept_accuracy[i]);
    }
    result.mean_accuracy = mean(result.per_concept_accuracy);
    result.mean_accuracy_concrete = concrete.empty() ? 0.0 : mean(concrete);
    result.mean_accuracy_abstract = abstract_.empty() ? 0.0 : mean(abstract_);
}

} // namespace

EncodingResult encode_cv(const Matrix& embeddings, const Matrix& x,
                         const std::vector<int>& targets, const FoldPlan& folds,
                         double lambda) {
    const std::size_t n = x.rows();
    if (embeddings.rows() != n)
        throw InvalidArgument("encode_cv: embedding row count does not match activations");
    if (targets.size() != n)
        throw InvalidArgument("encode_cv: target count does not match rows");
    if (folds.n_items != n)
        throw InvalidArgument("encode_cv: fold plan does not match row count");
    for (int t : targets)
        if (t != 1 && t != -1)
            throw InvalidArgument("encode_cv: targets must be +1 or -1");

    Matrix predicted(n, x.cols());
    const auto members = folds.members();
    for (std::size_t f = 0; f < folds.n_folds; ++f) {
        std::vector<std::size_t> train;
        train.reserve(n - members[f].size());
        for (std::size_t item = 0; item < n; ++item)
            if (folds.assignment[item] != f) train.push_back(item);

        const RidgeModel model =
            ridge_fit(gather_rows(embeddings, train), gather_rows(x, train), lambda);
        const Matrix fold_pred = ridge_predict(model, gather_rows(embeddings, members[f]));
        for (std::size_t t = 0; t < members[f].size(); ++t) {
            auto dst = predicted.row(members[f][t]);
            auto src = fold_pred.row(t);
            for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = src[j];
        }
    }

    EncodingResult result;
    result.per_concept_accuracy = pairwise_accuracy(predicted, x);
    mean_class_accuracy(result, targets);
    return result;
}

EmbeddingSet random_embeddings(std::size_t n_concepts, std::size_t dimension,
                               std::uint64_t seed, const std::string& name) {
    if (n_concepts == 0 || dimension == 0)
        throw InvalidArgument("random_embeddings: empty shape");
    Rng rng(seed);
    Matrix vectors(n_concepts, dimension);
    for (std::size_t i = 0; i < n_concepts; ++i)
        for (std::size_t j = 0; j < dimension; ++j) vectors(i, j) = rng.next_normal();
    return EmbeddingSet{name, std::move(vectors)};
}

RandomBaselineResult random_baseline_accuracy(const Matrix& x, const std::vector<int>& targets,
                                              const FoldPlan& folds, std::size_t dimension,
                                              std::size_t n_initializations, double lambda,
                                              std::uint64_t seed, int n_threads) {
    if (n_initializations == 0)
        throw InvalidArgument("random_baseline_accuracy: need at least one initialization");

    std::vector<EncodingResult> results(n_initializations);
    parallel_for(n_initializations, n_threads, [&](std::size_t i) {
        const EmbeddingSet embeddings =
            random_embeddings(x.rows(), dimension, derive_seed(seed, i));
        results[i] = encode_cv(embeddings.vectors, x, targets, folds, lambda);
    });

    RandomBaselineResult out;
    out.per_init_mean_accuracy.resize(n_initializations);
    for (std::size_t i = 0; i < n_initializations; ++i)
        out.per_init_mean_accuracy[i] = results[i].mean_accuracy;

    const double denom = static_cast<double>(n_initializations);
    out.mean.per_concept_accuracy.assign(x.rows(), 0.0);
    std::vector<double> buf(n_initializations);
    for (std::size_t c = 0; c < x.rows(); ++c) {
        for (std::size_t i = 0; i < n_initializations; ++i)
            buf[i] = results[i].per_concept_accuracy[c];
        out.mean.per_concept_accuracy[c] = pairwise_sum(buf) / denom;
    }
    auto mean_of = [&](auto field) {
        for (std::size_t i = 0; i < n_initializations; ++i) buf[i] = results[i].*field;
        return pairwise_sum(buf) / denom;
    };
    out.mean.mean_accuracy = mean_of(&EncodingResult::mean_accuracy);
    out.mean.mean_accuracy_concrete = mean_of(&EncodingResult::mean_accuracy_concrete);
    out.mean.mean_accuracy_abstract = mean_of(&EncodingResult::mean_accuracy_abstract);
    return out;
}

// ------------------------------------------------------------------- rsa --

std::vector<double> compute_rdm(const Matrix& x) {
    const std::size_t n = x.rows();
    if (n < 2) throw InvalidArgument("compute_rdm: need at least 2 rows");
    std::vector<double> rdm;
    rdm.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            rdm.push_back(cosine_distance(x.row(i), x.row(j)));
    return rdm;
}

double rsa_correlate(const std::vector<double>& rdm_a, const std::vector<double>& rdm_b) {
    if (rdm_a.size() != rdm_b.size())
        throw InvalidArgument("rsa_correlate: RDM length mismatch");
    return spearman_rho(rdm_a, rdm_b);
}

RsaResult rsa_by_class(const Matrix& x, const Matrix& embeddings,
                       const std::vector<int>& targets) {
    if (x.rows() != embeddings.rows())
        throw InvalidArgument("rsa_by_class: row count mismatch");
    if (targets.size() != x.rows())
        throw InvalidArgument("rsa_by_class: target count mismatch");

    RsaResult result;
    for (int cls : {+1, -1}) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < targets.size(); ++i)
            if (targets[i] == cls) rows.push_back(i);
        if (rows.size() < 3)
            throw InvalidArgument("rsa_by_class: need at least 3 rows per class");
        const double rho = rsa_correlate(compute_rdm(gather_rows(x, rows)),
                                         compute_rdm(gather_rows(embeddings, rows)));
        if (cls == 1) result.rho_concrete = rho;
        else result.rho_abstract = rho;
    }
    return result;
}

} // namespace mvpa
