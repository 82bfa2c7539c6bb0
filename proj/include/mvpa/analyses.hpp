#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvpa/dataset.hpp"
#include "mvpa/kmeans.hpp"
#include "mvpa/matrix.hpp"
#include "mvpa/svm.hpp"

namespace mvpa {

// ---------------------------------------------------------------- folds --

// Seeded shuffle of the items followed by round-robin assignment, so fold
// sizes differ by at most one and 132 items over 11 folds give 12 each.
struct FoldPlan {
    std::size_t n_items = 0;
    std::size_t n_folds = 0;
    std::vector<std::size_t> assignment;   // item -> fold

    std::vector<std::vector<std::size_t>> members() const;
};

FoldPlan make_folds(std::size_t n_items, std::size_t n_folds = 11, std::uint64_t seed = 0);

// -------------------------------------------------------------- decoding --

struct DecodeScores {
    double accuracy = 0.0;                    // pooled over folds: correct / total
    std::vector<double> per_fold_accuracy;
    std::vector<std::size_t> fold_correct;
    std::vector<std::size_t> fold_size;
};

// Cross-validated RBF-SVM classification of rows of x. Labels are +1/-1 and
// every fold's training split must contain both classes (the error names the
// offending fold). Scoring a fold never sees its own rows during training.
DecodeScores decode_cv(const Matrix& x, const std::vector<int>& y, const FoldPlan& folds,
                       const SvmConfig& config = {});

struct PermutationTest {
    double observed_accuracy = 0.0;
    double p_value = 1.0;
    bool significant = false;
    std::size_t n_permutations = 0;
    double alpha = 0.05;
    std::vector<double> permuted_accuracies;
};

// Add-one permutation test: p = (1 + #{permuted >= observed}) / (n + 1), so
// the smallest reachable p with 1000 permutations is 1/1001. Permutation p
// shuffles the labels with a stream seeded by (seed, p) and reuses the same
// fold plan and kernels as the observed run; results do not depend on
// n_threads.
PermutationTest permutation_pvalue(const Matrix& x, const std::vector<int>& y,
                                   const FoldPlan& folds, std::size_t n_permutations = 1000,
                                   double alpha = 0.05, std::uint64_t seed = 0,
                                   const SvmConfig& config = {}, int n_threads = 1);

// ------------------------------------------------------------ clustering --

struct ClusterReport {
    ClusterResult clustering;
    std::vector<std::size_t> cluster_sizes;
    std::vector<double> abstract_proportion;   // per cluster
    double dataset_abstract_proportion = 0.0;
};

// Unsupervised clustering of the labeled rows of x; is_abstract flags each
// row. The report compares per-cluster abstract shares with the dataset-wide
// share.
ClusterReport cluster_composition(const Matrix& x, const std::vector<bool>& is_abstract,
                                  const KmeansConfig& config = {});

// -------------------------------------------------------------- encoding --

struct EncodingResult {
    std::vector<double> per_concept_accuracy;
    double mean_accuracy = 0.0;
    double mean_accuracy_concrete = 0.0;
    double mean_accuracy_abstract = 0.0;
};

// Pairwise single-match score: prediction i beats candidate j when it is
// strictly closer (cosine distance) to observation i than to observation j;
// ties count as failures. Returns wins / (n - 1) for each row.
std::vector<double> pairwise_accuracy(const Matrix& predicted, const Matrix& observed);

// Cross-validated linear encoder: ridge-regress activation patterns from
// embedding vectors fold by fold, then score the out-of-fold predictions
// against every observed pattern. Rows of embeddings/x/targets correspond.
EncodingResult encode_cv(const Matrix& embeddings, const Matrix& x,
                         const std::vector<int>& targets, const FoldPlan& folds,
                         double lambda = 1.0);

// Gaussian N(0,1) embedding matrix; row/column layout matches EmbeddingSet.
EmbeddingSet random_embeddings(std::size_t n_concepts, std::size_t dimension,
                               std::uint64_t seed, const std::string& name = "random");

struct RandomBaselineResult {
    EncodingResult mean;                        // averaged over initializations
    std::vector<double> per_init_mean_accuracy;
};

// Encoding accuracy of random embeddings, averaged over n_initializations
// draws. Initialization i uses the stream seeded by (seed, i), so a single
// initialization reproduces encode_cv on random_embeddings(n, dim,
// derive_seed(seed, 0)).
RandomBaselineResult random_baseline_accuracy(const Matrix& x, const std::vector<int>& targets,
                                              const FoldPlan& folds, std::size_t dimension = 300,
                                              std::size_t n_initializations = 1000,
                                              double lambda = 1.0, std::uint64_t seed = 0,
                                              int n_threads = 1);

// ------------------------------------------------------------------- rsa --

// Condensed representational dissimilarity matrix: cosine distances of row
// pairs (i, j), i < j, in row-major pair order.
std::vector<double> compute_rdm(const Matrix& x);

// Spearman rank correlation between two condensed RDMs.
double rsa_correlate(const std::vector<double>& rdm_a, const std::vector<double>& rdm_b);

struct RsaResult {
    double rho_concrete = 0.0;
    double rho_abstract = 0.0;
};

// RSA computed separately on the concrete-only and abstract-only row
// subsets; targets are +1 concrete / -1 abstract, aligned with rows.
RsaResult rsa_by_class(const Matrix& x, const Matrix& embeddings,
                       const std::vector<int>& targets);

} // namespace mvpa
