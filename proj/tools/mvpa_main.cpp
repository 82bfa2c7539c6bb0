#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mvpa/analyses.hpp"
#include "mvpa/dataset.hpp"
#include "mvpa/defaults.hpp"
#include "mvpa/errors.hpp"
#include "mvpa/experiment.hpp"
#include "mvpa/rng.hpp"
#include "mvpa/searchlight.hpp"
#include "mvpa/selection.hpp"
#include "mvpa/synth.hpp"

namespace {

using mvpa::Matrix;
using nlohmann::json;

void print_error(const std::string& kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

// Runs a subcommand body, converting exceptions into a structured stderr
// line and a nonzero exit code.
int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const mvpa::ConfigError& e) {
        print_error("config", e.what());
    } catch (const mvpa::IoError& e) {
        print_error("io", e.what());
    } catch (const mvpa::FormatError& e) {
        print_error("format", e.what());
    } catch (const mvpa::InvalidArgument& e) {
        print_error("invalid_argument", e.what());
    } catch (const mvpa::DegenerateInput& e) {
        print_error("degenerate_input", e.what());
    } catch (const mvpa::Error& e) {
        print_error("error", e.what());
    } catch (const std::exception& e) {
        print_error("internal", e.what());
    }
    return 1;
}

// Labeled rows of one paradigm restricted to a selection, plus targets.
struct AnalysisInput {
    mvpa::Dataset dataset;
    mvpa::VoxelSelection selection;
    Matrix x;
    std::vector<std::size_t> rows;
    std::vector<int> targets;
};

AnalysisInput make_input(const std::string& data_dir, const std::string& paradigm,
                         const std::string& selection_text) {
    AnalysisInput input;
    input.dataset = mvpa::load_dataset(data_dir);
    const auto spec = mvpa::parse_selection_spec(selection_text);
    switch (spec.kind) {
        case mvpa::SelectionSpec::Kind::Roi:
            input.selection = mvpa::select_roi(input.dataset.subject.geometry, spec.regions);
            break;
        case mvpa::SelectionSpec::Kind::Stable:
            input.selection = mvpa::select_stable(input.dataset.subject, spec.top_k);
            break;
        case mvpa::SelectionSpec::Kind::File:
            input.selection = mvpa::load_selection(spec.file);
            break;
    }
    input.rows = input.dataset.concepts.labeled_indices();
    input.targets = input.dataset.concepts.labeled_targets();
    input.x = mvpa::gather(input.dataset.subject.activation(paradigm), input.rows,
                           input.selection.indices);
    return input;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-voxel pattern analysis toolkit"};
    app.require_subcommand(1);

    // ----------------------------------------------------------- synth --
    auto* synth = app.add_subcommand("synth", "Generate a synthetic subject from a plant spec");
    std::string synth_spec_path, synth_out;
    std::uint64_t synth_seed = 0;
    synth->add_option("--spec", synth_spec_path, "Plant spec JSON")->required();
    synth->add_option("--out", synth_out, "Output dataset directory")->required();
    auto* synth_seed_opt = synth->add_option("--seed", synth_seed, "Override the spec seed");

    // ----------------------------------------------------------- decode --
    auto* decode = app.add_subcommand("decode", "Cross-validated SVM decoding on a selection");
    std::string dec_data, dec_paradigm, dec_selection;
    std::size_t dec_folds = mvpa::defaults::kDecodeFolds;
    std::size_t dec_perms = 0;
    double dec_c = mvpa::defaults::kSvmC;
    double dec_alpha = mvpa::defaults::kAlpha;
    std::uint64_t dec_seed = 0;
    int dec_threads = 1;
    decode->add_option("--data", dec_data, "Dataset directory")->required();
    decode->add_option("--paradigm", dec_paradigm, "Paradigm name")->required();
    decode->add_option("--selection", dec_selection, "roi:A+B | stable:K | file:PATH")
        ->required();
    decode->add_option("--folds", dec_folds, "Cross-validation folds");
    decode->add_option("--permutations", dec_perms, "Label permutations (0 = no test)");
    decode->add_option("--c", dec_c, "SVM regularization C");
    decode->add_option("--alpha", dec_alpha, "Significance level");
    decode->add_option("--seed", dec_seed, "Master seed")->required();
    decode->add_option("--threads", dec_threads, "Worker threads");

    // ---------------------------------------------------------- cluster --
    auto* cluster = app.add_subcommand("cluster", "K-means composition on a selection");
    std::string clu_data, clu_paradigm, clu_selection;
    std::size_t clu_k = mvpa::defaults::kClusterCount;
    std::size_t clu_restarts = mvpa::defaults::kClusterRestarts;
    std::uint64_t clu_seed = 0;
    cluster->add_option("--data", clu_data, "Dataset directory")->required();
    cluster->add_option("--paradigm", clu_paradigm, "Paradigm name")->required();
    cluster->add_option("--selection", clu_selection, "roi:A+B | stable:K | file:PATH")
        ->required();
    cluster->add_option("--k", clu_k, "Number of clusters");
    cluster->add_option("--restarts", clu_restarts, "Restarts");
    cluster->add_option("--seed", clu_seed, "Master seed")->required();

    // ----------------------------------------------------------- encode --
    auto* encode = app.add_subcommand("encode", "Ridge encoding with pairwise accuracy");
    std::string enc_data, enc_paradigm, enc_selection, enc_embedding;
    std::size_t enc_folds = mvpa::defaults::kDecodeFolds;
    double enc_lambda = mvpa::defaults::kRidgeLambda;
    std::size_t enc_random_inits = 0;
    std::size_t enc_random_dim = mvpa::defaults::kRandomEmbeddingDim;
    std::uint64_t enc_seed = 0;
    int enc_threads = 1;
    encode->add_option("--data", enc_data, "Dataset directory")->required();
    encode->add_option("--paradigm", enc_paradigm, "Paradigm name")->required();
    encode->add_option("--selection", enc_selection, "roi:A+B | stable:K | file:PATH")
        ->required();
    encode->add_option("--embedding", enc_embedding,
                       "Embedding name (omit to score only the random baseline)");
    encode->add_option("--folds", enc_folds, "Cross-validation folds");
    encode->add_option("--lambda", enc_lambda, "Ridge penalty");
    encode->add_option("--random-inits", enc_random_inits,
                       "Random-embedding baseline initializations (0 = skip)");
    encode->add_option("--random-dim", enc_random_dim, "Random embedding dimension");
    encode->add_option("--seed", enc_seed, "Master seed")->required();
    encode->add_option("--threads", enc_threads, "Worker threads");

    // -------------------------------------------------------------- rsa --
    auto* rsa = app.add_subcommand("rsa", "Representational similarity per label class");
    std::string rsa_data, rsa_paradigm, rsa_selection, rsa_embedding;
    rsa->add_option("--data", rsa_data, "Dataset directory")->required();
    rsa->add_option("--paradigm", rsa_paradigm, "Paradigm name")->required();
    rsa->add_option("--selection", rsa_selection, "roi:A+B | stable:K | file:PATH")->required();
    rsa->add_option("--embedding", rsa_embedding, "Embedding name")->required();

    // ------------------------------------------------------- searchlight --
    auto* searchlight = app.add_subcommand("searchlight", "Whole-volume sphere decoding");
    std::string sl_data, sl_paradigm, sl_out;
    double sl_radius = mvpa::defaults::kSearchlightRadiusMm;
    std::size_t sl_folds = mvpa::defaults::kDecodeFolds;
    double sl_c = mvpa::defaults::kSvmC;
    std::uint64_t sl_seed = 0;
    int sl_threads = 1;
    searchlight->add_option("--data", sl_data, "Dataset directory")->required();
    searchlight->add_option("--paradigm", sl_paradigm, "Paradigm name")->required();
    searchlight->add_option("--radius", sl_radius, "Sphere radius in mm");
    searchlight->add_option("--folds", sl_folds, "Cross-validation folds");
    searchlight->add_option("--c", sl_c, "SVM regularization C");
    searchlight->add_option("--seed", sl_seed, "Master seed")->required();
    searchlight->add_option("--threads", sl_threads, "Worker threads");
    searchlight->add_option("--out", sl_out, "Accuracy map output (.f32)")->required();

    // ----------------------------------------------------- select-stable --
    auto* select_stable = app.add_subcommand("select-stable",
                                             "Rank voxels by cross-paradigm stability");
    std::string ss_data, ss_out;
    std::size_t ss_top_k = mvpa::defaults::kStableVoxelCount;
    select_stable->add_option("--data", ss_data, "Dataset directory")->required();
    select_stable->add_option("--top-k", ss_top_k, "Voxels to keep");
    select_stable->add_option("--out", ss_out, "Selection JSON output")->required();

    // -------------------------------------------------------------- run --
    auto* run = app.add_subcommand("run", "Run a full experiment config");
    std::string run_config, run_out;
    std::uint64_t run_seed = 0;
    int run_threads = 0;
    bool run_dry = false;
    run->add_option("--config", run_config, "Experiment config JSON")->required();
    auto* run_seed_opt = run->add_option("--seed", run_seed, "Override the config seed");
    auto* run_threads_opt = run->add_option("--threads", run_threads, "Override worker threads");
    auto* run_out_opt = run->add_option("--out", run_out, "Override the output directory");
    run->add_flag("--dry-run", run_dry, "Validate the config and inputs, run nothing");

    // ----------------------------------------------------------- report --
    auto* report = app.add_subcommand("report", "Merge report CSVs into one");
    std::vector<std::string> rep_inputs;
    std::string rep_out;
    report->add_option("inputs", rep_inputs, "Report CSVs to merge")->required();
    report->add_option("--out", rep_out, "Merged CSV output")->required();

    CLI11_PARSE(app, argc, argv);

    if (synth->parsed()) {
        return guarded([&] {
            mvpa::PlantSpec spec = mvpa::load_plant_spec(synth_spec_path);
            if (synth_seed_opt->count() > 0) spec.seed = synth_seed;
            const mvpa::Dataset dataset = mvpa::generate_subject(spec);
            mvpa::write_dataset(synth_out, dataset);
            std::cout << json{{"subject", dataset.subject.subject_id},
                              {"n_concepts", dataset.concepts.size()},
                              {"n_voxels", dataset.subject.geometry.voxel_count()},
                              {"out", synth_out}}
                             .dump()
                      << "\n";
            return 0;
        });
    }

    if (decode->parsed()) {
        return guarded([&] {
            const AnalysisInput input = make_input(dec_data, dec_paradigm, dec_selection);
            const mvpa::FoldPlan folds =
                mvpa::make_folds(input.rows.size(), dec_folds, mvpa::derive_seed(dec_seed, 0));
            mvpa::SvmConfig svm;
            svm.c = dec_c;
            json out{{"subject", input.dataset.subject.subject_id},
                     {"paradigm", dec_paradigm},
                     {"region", input.selection.describe()},
                     {"n_voxels", input.selection.indices.size()}};
            if (dec_perms == 0) {
                const mvpa::DecodeScores scores = mvpa::decode_cv(input.x, input.targets,
                                                                  folds, svm);
                out["accuracy"] = scores.accuracy;
                out["per_fold_accuracy"] = scores.per_fold_accuracy;
            } else {
                const mvpa::PermutationTest test = mvpa::permutation_pvalue(
                    input.x, input.targets, folds, dec_perms, dec_alpha,
                    mvpa::derive_seed(dec_seed, 1), svm, dec_threads);
                out["accuracy"] = test.observed_accuracy;
                out["p_value"] = test.p_value;
                out["significant"] = test.significant;
                out["permutations"] = test.n_permutations;
            }
            std::cout << out.dump() << "\n";
            return 0;
        });
    }

    if (cluster->parsed()) {
        return guarded([&] {
            const AnalysisInput input = make_input(clu_data, clu_paradigm, clu_selection);
            std::vector<bool> is_abstract(input.targets.size());
            for (std::size_t i = 0; i < input.targets.size(); ++i)
                is_abstract[i] = input.targets[i] < 0;
            mvpa::KmeansConfig km;
            km.k = clu_k;
            km.restarts = clu_restarts;
            km.seed = clu_seed;
            const mvpa::ClusterReport rep = mvpa::cluster_composition(input.x, is_abstract, km);
            std::cout << json{{"subject", input.dataset.subject.subject_id},
                              {"paradigm", clu_paradigm},
                              {"region", input.selection.describe()},
                              {"cluster_sizes", rep.cluster_sizes},
                              {"abstract_proportion", rep.abstract_proportion},
                              {"dataset_abstract_proportion", rep.dataset_abstract_proportion},
                              {"inertia", rep.clustering.inertia}}
                             .dump()
                      << "\n";
            return 0;
        });
    }

    if (encode->parsed()) {
        return guarded([&] {
            if (enc_embedding.empty() && enc_random_inits == 0)
                throw mvpa::ConfigError("encode: give --embedding and/or --random-inits");
            const AnalysisInput input = make_input(enc_data, enc_paradigm, enc_selection);
            const mvpa::FoldPlan folds =
                mvpa::make_folds(input.rows.size(), enc_folds, mvpa::derive_seed(enc_seed, 0));
            json out{{"subject", input.dataset.subject.subject_id},
                     {"paradigm", enc_paradigm},
                     {"region", input.selection.describe()}};
            if (!enc_embedding.empty()) {
                const auto it = input.dataset.embeddings.find(enc_embedding);
                if (it == input.dataset.embeddings.end())
                    throw mvpa::InvalidArgument("subject has no embedding '" + enc_embedding +
                                                "'");
                const Matrix e = mvpa::gather_rows(it->second.vectors, input.rows);
                const mvpa::EncodingResult res =
                    mvpa::encode_cv(e, input.x, input.targets, folds, enc_lambda);
                out["embedding"] = enc_embedding;
                out["mean_accuracy"] = res.mean_accuracy;
                out["concrete_accuracy"] = res.mean_accuracy_concrete;
                out["abstract_accuracy"] = res.mean_accuracy_abstract;
            }
            if (enc_random_inits > 0) {
                const mvpa::RandomBaselineResult res = mvpa::random_baseline_accuracy(
                    input.x, input.targets, folds, enc_random_dim, enc_random_inits, enc_lambda,
                    mvpa::derive_seed(enc_seed, 1), enc_threads);
                out["random_mean_accuracy"] = res.mean.mean_accuracy;
                out["random_concrete_accuracy"] = res.mean.mean_accuracy_concrete;
                out["random_abstract_accuracy"] = res.mean.mean_accuracy_abstract;
                out["random_initializations"] = enc_random_inits;
            }
            std::cout << out.dump() << "\n";
            return 0;
        });
    }

    if (rsa->parsed()) {
        return guarded([&] {
            const AnalysisInput input = make_input(rsa_data, rsa_paradigm, rsa_selection);
            const auto it = input.dataset.embeddings.find(rsa_embedding);
            if (it == input.dataset.embeddings.end())
                throw mvpa::InvalidArgument("subject has no embedding '" + rsa_embedding + "'");
            const Matrix e = mvpa::gather_rows(it->second.vectors, input.rows);
            const mvpa::RsaResult res = mvpa::rsa_by_class(input.x, e, input.targets);
            std::cout << json{{"subject", input.dataset.subject.subject_id},
                              {"paradigm", rsa_paradigm},
                              {"region", input.selection.describe()},
                              {"embedding", rsa_embedding},
                              {"rho_concrete", res.rho_concrete},
                              {"rho_abstract", res.rho_abstract}}
                             .dump()
                      << "\n";
            return 0;
        });
    }

    if (searchlight->parsed()) {
        return guarded([&] {
            const mvpa::Dataset dataset = mvpa::load_dataset(sl_data);
            const auto rows = dataset.concepts.labeled_indices();
            const auto targets = dataset.concepts.labeled_targets();
            const mvpa::FoldPlan folds =
                mvpa::make_folds(rows.size(), sl_folds, mvpa::derive_seed(sl_seed, 0));
            mvpa::SvmConfig svm;
            svm.c = sl_c;
            const mvpa::AccuracyMap map = mvpa::run_searchlight(
                dataset.subject, sl_paradigm, rows, targets, folds, sl_radius, svm, sl_threads);
            mvpa::write_accuracy_map(sl_out, map);
            const auto area_means = mvpa::aggregate_by_area(dataset.subject.geometry, map);
            double volume_mean = 0.0;
            std::size_t n_degenerate = 0;
            for (std::size_t v = 0; v < map.voxel_count(); ++v) {
                volume_mean += map.accuracy[v];
                n_degenerate += map.degenerate[v];
            }
            if (map.voxel_count() > 0) volume_mean /= static_cast<double>(map.voxel_count());
            std::cout << json{{"subject", dataset.subject.subject_id},
                              {"paradigm", sl_paradigm},
                              {"voxels", map.voxel_count()},
                              {"mean_accuracy", volume_mean},
                              {"degenerate_spheres", n_degenerate},
                              {"area_mean_accuracy", area_means},
                              {"out", sl_out}}
                             .dump()
                      << "\n";
            return 0;
        });
    }

    if (select_stable->parsed()) {
        return guarded([&] {
            const mvpa::Dataset dataset = mvpa::load_dataset(ss_data);
            const mvpa::VoxelSelection sel = mvpa::select_stable(dataset.subject, ss_top_k);
            mvpa::save_selection(ss_out, sel);
            std::cout << json{{"subject", dataset.subject.subject_id},
                              {"selection", sel.describe()},
                              {"n_voxels", sel.indices.size()},
                              {"out", ss_out}}
                             .dump()
                      << "\n";
            return 0;
        });
    }

    if (run->parsed()) {
        return guarded([&] {
            mvpa::ExperimentConfig config = mvpa::load_experiment_config(run_config);
            if (run_seed_opt->count() > 0) config.seed = run_seed;
            if (run_threads_opt->count() > 0) {
                if (run_threads < 1) throw mvpa::ConfigError("--threads must be positive");
                config.threads = run_threads;
            }
            if (run_out_opt->count() > 0) config.output_dir = run_out;
            mvpa::validate_experiment_inputs(config);
            if (run_dry) {
                std::cout << json{{"dry_run", true}, {"config", run_config}}.dump() << "\n";
                return 0;
            }
            const mvpa::ExperimentOutcome outcome = mvpa::run_experiment(config);
            std::cout << json{{"rows", outcome.report.rows.size()},
                              {"failed_tasks", outcome.n_failed},
                              {"out", config.output_dir.string()}}
                             .dump()
                      << "\n";
            if (outcome.n_failed > 0) {
                print_error("tasks_failed",
                            std::to_string(outcome.n_failed) + " analysis tasks failed");
                return 1;
            }
            return 0;
        });
    }

    if (report->parsed()) {
        return guarded([&] {
            mvpa::Report merged;
            merged.generated_at = mvpa::utc_timestamp_now();
            for (const auto& path : rep_inputs) {
                const auto rows = mvpa::read_report_csv(path);
                merged.rows.insert(merged.rows.end(), rows.begin(), rows.end());
            }
            mvpa::write_report_csv(merged, rep_out);
            std::cout << json{{"inputs", rep_inputs.size()},
                              {"rows", merged.rows.size()},
                              {"out", rep_out}}
                             .dump()
                      << "\n";
            return 0;
        });
    }

    return 0;
}
