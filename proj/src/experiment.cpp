#include "mvpa/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <functional>

#include <json.hpp>

#include "mvpa/analyses.hpp"
#include "mvpa/errors.hpp"
#include "mvpa/rng.hpp"
#include "mvpa/selection.hpp"

namespace mvpa {

using nlohmann::json;

// ------------------------------------------------------- selection specs --

std::string SelectionSpec::label() const {
    switch (kind) {
        case Kind::Roi: {
            std::string out = "roi:";
            bool first = true;
            for (const auto& r : regions) {
                if (!first) out += '+';
                out += r;
                first = false;
            }
            return out;
        }
        case Kind::Stable:
            return "stable:" + std::to_string(top_k);
        case Kind::File:
            return "file:" + file.filename().string();
    }
    return "?";
}

SelectionSpec parse_selection_spec(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
        throw ConfigError("selection must look like roi:IFG+MTG, stable:500 or file:path, got: " +
                          text);
    const std::string head = text.substr(0, colon);
    const std::string rest = text.substr(colon + 1);
    SelectionSpec spec;
    if (head == "roi") {
        spec.kind = SelectionSpec::Kind::Roi;
        std::string cur;
        for (char ch : rest + "+") {
            if (ch == '+') {
                if (cur.empty()) throw ConfigError("empty region name in selection: " + text);
                spec.regions.insert(cur);
                cur.clear();
            } else {
                cur.push_back(ch);
            }
        }
    } else if (head == "stable") {
        try {
            std::size_t used = 0;
            const long long k = std::stoll(rest, &used);
            if (used != rest.size() || k <= 0) throw std::invalid_argument("bad count");
            spec.kind = SelectionSpec::Kind::Stable;
            spec.top_k = static_cast<std::size_t>(k);
        } catch (const std::exception&) {
            throw ConfigError("stable selection needs a positive count, got: " + text);
        }
    } else if (head == "file") {
        spec.kind = SelectionSpec::Kind::File;
        spec.file = rest;
    } else {
        throw ConfigError("unknown selection kind '" + head + "' in: " + text);
    }
    return spec;
}

// ----------------------------------------------------------- json helpers --

namespace {

void check_keys(const json& obj, const std::vector<std::string>& allowed,
                const std::string& context) {
    for (const auto& item : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
            throw ConfigError(context + ": unknown key '" + item.key() + "'");
    }
}

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    if (!doc.is_object()) throw ConfigError(path.string() + ": top level must be an object");
    return doc;
}

std::size_t get_count(const json& obj, const char* key, std::size_t fallback,
                      const std::string& context) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned())
        throw ConfigError(context + ": '" + key + "' must be a non-negative integer");
    return v.get<std::size_t>();
}

double get_number(const json& obj, const char* key, double fallback,
                  const std::string& context) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(context + ": '" + key + "' must be a number");
    return v.get<double>();
}

std::vector<std::string> get_string_list(const json& obj, const char* key,
                                         const std::string& context) {
    std::vector<std::string> out;
    if (!obj.contains(key)) return out;
    const auto& v = obj.at(key);
    if (!v.is_array()) throw ConfigError(context + ": '" + key + "' must be an array");
    for (const auto& item : v) {
        if (!item.is_string())
            throw ConfigError(context + ": '" + key + "' entries must be strings");
        out.push_back(item.get<std::string>());
    }
    return out;
}

} // namespace

// ------------------------------------------------------------ run config --

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    const json doc = load_json_file(path);
    check_keys(doc,
               {"subjects", "paradigms", "selections", "analyses", "seed", "threads",
                "output_dir", "save_selections"},
               path.string());

    ExperimentConfig config;

    if (!doc.contains("subjects") || !doc.at("subjects").is_array() ||
        doc.at("subjects").empty())
        throw ConfigError(path.string() + ": 'subjects' must be a non-empty array of paths");
    for (const auto& s : doc.at("subjects")) {
        if (!s.is_string())
            throw ConfigError(path.string() + ": 'subjects' entries must be strings");
        config.subjects.emplace_back(s.get<std::string>());
    }

    config.paradigms = get_string_list(doc, "paradigms", path.string());
    for (const auto& p : config.paradigms)
        if (!is_valid_paradigm(p))
            throw ConfigError(path.string() + ": unknown paradigm '" + p + "'");

    for (const auto& s : get_string_list(doc, "selections", path.string()))
        config.selections.push_back(parse_selection_spec(s));

    if (doc.contains("seed")) {
        if (!doc.at("seed").is_number_unsigned())
            throw ConfigError(path.string() + ": 'seed' must be a non-negative integer");
        config.seed = doc.at("seed").get<std::uint64_t>();
    }
    if (doc.contains("threads")) {
        if (!doc.at("threads").is_number_integer() || doc.at("threads").get<int>() < 1)
            throw ConfigError(path.string() + ": 'threads' must be a positive integer");
        config.threads = doc.at("threads").get<int>();
    }
    if (doc.contains("output_dir")) {
        if (!doc.at("output_dir").is_string())
            throw ConfigError(path.string() + ": 'output_dir' must be a string");
        config.output_dir = doc.at("output_dir").get<std::string>();
    }
    if (doc.contains("save_selections")) {
        if (!doc.at("save_selections").is_boolean())
            throw ConfigError(path.string() + ": 'save_selections' must be a boolean");
        config.save_selections = doc.at("save_selections").get<bool>();
    }

    if (!doc.contains("analyses") || !doc.at("analyses").is_object())
        throw ConfigError(path.string() + ": 'analyses' must be an object");
    const json& analyses = doc.at("analyses");
    check_keys(analyses, {"decode", "cluster", "encode", "rsa", "searchlight"},
               path.string() + ": analyses");
    if (analyses.empty()) throw ConfigError(path.string() + ": no analyses requested");

    if (analyses.contains("decode")) {
        const json& a = analyses.at("decode");
        const std::string ctx = path.string() + ": decode";
        check_keys(a, {"folds", "permutations", "c", "alpha"}, ctx);
        DecodeParams p;
        p.folds = get_count(a, "folds", p.folds, ctx);
        p.permutations = get_count(a, "permutations", p.permutations, ctx);
        p.c = get_number(a, "c", p.c, ctx);
        p.alpha = get_number(a, "alpha", p.alpha, ctx);
        if (p.folds < 2) throw ConfigError(ctx + ": folds must be >= 2");
        if (p.c <= 0) throw ConfigError(ctx + ": c must be positive");
        if (p.alpha <= 0 || p.alpha >= 1) throw ConfigError(ctx + ": alpha must be in (0, 1)");
        config.decode = p;
    }
    if (analyses.contains("cluster")) {
        const json& a = analyses.at("cluster");
        const std::string ctx = path.string() + ": cluster";
        check_keys(a, {"k", "restarts"}, ctx);
        ClusterParams p;
        p.k = get_count(a, "k", p.k, ctx);
        p.restarts = get_count(a, "restarts", p.restarts, ctx);
        if (p.k < 1) throw ConfigError(ctx + ": k must be >= 1");
        if (p.restarts < 1) throw ConfigError(ctx + ": restarts must be >= 1");
        config.cluster = p;
    }
    if (analyses.contains("encode")) {
        const json& a = analyses.at("encode");
        const std::string ctx = path.string() + ": encode";
        check_keys(a,
                   {"folds", "lambda", "embeddings", "random_initializations",
                    "random_dimension"},
                   ctx);
        EncodeParams p;
        p.folds = get_count(a, "folds", p.folds, ctx);
        p.lambda = get_number(a, "lambda", p.lambda, ctx);
        p.embeddings = get_string_list(a, "embeddings", ctx);
        p.random_initializations = get_count(a, "random_initializations",
                                             p.random_initializations, ctx);
        p.random_dimension = get_count(a, "random_dimension", p.random_dimension, ctx);
        if (p.folds < 2) throw ConfigError(ctx + ": folds must be >= 2");
        if (p.lambda < 0) throw ConfigError(ctx + ": lambda must be >= 0");
        if (p.random_initializations > 0 && p.random_dimension == 0)
            throw ConfigError(ctx + ": random_dimension must be positive");
        config.encode = p;
    }
    if (analyses.contains("rsa")) {
        const json& a = analyses.at("rsa");
        const std::string ctx = path.string() + ": rsa";
        check_keys(a, {"embeddings"}, ctx);
        RsaParams p;
        p.embeddings = get_string_list(a, "embeddings", ctx);
        config.rsa = p;
    }
    if (analyses.contains("searchlight")) {
        const json& a = analyses.at("searchlight");
        const std::string ctx = path.string() + ": searchlight";
        check_keys(a, {"folds", "radius_mm", "c", "threshold", "threshold_mode"}, ctx);
        SearchlightParams p;
        p.folds = get_count(a, "folds", p.folds, ctx);
        p.radius_mm = get_number(a, "radius_mm", p.radius_mm, ctx);
        p.c = get_number(a, "c", p.c, ctx);
        p.threshold = get_number(a, "threshold", p.threshold, ctx);
        if (a.contains("threshold_mode")) {
            const std::string mode = a.at("threshold_mode").is_string()
                                         ? a.at("threshold_mode").get<std::string>()
                                         : std::string();
            if (mode == "cross_subject_mean") p.threshold_mode = ThresholdMode::CrossSubjectMean;
            else if (mode == "every_subject") p.threshold_mode = ThresholdMode::EverySubject;
            else
                throw ConfigError(ctx +
                                  ": threshold_mode must be cross_subject_mean or every_subject");
        }
        if (p.folds < 2) throw ConfigError(ctx + ": folds must be >= 2");
        if (p.radius_mm <= 0) throw ConfigError(ctx + ": radius_mm must be positive");
        if (p.c <= 0) throw ConfigError(ctx + ": c must be positive");
        config.searchlight = p;
    }

    return config;
}

// ------------------------------------------------------------ resolution --

namespace {

// Paradigms to run for one subject: the config list, or everything the
// subject has, in canonical paradigm order either way.
std::vector<std::string> paradigms_for(const ExperimentConfig& config,
                                       const Dataset& dataset) {
    std::vector<std::string> out;
    for (const auto& name : kParadigmNames) {
        const bool wanted = config.paradigms.empty() ||
                            std::find(config.paradigms.begin(), config.paradigms.end(), name) !=
                                config.paradigms.end();
        if (wanted && dataset.subject.paradigms.count(name)) out.push_back(name);
    }
    if (!config.paradigms.empty())
        for (const auto& name : config.paradigms)
            if (!dataset.subject.paradigms.count(name))
                throw InvalidArgument("subject " + dataset.subject.subject_id +
                                      " has no paradigm '" + name + "'");
    return out;
}

VoxelSelection resolve_selection(const Dataset& dataset, const SelectionSpec& spec) {
    switch (spec.kind) {
        case SelectionSpec::Kind::Roi:
            return select_roi(dataset.subject.geometry, spec.regions);
        case SelectionSpec::Kind::Stable:
            return select_stable(dataset.subject, spec.top_k);
        case SelectionSpec::Kind::File: {
            VoxelSelection sel = load_selection(spec.file);
            const std::size_t n = dataset.subject.geometry.voxel_count();
            if (!sel.indices.empty() && sel.indices.back() >= n)
                throw InvalidArgument("selection file " + spec.file.string() +
                                      " references voxel " + std::to_string(sel.indices.back()) +
                                      " but the subject has " + std::to_string(n));
            return sel;
        }
    }
    throw InvalidArgument("unhandled selection kind");
}

const EmbeddingSet& embedding_or_throw(const Dataset& dataset, const std::string& name) {
    const auto it = dataset.embeddings.find(name);
    if (it == dataset.embeddings.end())
        throw InvalidArgument("subject " + dataset.subject.subject_id +
                              " has no embedding '" + name + "'");
    return it->second;
}

std::vector<std::string> embeddings_for(const Dataset& dataset,
                                        const std::vector<std::string>& requested) {
    if (!requested.empty()) {
        for (const auto& name : requested) embedding_or_throw(dataset, name);
        return requested;
    }
    std::vector<std::string> out;
    for (const auto& [name, emb] : dataset.embeddings) out.push_back(name);
    return out;
}

// Canonical index of a paradigm name, used to seed per-paradigm streams so a
// paradigm's results do not depend on which other paradigms were requested.
std::size_t paradigm_ordinal(const std::string& name) {
    const auto it = std::find(kParadigmNames.begin(), kParadigmNames.end(), name);
    return static_cast<std::size_t>(it - kParadigmNames.begin());
}

std::string sanitize_for_filename(std::string s) {
    for (auto& ch : s)
        if (ch == ':' || ch == '/') ch = '-';
    return s;
}

// Per-analysis seed stream tags under a (subject, paradigm, selection) seed.
constexpr std::uint64_t kDecodeFoldStream = 0;
constexpr std::uint64_t kDecodePermStream = 1;
constexpr std::uint64_t kClusterStream = 2;
constexpr std::uint64_t kEncodeFoldStream = 3;
constexpr std::uint64_t kRandomBaselineStream = 4;
// Searchlight hangs off the (subject, paradigm) seed directly.
constexpr std::uint64_t kSearchlightStream = 1000;

} // namespace

void validate_experiment_inputs(const ExperimentConfig& config) {
    if (!config.seed)
        throw ConfigError("seed is mandatory: set it in the config or pass --seed");
    if (config.subjects.empty()) throw ConfigError("no subjects configured");
    if (!config.decode && !config.cluster && !config.encode && !config.rsa &&
        !config.searchlight)
        throw ConfigError("no analyses requested");
    if ((config.decode || config.cluster || config.encode || config.rsa) &&
        config.selections.empty())
        throw ConfigError("decode/cluster/encode/rsa need at least one selection");

    for (const auto& dir : config.subjects) {
        const Dataset dataset = load_dataset(dir);
        const auto paradigms = paradigms_for(config, dataset);
        if (paradigms.empty())
            throw ConfigError("subject " + dataset.subject.subject_id +
                              " has no requested paradigm");
        for (const auto& spec : config.selections) {
            if (spec.kind == SelectionSpec::Kind::Stable &&
                dataset.subject.paradigms.size() < 2)
                throw ConfigError("stable selection needs >= 2 paradigms, subject " +
                                  dataset.subject.subject_id + " has " +
                                  std::to_string(dataset.subject.paradigms.size()));
            resolve_selection(dataset, spec);
        }
        if (config.encode) embeddings_for(dataset, config.encode->embeddings);
        if (config.rsa) embeddings_for(dataset, config.rsa->embeddings);

        const std::size_t n_labeled = dataset.concepts.labeled_indices().size();
        const auto check_folds = [&](std::size_t folds, const char* what) {
            if (n_labeled < folds)
                throw ConfigError(std::string(what) + ": subject " +
                                  dataset.subject.subject_id + " has " +
                                  std::to_string(n_labeled) + " labeled concepts for " +
                                  std::to_string(folds) + " folds");
        };
        if (config.decode) check_folds(config.decode->folds, "decode");
        if (config.encode) check_folds(config.encode->folds, "encode");
        if (config.searchlight) check_folds(config.searchlight->folds, "searchlight");
    }
}

// ------------------------------------------------------------------- run --

ExperimentOutcome run_experiment(const ExperimentConfig& config) {
    if (!config.seed)
        throw ConfigError("seed is mandatory: set it in the config or pass --seed");
    const std::uint64_t master = *config.seed;

    std::filesystem::create_directories(config.output_dir);

    ExperimentOutcome outcome;
    outcome.report.seed = master;
    outcome.report.generated_at = utc_timestamp_now();

    const auto record_error = [&](const std::string& subject, const std::string& paradigm,
                                  const std::string& region, const std::string& analysis,
                                  const std::string& message) {
        outcome.report.errors.push_back({subject, paradigm, region, analysis, message});
        ++outcome.n_failed;
    };
    const auto add_row = [&](const std::string& subject, const std::string& paradigm,
                             const std::string& region, const std::string& analysis,
                             const std::string& metric, double value) {
        outcome.report.rows.push_back({subject, paradigm, region, analysis, metric, value});
    };

    // Area means collected per paradigm for the cross-subject ranking.
    std::map<std::string, std::vector<std::map<std::string, double>>> area_means_by_paradigm;

    for (std::size_t si = 0; si < config.subjects.size(); ++si) {
        const std::uint64_t subject_seed = derive_seed(master, si);

        Dataset dataset;
        try {
            dataset = load_dataset(config.subjects[si]);
        } catch (const std::exception& e) {
            record_error(config.subjects[si].string(), "", "", "load", e.what());
            continue;
        }
        const std::string& sid = dataset.subject.subject_id;

        std::vector<std::string> paradigms;
        try {
            paradigms = paradigms_for(config, dataset);
        } catch (const std::exception& e) {
            record_error(sid, "", "", "paradigms", e.what());
            continue;
        }

        // Selections depend only on the subject, not the paradigm.
        std::vector<std::optional<VoxelSelection>> selections(config.selections.size());
        for (std::size_t ci = 0; ci < config.selections.size(); ++ci) {
            try {
                selections[ci] = resolve_selection(dataset, config.selections[ci]);
                if (config.save_selections) {
                    const auto name = "selection_" + sid + "_" +
                                      sanitize_for_filename(config.selections[ci].label()) +
                                      ".json";
                    save_selection(config.output_dir / name, *selections[ci]);
                }
            } catch (const std::exception& e) {
                record_error(sid, "", config.selections[ci].label(), "selection", e.what());
            }
        }

        const std::vector<std::size_t> rows = dataset.concepts.labeled_indices();
        const std::vector<int> targets = dataset.concepts.labeled_targets();
        std::vector<bool> is_abstract(targets.size());
        for (std::size_t i = 0; i < targets.size(); ++i) is_abstract[i] = targets[i] < 0;

        for (const auto& paradigm : paradigms) {
            const std::uint64_t paradigm_seed =
                derive_seed(subject_seed, paradigm_ordinal(paradigm));
            const Matrix& full = dataset.subject.activation(paradigm);

            for (std::size_t ci = 0; ci < config.selections.size(); ++ci) {
                if (!selections[ci]) continue;   // resolution already reported
                const VoxelSelection& sel = *selections[ci];
                const std::string region = config.selections[ci].label();
                const std::uint64_t sel_seed = derive_seed(paradigm_seed, ci);
                const Matrix x = gather(full, rows, sel.indices);

                if (config.decode) {
                    const DecodeParams& p = *config.decode;
                    try {
                        const FoldPlan folds = make_folds(rows.size(), p.folds,
                                                          derive_seed(sel_seed, kDecodeFoldStream));
                        SvmConfig svm;
                        svm.c = p.c;
                        if (p.permutations == 0) {
                            const DecodeScores scores = decode_cv(x, targets, folds, svm);
                            add_row(sid, paradigm, region, "decode", "accuracy",
                                    scores.accuracy);
                        } else {
                            const PermutationTest test = permutation_pvalue(
                                x, targets, folds, p.permutations, p.alpha,
                                derive_seed(sel_seed, kDecodePermStream), svm, config.threads);
                            add_row(sid, paradigm, region, "decode", "accuracy",
                                    test.observed_accuracy);
                            add_row(sid, paradigm, region, "decode", "p_value", test.p_value);
                            add_row(sid, paradigm, region, "decode", "significant",
                                    test.significant ? 1.0 : 0.0);
                        }
                    } catch (const std::exception& e) {
                        record_error(sid, paradigm, region, "decode", e.what());
                    }
                }

                if (config.cluster) {
                    const ClusterParams& p = *config.cluster;
                    try {
                        KmeansConfig km;
                        km.k = p.k;
                        km.restarts = p.restarts;
                        km.seed = derive_seed(sel_seed, kClusterStream);
                        const ClusterReport rep = cluster_composition(x, is_abstract, km);
                        for (std::size_t c = 0; c < rep.abstract_proportion.size(); ++c) {
                            add_row(sid, paradigm, region, "cluster",
                                    "abstract_proportion_cluster" + std::to_string(c),
                                    rep.abstract_proportion[c]);
                            add_row(sid, paradigm, region, "cluster",
                                    "size_cluster" + std::to_string(c),
                                    static_cast<double>(rep.cluster_sizes[c]));
                        }
                        add_row(sid, paradigm, region, "cluster", "dataset_abstract_proportion",
                                rep.dataset_abstract_proportion);
                    } catch (const std::exception& e) {
                        record_error(sid, paradigm, region, "cluster", e.what());
                    }
                }

                if (config.encode) {
                    const EncodeParams& p = *config.encode;
                    try {
                        const FoldPlan folds = make_folds(rows.size(), p.folds,
                                                          derive_seed(sel_seed, kEncodeFoldStream));
                        for (const auto& name : embeddings_for(dataset, p.embeddings)) {
                            const EmbeddingSet& emb = embedding_or_throw(dataset, name);
                            const Matrix e = gather_rows(emb.vectors, rows);
                            const EncodingResult res = encode_cv(e, x, targets, folds, p.lambda);
                            add_row(sid, paradigm, region, "encode", name + "_mean_accuracy",
                                    res.mean_accuracy);
                            add_row(sid, paradigm, region, "encode", name + "_concrete_accuracy",
                                    res.mean_accuracy_concrete);
                            add_row(sid, paradigm, region, "encode", name + "_abstract_accuracy",
                                    res.mean_accuracy_abstract);
                        }
                        if (p.random_initializations > 0) {
                            const RandomBaselineResult res = random_baseline_accuracy(
                                x, targets, folds, p.random_dimension, p.random_initializations,
                                p.lambda, derive_seed(sel_seed, kRandomBaselineStream),
                                config.threads);
                            add_row(sid, paradigm, region, "encode", "random_mean_accuracy",
                                    res.mean.mean_accuracy);
                            add_row(sid, paradigm, region, "encode", "random_concrete_accuracy",
                                    res.mean.mean_accuracy_concrete);
                            add_row(sid, paradigm, region, "encode", "random_abstract_accuracy",
                                    res.mean.mean_accuracy_abstract);
                        }
                    } catch (const std::exception& e) {
                        record_error(sid, paradigm, region, "encode", e.what());
                    }
                }

                if (config.rsa) {
                    const RsaParams& p = *config.rsa;
                    try {
                        for (const auto& name : embeddings_for(dataset, p.embeddings)) {
                            const EmbeddingSet& emb = embedding_or_throw(dataset, name);
                            const Matrix e = gather_rows(emb.vectors, rows);
                            const RsaResult res = rsa_by_class(x, e, targets);
                            add_row(sid, paradigm, region, "rsa", name + "_rho_concrete",
                                    res.rho_concrete);
                            add_row(sid, paradigm, region, "rsa", name + "_rho_abstract",
                                    res.rho_abstract);
                        }
                    } catch (const std::exception& e) {
                        record_error(sid, paradigm, region, "rsa", e.what());
                    }
                }
            }

            if (config.searchlight) {
                const SearchlightParams& p = *config.searchlight;
                try {
                    const std::uint64_t sl_seed = derive_seed(paradigm_seed, kSearchlightStream);
                    const FoldPlan folds = make_folds(rows.size(), p.folds,
                                                      derive_seed(sl_seed, kDecodeFoldStream));
                    SvmConfig svm;
                    svm.c = p.c;
                    const AccuracyMap map = run_searchlight(dataset.subject, paradigm, rows,
                                                            targets, folds, p.radius_mm, svm,
                                                            config.threads);
                    write_accuracy_map(config.output_dir /
                                           (sid + "_" + paradigm + "_accuracy_map.f32"),
                                       map);

                    double volume_mean = 0.0;
                    std::size_t n_degenerate = 0;
                    for (std::size_t v = 0; v < map.voxel_count(); ++v) {
                        volume_mean += map.accuracy[v];
                        n_degenerate += map.degenerate[v];
                    }
                    if (map.voxel_count() > 0)
                        volume_mean /= static_cast<double>(map.voxel_count());
                    add_row(sid, paradigm, "volume", "searchlight", "mean_accuracy",
                            volume_mean);
                    add_row(sid, paradigm, "volume", "searchlight", "degenerate_spheres",
                            static_cast<double>(n_degenerate));

                    const auto area_means = aggregate_by_area(dataset.subject.geometry, map);
                    for (const auto& [area, mean] : area_means)
                        add_row(sid, paradigm, "area:" + area, "searchlight", "mean_accuracy",
                                mean);
                    area_means_by_paradigm[paradigm].push_back(area_means);
                } catch (const std::exception& e) {
                    record_error(sid, paradigm, "volume", "searchlight", e.what());
                }
            }
        }
    }

    // Cross-subject area ranking, one table per paradigm that produced maps.
    if (config.searchlight) {
        const SearchlightParams& p = *config.searchlight;
        for (const auto& paradigm : kParadigmNames) {
            const auto it = area_means_by_paradigm.find(paradigm);
            if (it == area_means_by_paradigm.end() || it->second.empty()) continue;
            try {
                const AreaRanking ranking =
                    rank_areas_across_subjects(it->second, p.threshold, p.threshold_mode);
                write_area_ranking(config.output_dir / ("area_ranking_" + paradigm + ".csv"),
                                   ranking);
                for (std::size_t a = 0; a < ranking.areas.size(); ++a) {
                    const std::string region = "area:" + ranking.areas[a];
                    add_row("all", paradigm, region, "area_ranking", "mean_rank",
                            ranking.mean_rank[a]);
                    add_row("all", paradigm, region, "area_ranking", "mean_accuracy",
                            ranking.mean_accuracy[a]);
                    add_row("all", paradigm, region, "area_ranking", "passes",
                            ranking.passes[a] ? 1.0 : 0.0);
                }
            } catch (const std::exception& e) {
                record_error("all", paradigm, "", "area_ranking", e.what());
            }
        }
    }

    write_report_csv(outcome.report, (config.output_dir / "report.csv").string());
    write_report_json(outcome.report, (config.output_dir / "report.json").string());
    return outcome;
}

// ------------------------------------------------------------ plant specs --

namespace {

// Seed stream tags for resolving "sample N voxels" requests in a spec.
// Distinct from every stream generate_subject itself uses.
constexpr std::uint64_t kRoiResolveStream = 4000;
constexpr std::uint64_t kEffectResolveStream = 5000;

std::vector<std::size_t> parse_voxel_array(const json& v, std::size_t n_voxels,
                                           const std::string& context) {
    if (!v.is_array()) throw ConfigError(context + ": expected an array of voxel indices");
    std::vector<std::size_t> out;
    for (const auto& item : v) {
        if (!item.is_number_unsigned())
            throw ConfigError(context + ": voxel indices must be non-negative integers");
        const auto idx = item.get<std::size_t>();
        if (idx >= n_voxels)
            throw ConfigError(context + ": voxel " + std::to_string(idx) +
                              " outside the grid (" + std::to_string(n_voxels) + " voxels)");
        out.push_back(idx);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    if (out.empty()) throw ConfigError(context + ": empty voxel list");
    return out;
}

} // namespace

PlantSpec load_plant_spec(const std::filesystem::path& path) {
    const json doc = load_json_file(path);
    const std::string ctx = path.string();
    check_keys(doc,
               {"subject_id", "split", "grid", "voxel_size_mm", "paradigms", "noise_sigma",
                "seed", "embeddings", "rois", "areas", "effects"},
               ctx);

    PlantSpec spec;

    if (!doc.contains("seed") || !doc.at("seed").is_number_unsigned())
        throw ConfigError(ctx + ": 'seed' is mandatory and must be a non-negative integer");
    spec.seed = doc.at("seed").get<std::uint64_t>();

    if (doc.contains("subject_id")) {
        if (!doc.at("subject_id").is_string())
            throw ConfigError(ctx + ": 'subject_id' must be a string");
        spec.subject_id = doc.at("subject_id").get<std::string>();
    }

    if (doc.contains("split")) {
        const json& s = doc.at("split");
        check_keys(s, {"concrete", "abstract", "excluded"}, ctx + ": split");
        spec.n_concrete = get_count(s, "concrete", spec.n_concrete, ctx + ": split");
        spec.n_abstract = get_count(s, "abstract", spec.n_abstract, ctx + ": split");
        spec.n_excluded = get_count(s, "excluded", spec.n_excluded, ctx + ": split");
    }

    if (doc.contains("grid")) {
        const json& g = doc.at("grid");
        if (!g.is_array() || g.size() != 3)
            throw ConfigError(ctx + ": 'grid' must be [nx, ny, nz]");
        for (std::size_t i = 0; i < 3; ++i) {
            if (!g[i].is_number_unsigned() || g[i].get<std::size_t>() == 0)
                throw ConfigError(ctx + ": grid dimensions must be positive integers");
            spec.grid[i] = g[i].get<std::size_t>();
        }
    }

    spec.voxel_size_mm = get_number(doc, "voxel_size_mm", spec.voxel_size_mm, ctx);
    spec.noise_sigma = get_number(doc, "noise_sigma", spec.noise_sigma, ctx);

    if (doc.contains("paradigms")) {
        spec.paradigms = get_string_list(doc, "paradigms", ctx);
        for (const auto& p : spec.paradigms)
            if (!is_valid_paradigm(p)) throw ConfigError(ctx + ": unknown paradigm '" + p + "'");
    }

    if (doc.contains("embeddings")) {
        const json& embs = doc.at("embeddings");
        if (!embs.is_array()) throw ConfigError(ctx + ": 'embeddings' must be an array");
        for (const auto& e : embs) {
            check_keys(e, {"name", "dimension"}, ctx + ": embeddings");
            if (!e.contains("name") || !e.at("name").is_string() || !e.contains("dimension") ||
                !e.at("dimension").is_number_unsigned())
                throw ConfigError(ctx + ": embeddings entries need a name and a dimension");
            EmbeddingSpec es;
            es.name = e.at("name").get<std::string>();
            es.dimension = e.at("dimension").get<std::size_t>();
            if (es.dimension == 0) throw ConfigError(ctx + ": embedding dimension must be > 0");
            spec.embeddings.push_back(es);
        }
    }

    const std::size_t n_voxels = spec.n_voxels();

    if (doc.contains("rois")) {
        const json& rois = doc.at("rois");
        if (!rois.is_object()) throw ConfigError(ctx + ": 'rois' must be an object");
        std::size_t roi_index = 0;
        for (const auto& item : rois.items()) {
            const std::string roi_ctx = ctx + ": roi " + item.key();
            if (item.value().is_number_unsigned()) {
                const auto count = item.value().get<std::size_t>();
                if (count == 0 || count > n_voxels)
                    throw ConfigError(roi_ctx + ": count must be in [1, " +
                                      std::to_string(n_voxels) + "]");
                Rng rng(derive_seed(spec.seed, kRoiResolveStream + roi_index));
                spec.rois[item.key()] = rng.sample_without_replacement(n_voxels, count);
            } else {
                spec.rois[item.key()] = parse_voxel_array(item.value(), n_voxels, roi_ctx);
            }
            ++roi_index;
        }
    }

    if (doc.contains("areas")) {
        const json& areas = doc.at("areas");
        if (!areas.is_object()) throw ConfigError(ctx + ": 'areas' must be an object");
        if (areas.contains("slabs") && areas.at("slabs").is_number_unsigned()) {
            if (areas.size() != 1)
                throw ConfigError(ctx + ": 'areas' with 'slabs' takes no other keys");
            spec.areas = slab_areas(spec.grid, areas.at("slabs").get<std::size_t>());
        } else {
            for (const auto& item : areas.items())
                spec.areas[item.key()] =
                    parse_voxel_array(item.value(), n_voxels, ctx + ": area " + item.key());
        }
    }

    if (doc.contains("effects")) {
        const json& effects = doc.at("effects");
        if (!effects.is_array()) throw ConfigError(ctx + ": 'effects' must be an array");
        std::size_t effect_index = 0;
        for (const auto& e : effects) {
            const std::string ectx = ctx + ": effect " + std::to_string(effect_index);
            check_keys(e,
                       {"kind", "voxels", "n_voxels", "roi", "area", "effect_size",
                        "source_embedding", "map_noise_sigma"},
                       ectx);
            if (!e.contains("kind") || !e.at("kind").is_string())
                throw ConfigError(ectx + ": 'kind' is mandatory");
            const std::string kind = e.at("kind").get<std::string>();
            PlantedEffect effect;
            if (kind == "class_separation") effect.kind = EffectKind::ClassSeparation;
            else if (kind == "latent_factor") effect.kind = EffectKind::LatentFactor;
            else if (kind == "linear_map") effect.kind = EffectKind::LinearMap;
            else if (kind == "cross_paradigm_stability")
                effect.kind = EffectKind::CrossParadigmStability;
            else throw ConfigError(ectx + ": unknown kind '" + kind + "'");

            const int placements = int(e.contains("voxels")) + int(e.contains("n_voxels")) +
                                   int(e.contains("roi")) + int(e.contains("area"));
            if (placements > 1)
                throw ConfigError(ectx + ": give at most one of voxels/n_voxels/roi/area");
            if (e.contains("voxels")) {
                effect.voxels = parse_voxel_array(e.at("voxels"), n_voxels, ectx);
            } else if (e.contains("n_voxels")) {
                if (!e.at("n_voxels").is_number_unsigned())
                    throw ConfigError(ectx + ": 'n_voxels' must be a non-negative integer");
                const auto count = e.at("n_voxels").get<std::size_t>();
                if (count == 0 || count > n_voxels)
                    throw ConfigError(ectx + ": n_voxels must be in [1, " +
                                      std::to_string(n_voxels) + "]");
                Rng rng(derive_seed(spec.seed, kEffectResolveStream + effect_index));
                effect.voxels = rng.sample_without_replacement(n_voxels, count);
            } else if (e.contains("roi")) {
                if (!e.at("roi").is_string()) throw ConfigError(ectx + ": 'roi' must be a string");
                const auto name = e.at("roi").get<std::string>();
                const auto it = spec.rois.find(name);
                if (it == spec.rois.end())
                    throw ConfigError(ectx + ": roi '" + name + "' is not declared");
                effect.voxels = it->second;
            } else if (e.contains("area")) {
                if (!e.at("area").is_string())
                    throw ConfigError(ectx + ": 'area' must be a string");
                const auto name = e.at("area").get<std::string>();
                const auto it = spec.areas.find(name);
                if (it == spec.areas.end())
                    throw ConfigError(ectx + ": area '" + name + "' is not declared");
                effect.voxels = it->second;
            }
            // No placement given: effect.voxels stays empty = the whole volume.

            effect.effect_size = get_number(e, "effect_size", effect.effect_size, ectx);
            effect.map_noise_sigma = get_number(e, "map_noise_sigma", effect.map_noise_sigma,
                                                ectx);
            if (e.contains("source_embedding")) {
                if (!e.at("source_embedding").is_string())
                    throw ConfigError(ectx + ": 'source_embedding' must be a string");
                effect.source_embedding = e.at("source_embedding").get<std::string>();
            }
            if (effect.kind == EffectKind::LinearMap && effect.source_embedding.empty())
                throw ConfigError(ectx + ": linear_map needs a source_embedding");

            spec.effects.push_back(std::move(effect));
            ++effect_index;
        }
    }

    return spec;
}

} // namespace mvpa
