#include "mvpa/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "mvpa/stats.hpp"

static_assert(std::endian::native == std::endian::little,
              "raw float32 files are little-endian; big-endian hosts are not supported");

namespace mvpa {

using nlohmann::json;

bool is_valid_paradigm(const std::string& name) {
    return std::find(kParadigmNames.begin(), kParadigmNames.end(), name) != kParadigmNames.end();
}

std::string to_string(ConcretenessLabel label) {
    switch (label) {
        case ConcretenessLabel::Concrete: return "concrete";
        case ConcretenessLabel::Abstract: return "abstract";
        case ConcretenessLabel::Excluded: return "excluded";
    }
    return "?";
}

std::vector<ConcretenessLabel> label_concreteness(const std::vector<double>& ratings,
                                                  double half_std_factor) {
    if (ratings.empty()) throw InvalidArgument("label_concreteness: no ratings");
    if (!(half_std_factor >= 0.0))
        throw InvalidArgument("label_concreteness: half_std_factor must be >= 0");
    for (double r : ratings)
        if (!std::isfinite(r))
            throw DegenerateInput("label_concreteness: non-finite rating");

    const double m = mean(ratings);
    const double s = population_stddev(ratings);
    if (s == 0.0)
        throw DegenerateInput("label_concreteness: ratings have zero variance");

    const double hi = m + half_std_factor * s;
    const double lo = m - half_std_factor * s;
    std::vector<ConcretenessLabel> labels(ratings.size());
    for (std::size_t i = 0; i < ratings.size(); ++i) {
        if (ratings[i] >= hi) labels[i] = ConcretenessLabel::Concrete;
        else if (ratings[i] <= lo) labels[i] = ConcretenessLabel::Abstract;
        else labels[i] = ConcretenessLabel::Excluded;
    }
    return labels;
}

ConceptSet::ConceptSet(std::vector<Concept> concepts, double half_std_factor)
    : concepts_(std::move(concepts)) {
    std::vector<double> ratings(concepts_.size());
    for (std::size_t i = 0; i < concepts_.size(); ++i) ratings[i] = concepts_[i].rating;
    labels_ = label_concreteness(ratings, half_std_factor);
}

std::vector<double> ConceptSet::ratings() const {
    std::vector<double> r(concepts_.size());
    for (std::size_t i = 0; i < concepts_.size(); ++i) r[i] = concepts_[i].rating;
    return r;
}

std::size_t ConceptSet::count(ConcretenessLabel label) const {
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
}

std::vector<std::size_t> ConceptSet::labeled_indices() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels_.size(); ++i)
        if (labels_[i] != ConcretenessLabel::Excluded) idx.push_back(i);
    return idx;
}

std::vector<int> ConceptSet::labeled_targets() const {
    std::vector<int> t;
    for (auto label : labels_)
        if (label != ConcretenessLabel::Excluded)
            t.push_back(label == ConcretenessLabel::Concrete ? +1 : -1);
    return t;
}

double ConceptSet::abstract_proportion() const {
    const std::size_t labeled = count(ConcretenessLabel::Concrete) + count(ConcretenessLabel::Abstract);
    if (labeled == 0) throw DegenerateInput("ConceptSet: no labeled concepts");
    return static_cast<double>(count(ConcretenessLabel::Abstract)) / static_cast<double>(labeled);
}

std::set<std::string> VolumeGeometry::roi_names() const {
    std::set<std::string> names;
    for (const auto& per_voxel : roi_labels)
        names.insert(per_voxel.begin(), per_voxel.end());
    return names;
}

std::set<std::string> VolumeGeometry::area_names() const {
    std::set<std::string> names;
    for (const auto& a : area_labels)
        if (!a.empty()) names.insert(a);
    return names;
}

void validate_geometry(const VolumeGeometry& geometry) {
    const std::size_t n = geometry.voxel_count();
    if (!(geometry.voxel_size_mm > 0.0))
        throw FormatError("geometry: voxel_size_mm must be positive");
    if (geometry.area_labels.size() != n)
        throw FormatError("geometry: area_labels size does not match voxel count");
    if (geometry.roi_labels.size() != n)
        throw FormatError("geometry: roi_labels size does not match voxel count");
    if (n == 0) return;

    std::array<double, 3> origin = geometry.coordinates[0];
    for (const auto& c : geometry.coordinates)
        for (int k = 0; k < 3; ++k) origin[k] = std::min(origin[k], c[k]);

    std::unordered_set<std::uint64_t> seen;
    seen.reserve(n * 2);
    const double vs = geometry.voxel_size_mm;
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t key = 0;
        for (int k = 0; k < 3; ++k) {
            const double steps = (geometry.coordinates[i][k] - origin[k]) / vs;
            const double rounded = std::round(steps);
            if (std::abs(steps - rounded) > 1e-6)
                throw FormatError("geometry: voxel " + std::to_string(i) +
                                  " is not on the " + std::to_string(vs) + " mm grid");
            if (rounded < 0.0 || rounded > 2097151.0)
                throw FormatError("geometry: voxel " + std::to_string(i) + " grid index out of range");
            key = (key << 21) | static_cast<std::uint64_t>(rounded);
        }
        if (!seen.insert(key).second)
            throw FormatError("geometry: duplicate voxel coordinates at index " + std::to_string(i));
    }
}

const Matrix& SubjectData::activation(const std::string& paradigm) const {
    auto it = paradigms.find(paradigm);
    if (it == paradigms.end())
        throw InvalidArgument("subject " + subject_id + " has no paradigm '" + paradigm + "'");
    return it->second;
}

std::vector<double> average_repetitions(const Matrix& instances) {
    if (instances.rows() == 0) throw InvalidArgument("average_repetitions: no instances");
    std::vector<double> out(instances.cols());
    std::vector<double> column(instances.rows());
    for (std::size_t j = 0; j < instances.cols(); ++j) {
        for (std::size_t i = 0; i < instances.rows(); ++i) column[i] = instances(i, j);
        out[j] = mean(column);
    }
    return out;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

double parse_double(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw FormatError(context + ": cannot parse number '" + s + "'");
    }
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ifstream open_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return in;
}

json load_json(const std::filesystem::path& path) {
    auto in = open_text(path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": invalid JSON: " + e.what());
    }
    return j;
}

} // namespace

ConceptSet load_concepts_csv(const std::filesystem::path& path, double half_std_factor) {
    auto in = open_text(path);
    std::string line;
    if (!std::getline(in, line))
        throw FormatError(path.string() + ": empty file");
    if (strip_cr(line) != "id,word,rating")
        throw FormatError(path.string() + ": expected header 'id,word,rating'");

    std::vector<Concept> concepts;
    std::unordered_set<std::string> ids;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 3)
            throw FormatError(path.string() + ":" + std::to_string(line_no) +
                              ": expected 3 fields, got " + std::to_string(fields.size()));
        Concept c;
        c.id = fields[0];
        c.word = fields[1];
        c.rating = parse_double(fields[2], path.string() + ":" + std::to_string(line_no));
        if (c.id.empty())
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": empty concept id");
        if (!ids.insert(c.id).second)
            throw FormatError(path.string() + ":" + std::to_string(line_no) +
                              ": duplicate concept id '" + c.id + "'");
        concepts.push_back(std::move(c));
    }
    if (concepts.empty()) throw FormatError(path.string() + ": no concepts");
    return ConceptSet(std::move(concepts), half_std_factor);
}

EmbeddingSet load_embeddings(const std::filesystem::path& path,
                             const ConceptSet& concepts,
                             const std::string& name) {
    auto in = open_text(path);
    std::string line;
    if (!std::getline(in, line))
        throw FormatError(path.string() + ": empty file");
    const auto header = split(strip_cr(line), ',');
    if (header.empty() || header[0] != "id")
        throw FormatError(path.string() + ": first header field must be 'id'");
    const std::size_t dim = header.size() - 1;
    if (dim == 0) throw FormatError(path.string() + ": no value columns");

    std::unordered_map<std::string, std::size_t> row_of;
    for (std::size_t i = 0; i < concepts.size(); ++i) row_of[concepts.at(i).id] = i;

    Matrix vectors(concepts.size(), dim);
    std::vector<bool> filled(concepts.size(), false);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        const std::string where = path.string() + ":" + std::to_string(line_no);
        if (fields.size() != dim + 1)
            throw FormatError(where + ": expected " + std::to_string(dim + 1) + " fields, got " +
                              std::to_string(fields.size()));
        auto it = row_of.find(fields[0]);
        if (it == row_of.end())
            throw FormatError(where + ": unknown concept id '" + fields[0] + "'");
        if (filled[it->second])
            throw FormatError(where + ": duplicate embedding for '" + fields[0] + "'");
        filled[it->second] = true;
        for (std::size_t j = 0; j < dim; ++j)
            vectors(it->second, j) = parse_double(fields[j + 1], where);
    }
    for (std::size_t i = 0; i < concepts.size(); ++i)
        if (!filled[i])
            throw FormatError(path.string() + ": missing embedding for concept '" +
                              concepts.at(i).id + "'");

    EmbeddingSet set{name, std::move(vectors)};
    for (std::size_t i = 0; i < set.vectors.rows(); ++i) {
        bool all_zero = true;
        for (double v : set.vectors.row(i))
            if (v != 0.0) { all_zero = false; break; }
        if (all_zero)
            throw FormatError(path.string() + ": all-zero embedding for concept '" +
                              concepts.at(i).id + "'");
    }
    return set;
}

Matrix read_f32_matrix(const std::filesystem::path& path, std::size_t rows, std::size_t cols) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const std::uint64_t actual = static_cast<std::uint64_t>(in.tellg());
    const std::uint64_t expected = std::uint64_t{rows} * cols * sizeof(float);
    if (actual != expected)
        throw FormatError(path.string() + ": expected " + std::to_string(expected) +
                          " bytes (" + std::to_string(rows) + "x" + std::to_string(cols) +
                          " float32), found " + std::to_string(actual));
    in.seekg(0, std::ios::beg);
    std::vector<float> buf(rows * cols);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(expected));
    if (!in) throw IoError("short read on " + path.string());
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < buf.size(); ++i) m.data()[i] = static_cast<double>(buf[i]);
    return m;
}

void write_f32_matrix(const std::filesystem::path& path, const Matrix& m) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    std::vector<float> buf(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) buf[i] = static_cast<float>(m.data()[i]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out) throw IoError("short write on " + path.string());
}

namespace {

VolumeGeometry load_voxels_csv(const std::filesystem::path& path, std::size_t n_voxels,
                               double voxel_size_mm) {
    auto in = open_text(path);
    std::string line;
    if (!std::getline(in, line))
        throw FormatError(path.string() + ": empty file");
    if (strip_cr(line) != "index,x_mm,y_mm,z_mm,area_label,roi_labels")
        throw FormatError(path.string() +
                          ": expected header 'index,x_mm,y_mm,z_mm,area_label,roi_labels'");

    VolumeGeometry g;
    g.voxel_size_mm = voxel_size_mm;
    g.coordinates.resize(n_voxels);
    g.area_labels.resize(n_voxels);
    g.roi_labels.resize(n_voxels);
    std::vector<bool> seen(n_voxels, false);

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        const std::string where = path.string() + ":" + std::to_string(line_no);
        if (fields.size() != 6)
            throw FormatError(where + ": expected 6 fields, got " + std::to_string(fields.size()));
        const double idx_d = parse_double(fields[0], where);
        const std::size_t idx = static_cast<std::size_t>(idx_d);
        if (idx_d != static_cast<double>(idx) || idx >= n_voxels)
            throw FormatError(where + ": voxel index out of range");
        if (seen[idx]) throw FormatError(where + ": duplicate voxel index");
        seen[idx] = true;
        for (int k = 0; k < 3; ++k)
            g.coordinates[idx][k] = parse_double(fields[1 + k], where);
        g.area_labels[idx] = fields[4];
        if (!fields[5].empty()) {
            auto rois = split(fields[5], '|');
            std::sort(rois.begin(), rois.end());
            rois.erase(std::unique(rois.begin(), rois.end()), rois.end());
            g.roi_labels[idx] = std::move(rois);
        }
    }
    for (std::size_t i = 0; i < n_voxels; ++i)
        if (!seen[i])
            throw FormatError(path.string() + ": missing row for voxel " + std::to_string(i));
    validate_geometry(g);
    return g;
}

void write_voxels_csv(const std::filesystem::path& path, const VolumeGeometry& g) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "index,x_mm,y_mm,z_mm,area_label,roi_labels\n";
    for (std::size_t i = 0; i < g.voxel_count(); ++i) {
        out << i;
        for (int k = 0; k < 3; ++k) out << ',' << format_double(g.coordinates[i][k]);
        out << ',' << g.area_labels[i] << ',';
        for (std::size_t r = 0; r < g.roi_labels[i].size(); ++r) {
            if (r) out << '|';
            out << g.roi_labels[i][r];
        }
        out << '\n';
    }
    if (!out) throw IoError("short write on " + path.string());
}

} // namespace

Dataset load_dataset(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    const json manifest = load_json(manifest_path);

    auto require = [&](const char* key) -> const json& {
        if (!manifest.contains(key))
            throw FormatError(manifest_path.string() + ": missing field '" + key + "'");
        return manifest.at(key);
    };

    Dataset ds;
    try {
        ds.subject.subject_id = require("subject_id").get<std::string>();
        const auto n_concepts = require("n_concepts").get<std::size_t>();
        const auto n_voxels = require("n_voxels").get<std::size_t>();
        const auto voxel_size = require("voxel_size_mm").get<double>();
        const auto concepts_file = require("concepts_file").get<std::string>();
        const auto voxels_file = require("voxels_file").get<std::string>();
        const json& paradigms = require("paradigms");
        if (!paradigms.is_object() || paradigms.empty())
            throw FormatError(manifest_path.string() + ": 'paradigms' must be a non-empty object");

        ds.concepts = load_concepts_csv(dir / concepts_file);
        if (ds.concepts.size() != n_concepts)
            throw FormatError(manifest_path.string() + ": n_concepts=" + std::to_string(n_concepts) +
                              " but " + concepts_file + " has " + std::to_string(ds.concepts.size()));

        ds.subject.geometry = load_voxels_csv(dir / voxels_file, n_voxels, voxel_size);

        for (const auto& [name, file] : paradigms.items()) {
            if (!is_valid_paradigm(name))
                throw FormatError(manifest_path.string() + ": unknown paradigm '" + name + "'");
            ds.subject.paradigms[name] =
                read_f32_matrix(dir / file.get<std::string>(), n_concepts, n_voxels);
        }

        if (manifest.contains("embeddings")) {
            const json& embeddings = manifest.at("embeddings");
            if (!embeddings.is_object())
                throw FormatError(manifest_path.string() + ": 'embeddings' must be an object");
            for (const auto& [name, entry] : embeddings.items()) {
                const auto file = entry.at("file").get<std::string>();
                const auto dim = entry.at("dimension").get<std::size_t>();
                EmbeddingSet set{name, read_f32_matrix(dir / file, n_concepts, dim)};
                for (std::size_t i = 0; i < set.vectors.rows(); ++i) {
                    bool all_zero = true;
                    for (double v : set.vectors.row(i))
                        if (v != 0.0) { all_zero = false; break; }
                    if (all_zero)
                        throw FormatError(std::string(file) + ": all-zero embedding row " +
                                          std::to_string(i));
                }
                ds.embeddings[name] = std::move(set);
            }
        }
    } catch (const json::exception& e) {
        throw FormatError(manifest_path.string() + ": " + e.what());
    }
    return ds;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
    std::filesystem::create_directories(dir);

    const std::size_t n_concepts = dataset.concepts.size();
    const std::size_t n_voxels = dataset.subject.geometry.voxel_count();
    for (const auto& [name, m] : dataset.subject.paradigms) {
        if (!is_valid_paradigm(name))
            throw InvalidArgument("write_dataset: unknown paradigm '" + name + "'");
        if (m.rows() != n_concepts || m.cols() != n_voxels)
            throw InvalidArgument("write_dataset: paradigm '" + name + "' has shape " +
                                  std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                  ", expected " + std::to_string(n_concepts) + "x" +
                                  std::to_string(n_voxels));
    }

    {
        std::ofstream out(dir / "concepts.csv", std::ios::trunc);
        if (!out) throw IoError("cannot write concepts.csv");
        out << "id,word,rating\n";
        for (const auto& c : dataset.concepts.concepts())
            out << c.id << ',' << c.word << ',' << format_double(c.rating) << '\n';
    }
    write_voxels_csv(dir / "voxels.csv", dataset.subject.geometry);

    json paradigms = json::object();
    for (const auto& [name, m] : dataset.subject.paradigms) {
        const std::string file = "activations_" + name + ".f32";
        write_f32_matrix(dir / file, m);
        paradigms[name] = file;
    }

    json embeddings = json::object();
    for (const auto& [name, set] : dataset.embeddings) {
        if (set.vectors.rows() != n_concepts)
            throw InvalidArgument("write_dataset: embedding '" + name + "' row count mismatch");
        const std::string file = "embeddings_" + name + ".f32";
        write_f32_matrix(dir / file, set.vectors);
        embeddings[name] = {{"file", file}, {"dimension", set.vectors.cols()}};
    }

    json manifest = {
        {"subject_id", dataset.subject.subject_id},
        {"n_concepts", n_concepts},
        {"n_voxels", n_voxels},
        {"voxel_size_mm", dataset.subject.geometry.voxel_size_mm},
        {"concepts_file", "concepts.csv"},
        {"voxels_file", "voxels.csv"},
        {"paradigms", paradigms},
    };
    if (!embeddings.empty()) manifest["embeddings"] = embeddings;

    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) throw IoError("cannot write manifest.json");
    out << manifest.dump(2) << '\n';
}

} // namespace mvpa
