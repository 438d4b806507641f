#include "nids/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "nids/kernels.hpp"

namespace nids::ingest {

// ---------------------------------------------------------------------------
// schema
// ---------------------------------------------------------------------------

namespace {

const char* kind_name(ColumnKind k) {
    switch (k) {
    case ColumnKind::continuous: return "continuous";
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::label: return "label";
    }
    return "?";
}

ColumnKind kind_from(const std::string& s, const std::string& ctx) {
    if (s == "continuous") return ColumnKind::continuous;
    if (s == "categorical") return ColumnKind::categorical;
    if (s == "label") return ColumnKind::label;
    throw Error("schema: unknown column kind '" + s + "' (" + ctx + ")");
}

// 41 NSL-KDD features in file order; categorical: protocol_type, service, flag
const std::pair<const char*, ColumnKind> kNslKdd[] = {
    {"duration", ColumnKind::continuous},
    {"protocol_type", ColumnKind::categorical},
    {"service", ColumnKind::categorical},
    {"flag", ColumnKind::categorical},
    {"src_bytes", ColumnKind::continuous},
    {"dst_bytes", ColumnKind::continuous},
    {"land", ColumnKind::continuous},
    {"wrong_fragment", ColumnKind::continuous},
    {"urgent", ColumnKind::continuous},
    {"hot", ColumnKind::continuous},
    {"num_failed_logins", ColumnKind::continuous},
    {"logged_in", ColumnKind::continuous},
    {"num_compromised", ColumnKind::continuous},
    {"root_shell", ColumnKind::continuous},
    {"su_attempted", ColumnKind::continuous},
    {"num_root", ColumnKind::continuous},
    {"num_file_creations", ColumnKind::continuous},
    {"num_shells", ColumnKind::continuous},
    {"num_access_files", ColumnKind::continuous},
    {"num_outbound_cmds", ColumnKind::continuous},
    {"is_host_login", ColumnKind::continuous},
    {"is_guest_login", ColumnKind::continuous},
    {"count", ColumnKind::continuous},
    {"srv_count", ColumnKind::continuous},
    {"serror_rate", ColumnKind::continuous},
    {"srv_serror_rate", ColumnKind::continuous},
    {"rerror_rate", ColumnKind::continuous},
    {"srv_rerror_rate", ColumnKind::continuous},
    {"same_srv_rate", ColumnKind::continuous},
    {"diff_srv_rate", ColumnKind::continuous},
    {"srv_diff_host_rate", ColumnKind::continuous},
    {"dst_host_count", ColumnKind::continuous},
    {"dst_host_srv_count", ColumnKind::continuous},
    {"dst_host_same_srv_rate", ColumnKind::continuous},
    {"dst_host_diff_srv_rate", ColumnKind::continuous},
    {"dst_host_same_src_port_rate", ColumnKind::continuous},
    {"dst_host_srv_diff_host_rate", ColumnKind::continuous},
    {"dst_host_serror_rate", ColumnKind::continuous},
    {"dst_host_srv_serror_rate", ColumnKind::continuous},
    {"dst_host_rerror_rate", ColumnKind::continuous},
    {"dst_host_srv_rerror_rate", ColumnKind::continuous},
};

} // namespace

int Schema::label_position() const {
    for (const auto& c : columns)
        if (c.kind == ColumnKind::label) return c.position;
    return -1;
}

int Schema::find(const std::string& name) const {
    for (const auto& c : columns)
        if (c.name == name) return c.position;
    return -1;
}

void Schema::validate() const {
    if (columns.empty()) throw Error("schema: no columns");
    std::vector<bool> seen(columns.size(), false);
    int labels = 0;
    for (const auto& c : columns) {
        if (c.position < 0 || static_cast<std::size_t>(c.position) >= columns.size())
            throw Error("schema: position out of range for column '" + c.name + "'");
        if (seen[c.position]) throw Error("schema: duplicate position for column '" + c.name + "'");
        seen[c.position] = true;
        if (c.kind == ColumnKind::label) ++labels;
    }
    if (labels != 1) throw Error("schema: exactly one label column required, found " + std::to_string(labels));
}

Schema Schema::nslkdd() {
    Schema s;
    int pos = 0;
    for (const auto& [name, kind] : kNslKdd) s.columns.push_back({name, kind, pos++});
    s.columns.push_back({"label", ColumnKind::label, pos});
    s.validate();
    return s;
}

Schema Schema::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("schema file not found: " + path);
    Schema s;
    std::string line;
    int pos = 0;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string name, kind;
        if (!(ls >> name >> kind))
            throw Error("schema " + path + ": line " + std::to_string(lineno) + ": expected '<name> <kind>'");
        s.columns.push_back({name, kind_from(kind, path + ":" + std::to_string(lineno)), pos++});
    }
    s.validate();
    return s;
}

void Schema::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write schema file: " + path);
    for (const auto& c : columns) out << c.name << ' ' << kind_name(c.kind) << '\n';
}

// ---------------------------------------------------------------------------
// dataset
// ---------------------------------------------------------------------------

std::size_t TabularDataset::n_rows() const {
    if (columns.empty()) return 0;
    const Column& c = columns.front();
    return c.kind == ColumnKind::continuous ? c.num.size() : c.tok.size();
}

const std::vector<std::string>& TabularDataset::labels() const {
    return columns[schema.label_position()].tok;
}

std::vector<std::string>& TabularDataset::labels() {
    return columns[schema.label_position()].tok;
}

bool TabularDataset::cell_missing(std::size_t row, std::size_t col) const {
    const Column& c = columns[col];
    if (c.kind == ColumnKind::continuous) return std::isnan(c.num[row]);
    return c.tok[row].empty();
}

std::string TabularDataset::cell_token(std::size_t row, std::size_t col) const {
    const Column& c = columns[col];
    if (c.kind != ColumnKind::continuous) return c.tok[row];
    if (!c.tok[row].empty()) return c.tok[row];
    return format_double(c.num[row]);
}

TabularDataset TabularDataset::select_rows(const std::vector<int>& indices) const {
    TabularDataset out;
    out.schema = schema;
    out.provenance = provenance;
    out.columns.resize(columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const Column& src = columns[c];
        Column& dst = out.columns[c];
        dst.kind = src.kind;
        if (src.kind == ColumnKind::continuous) {
            dst.num.reserve(indices.size());
            for (int i : indices) dst.num.push_back(src.num[i]);
            if (!src.tok.empty()) {
                dst.tok.reserve(indices.size());
                for (int i : indices) dst.tok.push_back(src.tok[i]);
            }
        } else {
            dst.tok.reserve(indices.size());
            for (int i : indices) dst.tok.push_back(src.tok[i]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// parse
// ---------------------------------------------------------------------------

namespace {

void split_fields(const std::string& line, std::vector<std::string>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.emplace_back(line.substr(start));
            return;
        }
        out.emplace_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

} // namespace

TabularDataset parse_nslkdd(std::istream& source, const Schema& schema, const std::string& provenance) {
    schema.validate();
    const std::size_t width = schema.size();

    std::vector<std::string> lines;
    std::string line;
    while (std::getline(source, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        lines.push_back(std::move(line));
    }
    if (lines.empty()) throw Error("empty source" + (provenance.empty() ? "" : ": " + provenance));

    TabularDataset ds;
    ds.schema = schema;
    ds.provenance = provenance;
    ds.columns.resize(width);
    const std::size_t n = lines.size();
    for (std::size_t c = 0; c < width; ++c) {
        Column& col = ds.columns[c];
        col.kind = schema.columns[c].kind;
        if (col.kind == ColumnKind::continuous) {
            col.num.resize(n);
            col.tok.resize(n);
        } else {
            col.tok.resize(n);
        }
    }

    // lines parse independently; rows land at their input position
    std::vector<std::string> errors(n);
    kernels::parallel_for(n, [&](std::size_t i) {
        std::vector<std::string> fields;
        split_fields(lines[i], fields);
        if (fields.size() != width && fields.size() != width + 1) {
            errors[i] = "line " + std::to_string(i + 1) + ": expected " + std::to_string(width) + " or " +
                        std::to_string(width + 1) + " fields, got " + std::to_string(fields.size());
            return;
        }
        // the extra trailing field, the difficulty score, is discarded when present
        for (std::size_t c = 0; c < width; ++c) {
            Column& col = ds.columns[c];
            std::string& cell = fields[c];
            if (col.kind == ColumnKind::continuous) {
                auto v = parse_double(cell);
                if (v.has_value()) {
                    col.num[i] = *v;
                    if (format_double(*v) != cell) col.tok[i] = std::move(cell);
                } else {
                    col.num[i] = std::numeric_limits<double>::quiet_NaN();
                    col.tok[i] = std::move(cell); // raw kept; resolved by clean()
                }
            } else {
                col.tok[i] = std::move(cell);
            }
        }
    });
    for (const std::string& e : errors)
        if (!e.empty()) throw Error("parse error" + (provenance.empty() ? "" : " in " + provenance) + ", " + e);
    return ds;
}

TabularDataset parse_nslkdd_file(const std::string& path, const Schema& schema) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("dataset file not found: " + path);
    return parse_nslkdd(in, schema, path);
}

// ---------------------------------------------------------------------------
// clean
// ---------------------------------------------------------------------------

const std::set<std::string>& default_sentinels() {
    static const std::set<std::string> s{"*", "99999"};
    return s;
}

CleanResult clean(const TabularDataset& ds, const std::set<std::string>& sentinels, bool drop_missing) {
    CleanResult res;
    res.dataset = ds;
    TabularDataset& out = res.dataset;
    const std::size_t n = ds.n_rows();
    const std::size_t width = ds.schema.size();

    // pass 1: whole-token sentinel cells -> numeric 0
    for (std::size_t c = 0; c < width; ++c) {
        Column& col = out.columns[c];
        if (col.kind == ColumnKind::continuous) {
            for (std::size_t i = 0; i < n; ++i) {
                const std::string& raw = col.tok[i];
                const std::string tokv = raw.empty() ? format_double(col.num[i]) : raw;
                if (sentinels.count(tokv)) {
                    col.num[i] = 0.0;
                    col.tok[i].clear();
                    ++res.report.cells_replaced;
                }
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                if (!col.tok[i].empty() && sentinels.count(col.tok[i])) {
                    col.tok[i] = "0";
                    ++res.report.cells_replaced;
                }
            }
        }
    }

    // pass 2: drop rows that still hold a missing cell
    if (drop_missing) {
        std::vector<int> keep;
        keep.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            bool missing = false;
            for (std::size_t c = 0; c < width && !missing; ++c) missing = out.cell_missing(i, c);
            if (!missing)
                keep.push_back(static_cast<int>(i));
            else
                ++res.report.rows_dropped;
        }
        if (keep.size() != n) out = out.select_rows(keep);
    }
    return res;
}

// ---------------------------------------------------------------------------
// statistics
// ---------------------------------------------------------------------------

std::size_t cardinality(const TabularDataset& ds, const std::string& column) {
    int pos = ds.schema.find(column);
    if (pos < 0) throw Error("cardinality: unknown column '" + column + "'");
    const Column& col = ds.columns[pos];
    if (col.kind == ColumnKind::continuous) {
        std::unordered_set<double> distinct(col.num.begin(), col.num.end());
        return distinct.size();
    }
    std::unordered_set<std::string> distinct(col.tok.begin(), col.tok.end());
    return distinct.size();
}

ClassHistogram class_distribution(const TabularDataset& ds) {
    std::map<std::string, std::size_t> counts;
    for (const std::string& l : ds.labels()) ++counts[l];
    ClassHistogram h;
    h.entries.assign(counts.begin(), counts.end());
    std::sort(h.entries.begin(), h.entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    for (const auto& [_, c] : h.entries) h.total += c;
    return h;
}

// ---------------------------------------------------------------------------
// label mapping
// ---------------------------------------------------------------------------

LabelMap LabelMap::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("label map file not found: " + path);
    LabelMap m;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string raw, report;
        if (!(ls >> raw >> report))
            throw Error("label map " + path + ": line " + std::to_string(lineno) + ": expected '<raw> <report>'");
        if (raw == "*")
            m.default_bucket = report;
        else
            m.mapping[raw] = report;
    }
    return m;
}

LabelMap LabelMap::builtin_nslkdd() {
    LabelMap m;
    for (const char* name : {"normal", "neptune", "smurf", "satan", "ipsweep", "portsweep", "nmap"})
        m.mapping[name] = name;
    // DoS raws other than neptune/smurf roll up into the DDoS report class
    for (const char* name : {"back", "land", "pod", "teardrop", "apache2", "udpstorm", "processtable", "mailbomb"})
        m.mapping[name] = "DDoS";
    m.default_bucket = "_dropped";
    return m;
}

std::set<std::string> LabelMap::builtin_keep() {
    return {"DDoS", "ipsweep", "neptune", "nmap", "normal", "portsweep", "satan", "smurf"};
}

MapResult map_labels(const TabularDataset& ds, const LabelMap& map, const std::set<std::string>& keep) {
    const std::vector<std::string>& raw = ds.labels();
    const std::size_t n = raw.size();
    std::vector<std::string> mapped(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto it = map.mapping.find(raw[i]);
        if (it != map.mapping.end()) {
            mapped[i] = it->second;
        } else if (map.default_bucket.has_value()) {
            mapped[i] = *map.default_bucket;
        } else {
            throw Error("map_labels: raw label '" + raw[i] + "' has no mapping and no default bucket");
        }
    }

    MapResult res;
    std::vector<int> kept;
    kept.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (keep.count(mapped[i])) {
            kept.push_back(static_cast<int>(i));
        } else {
            ++res.report.rows_dropped;
            ++res.report.dropped_by_raw_label[raw[i]];
        }
    }
    res.dataset = ds.select_rows(kept);
    std::vector<std::string>& out_labels = res.dataset.labels();
    for (std::size_t j = 0; j < kept.size(); ++j) {
        const std::string& m = mapped[kept[j]];
        if (out_labels[j] != m) {
            out_labels[j] = m;
            ++res.report.rows_relabeled;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// serialization (same comma-separated shape the parser accepts)
// ---------------------------------------------------------------------------

void serialize(const TabularDataset& ds, std::ostream& out) {
    const std::size_t n = ds.n_rows();
    const std::size_t width = ds.schema.size();
    std::string line;
    for (std::size_t i = 0; i < n; ++i) {
        line.clear();
        for (std::size_t c = 0; c < width; ++c) {
            if (c) line += ',';
            line += ds.cell_token(i, c);
        }
        line += '\n';
        out << line;
    }
}

void serialize_file(const TabularDataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write dataset file: " + path);
    serialize(ds, out);
}

} // namespace nids::ingest
