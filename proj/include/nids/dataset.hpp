#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nids/common.hpp"

namespace nids::ingest {

enum class ColumnKind { continuous, categorical, label };

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::continuous;
    int position = 0;
};

// Column schema; positions are contiguous and exactly one column is the label.
struct Schema {
    std::vector<ColumnSpec> columns;

    std::size_t size() const { return columns.size(); }
    int label_position() const;
    int find(const std::string& name) const; // -1 when absent
    void validate() const;

    // the standard 41-feature NSL-KDD layout plus the trailing label
    static Schema nslkdd();
    static Schema load(const std::string& path);
    void save(const std::string& path) const;
};

// Columnar storage. Continuous columns keep the raw token only for cells whose
// text is not the canonical rendering of the parsed value (unparseable cells,
// sentinels like "*", or odd spellings like "007"); missing continuous cells
// are NaN, missing categorical cells are empty tokens.
struct Column {
    ColumnKind kind = ColumnKind::continuous;
    std::vector<double> num;          // continuous only
    std::vector<std::string> tok;     // categorical/label values; raw text for continuous
};

struct TabularDataset {
    Schema schema;
    std::vector<Column> columns; // schema order, label column included
    std::string provenance;

    std::size_t n_rows() const;
    const std::vector<std::string>& labels() const; // label column tokens
    std::vector<std::string>& labels();

    bool cell_missing(std::size_t row, std::size_t col) const;
    // whole-cell text of a cell, as used for sentinel matching and serialization
    std::string cell_token(std::size_t row, std::size_t col) const;

    TabularDataset select_rows(const std::vector<int>& indices) const;
};

struct ClassHistogram {
    std::vector<std::pair<std::string, std::size_t>> entries; // descending count
    std::size_t total = 0;
};

struct CleanReport {
    std::size_t rows_dropped = 0;
    std::size_t cells_replaced = 0;
};

struct CleanResult {
    TabularDataset dataset;
    CleanReport report;
};

struct LabelMap {
    std::map<std::string, std::string> mapping;   // raw -> report
    std::optional<std::string> default_bucket;    // report label for unmapped raws ("*" line)

    static LabelMap load(const std::string& path);
    // ships with the repo: the 8 report classes, non-neptune/smurf DoS raws -> DDoS
    static LabelMap builtin_nslkdd();
    static std::set<std::string> builtin_keep();
};

struct MapReport {
    std::size_t rows_dropped = 0;
    std::map<std::string, std::size_t> dropped_by_raw_label;
    std::size_t rows_relabeled = 0;
};

struct MapResult {
    TabularDataset dataset;
    MapReport report;
};

// Parses comma-separated NSL-KDD text: 42 fields (41 features + label) or 43
// (trailing difficulty, discarded). Unparseable numeric cells become missing
// markers; clean() resolves them.
TabularDataset parse_nslkdd(std::istream& source, const Schema& schema, const std::string& provenance = "");
TabularDataset parse_nslkdd_file(const std::string& path, const Schema& schema);

const std::set<std::string>& default_sentinels(); // {"*", "99999"}

// Sentinel cells (whole-token match) become numeric 0 first; rows still holding
// a missing cell are then dropped when drop_missing is set. Total: never throws
// on data content.
CleanResult clean(const TabularDataset& ds, const std::set<std::string>& sentinels = default_sentinels(),
                  bool drop_missing = true);

std::size_t cardinality(const TabularDataset& ds, const std::string& column);

ClassHistogram class_distribution(const TabularDataset& ds);

MapResult map_labels(const TabularDataset& ds, const LabelMap& map, const std::set<std::string>& keep);

void serialize(const TabularDataset& ds, std::ostream& out);
void serialize_file(const TabularDataset& ds, const std::string& path);

} // namespace nids::ingest
