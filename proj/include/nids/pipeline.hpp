#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nids/gan.hpp"
#include "nids/gbt.hpp"

namespace nids::pipeline {

struct TuneConfig {
    bool enabled = false;
    int budget = 20;
    gbt::TuneSpace space;
    std::uint64_t seed = 17;
};

struct IsoConfig {
    int trees = 100;
    int psi = 256; // capped at the row count when fitting
    std::uint64_t seed = 17;
};

struct PipelineConfig {
    std::string dataset_path;
    std::string schema_path;    // empty -> built-in NSL-KDD schema
    std::string label_map_path; // empty -> built-in mapping
    std::string out_dir = "out";
    std::set<std::string> keep_classes; // empty -> built-in report classes

    std::vector<std::string> sentinels{"*", "99999"};
    bool drop_missing = true;

    std::map<std::string, std::string> encoder_overrides; // column -> directive

    std::array<double, 3> split_ratios{0.6, 0.2, 0.2};
    std::uint64_t split_seed = 17;

    gbt::GbtConfig gbt;
    TuneConfig tune;
    IsoConfig isoforest;
    gan::GanConfig gan;
    std::map<std::string, int> gan_targets; // empty -> every attack class up to the largest attack class

    static PipelineConfig load(const std::string& path);
    void override_seed(std::uint64_t seed);
    void override_out_dir(const std::string& dir);
    // referenced input files must exist; the output directory is created
    void validate_inputs() const;

    std::string artifact(const std::string& name) const;
};

void cmd_ingest(const PipelineConfig& cfg);
void cmd_train(const PipelineConfig& cfg, bool augmented);
void cmd_anomaly(const PipelineConfig& cfg);
void cmd_compare(const PipelineConfig& cfg);
void cmd_eda(const PipelineConfig& cfg);
void cmd_all(const PipelineConfig& cfg);

// exit-code wrapper: 0 ok, 1 data/validation error, 2 missing input
int run_command(const std::string& command, const PipelineConfig& cfg, bool augmented = false);

} // namespace nids::pipeline
