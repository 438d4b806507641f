#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "nids/kernels.hpp"
#include "nids/pipeline.hpp"

// Pipeline driver: ingest -> train [--augmented] -> anomaly -> compare -> eda,
// or everything at once with `all`. One JSON config file drives every stage;
// artifacts land in the configured output directory.

int main(int argc, char** argv) {
    CLI::App app{"NSL-KDD intrusion-detection pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool serial = false;

    app.add_option("--config", config_path, "pipeline config file (JSON)")->required();
    app.add_option("--out", out_dir, "override the output directory");
    app.add_option("--seed", seed, "override every seed in the config")->each([&](const std::string&) {
        seed_set = true;
    });
    app.add_flag("--serial", serial, "run the serial reference kernels instead of OpenMP");

    bool augmented = false;
    CLI::App* ingest = app.add_subcommand("ingest", "parse, clean and relabel the dataset");
    CLI::App* eda = app.add_subcommand("eda", "emit per-class feature summaries");
    CLI::App* train = app.add_subcommand("train", "train and evaluate the classifier");
    train->add_flag("--augmented", augmented, "rebalance minority classes with per-class GANs first");
    CLI::App* anomaly = app.add_subcommand("anomaly", "isolation-forest anomaly ranking per class");
    CLI::App* compare = app.add_subcommand("compare", "baseline vs augmented metrics report");
    CLI::App* all = app.add_subcommand("all", "run the whole pipeline");

    CLI11_PARSE(app, argc, argv);

    if (serial) nids::kernels::set_backend(nids::kernels::Backend::serial);

    nids::pipeline::PipelineConfig cfg;
    try {
        cfg = nids::pipeline::PipelineConfig::load(config_path);
    } catch (const nids::MissingInputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    if (!out_dir.empty()) cfg.override_out_dir(out_dir);
    if (seed_set) cfg.override_seed(seed);

    std::string command;
    if (ingest->parsed()) command = "ingest";
    if (eda->parsed()) command = "eda";
    if (train->parsed()) command = "train";
    if (anomaly->parsed()) command = "anomaly";
    if (compare->parsed()) command = "compare";
    if (all->parsed()) command = "all";

    return nids::pipeline::run_command(command, cfg, augmented);
}
