#include <iostream>

#include "CLI11.hpp"
#include "nids/synthetic.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generate an NSL-KDD-shaped sample file (42/43-field CSV)"};

    nids::synth::SynthOptions opt;
    std::string out_path = "sample.csv";
    app.add_option("--rows", opt.rows, "number of records")->check(CLI::PositiveNumber);
    app.add_option("--seed", opt.seed, "generator seed");
    app.add_option("--out", out_path, "output path");
    app.add_option("--missing-rate", opt.missing_rate, "fraction of rows with one empty cell");
    app.add_option("--sentinel-rate", opt.sentinel_rate, "fraction of rows with a '*' or '99999' cell");
    app.add_flag("--difficulty", opt.difficulty_field, "emit the trailing difficulty field (43-field lines)");

    CLI11_PARSE(app, argc, argv);

    try {
        nids::synth::write_sample_file(out_path, opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
