#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace nids::synth {

// Deterministic generator of NSL-KDD-shaped sample traffic (42/43 comma-
// separated fields, raw attack labels). Lets the pipeline run end to end when
// no real capture file is at hand; class profiles follow the usual NSL-KDD
// signatures (neptune syn-floods, smurf echo floods, probe sweeps, ...).
struct SynthOptions {
    int rows = 8000;
    std::uint64_t seed = 7;
    double missing_rate = 0.001;  // fraction of rows with one empty cell
    double sentinel_rate = 0.002; // fraction of rows with a "*" or "99999" cell
    bool difficulty_field = false; // emit the optional 43rd field
};

void write_sample(std::ostream& out, const SynthOptions& opt);
void write_sample_file(const std::string& path, const SynthOptions& opt);

} // namespace nids::synth
