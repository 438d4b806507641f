#include "nids/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>
#include <vector>

#include "nids/common.hpp"

namespace nids::synth {

namespace {

// feature positions in the 41-column layout
enum Feat : int {
    F_DURATION = 0,
    F_SRC_BYTES = 4,
    F_DST_BYTES = 5,
    F_WRONG_FRAGMENT = 7,
    F_HOT = 9,
    F_LOGGED_IN = 11,
    F_NUM_COMPROMISED = 12,
    F_ROOT_SHELL = 13,
    F_COUNT = 22,
    F_SRV_COUNT = 23,
    F_SERROR = 24,
    F_SRV_SERROR = 25,
    F_RERROR = 26,
    F_SRV_RERROR = 27,
    F_SAME_SRV = 28,
    F_DIFF_SRV = 29,
    F_SRV_DIFF_HOST = 30,
    F_DH_COUNT = 31,
    F_DH_SRV_COUNT = 32,
    F_DH_SAME_SRV = 33,
    F_DH_DIFF_SRV = 34,
    F_DH_SAME_SRC_PORT = 35,
    F_DH_SRV_DIFF_HOST = 36,
    F_DH_SERROR = 37,
    F_DH_SRV_SERROR = 38,
    F_DH_RERROR = 39,
    F_DH_SRV_RERROR = 40,
};

struct Gauss {
    int feature;
    double mean, sd;
    bool is_rate; // rates clip to [0,1] and print with 2 decimals; others are nonneg ints
};

struct Choice {
    const char* token;
    double weight;
};

struct Profile {
    const char* label;
    double weight;
    const char* protocol;
    std::vector<Choice> services;
    std::vector<Choice> flags;
    std::vector<Gauss> features;
};

const std::vector<Profile>& profiles() {
    static const std::vector<Profile> p = {
        {"normal",
         0.300,
         "tcp",
         {{"http", 0.5}, {"smtp", 0.2}, {"ftp_data", 0.15}, {"domain_u", 0.15}},
         {{"SF", 0.95}, {"REJ", 0.05}},
         {{F_DURATION, 30, 20, false},
          {F_SRC_BYTES, 250, 90, false},
          {F_DST_BYTES, 2200, 900, false},
          {F_LOGGED_IN, 1, 0, false},
          {F_COUNT, 6, 3, false},
          {F_SRV_COUNT, 6, 3, false},
          {F_SAME_SRV, 0.99, 0.03, true},
          {F_DH_COUNT, 100, 50, false},
          {F_DH_SRV_COUNT, 150, 60, false},
          {F_DH_SAME_SRV, 0.9, 0.1, true}}},
        {"neptune",
         0.160,
         "tcp",
         {{"private", 0.7}, {"telnet", 0.3}},
         {{"S0", 0.97}, {"REJ", 0.03}},
         {{F_COUNT, 190, 40, false},
          {F_SRV_COUNT, 12, 6, false},
          {F_SERROR, 0.98, 0.03, true},
          {F_SRV_SERROR, 0.97, 0.04, true},
          {F_SAME_SRV, 0.05, 0.04, true},
          {F_DIFF_SRV, 0.07, 0.04, true},
          {F_DH_COUNT, 255, 8, false},
          {F_DH_SRV_COUNT, 20, 10, false},
          {F_DH_SERROR, 0.98, 0.03, true},
          {F_DH_SRV_SERROR, 0.97, 0.04, true}}},
        {"satan",
         0.100,
         "tcp",
         {{"private", 0.5}, {"finger", 0.3}, {"telnet", 0.2}},
         {{"REJ", 0.5}, {"RSTR", 0.5}},
         {{F_SRC_BYTES, 1, 1, false},
          {F_COUNT, 120, 40, false},
          {F_SRV_COUNT, 6, 4, false},
          {F_RERROR, 0.85, 0.1, true},
          {F_SRV_RERROR, 0.85, 0.1, true},
          {F_DIFF_SRV, 0.75, 0.15, true},
          {F_DH_COUNT, 255, 8, false},
          {F_DH_DIFF_SRV, 0.7, 0.15, true},
          {F_DH_RERROR, 0.8, 0.12, true},
          {F_DH_SRV_RERROR, 0.8, 0.12, true}}},
        {"ipsweep",
         0.083,
         "icmp",
         {{"eco_i", 1.0}},
         {{"SF", 1.0}},
         {{F_SRC_BYTES, 18, 4, false},
          {F_COUNT, 3, 2, false},
          {F_SRV_COUNT, 3, 2, false},
          {F_SAME_SRV, 1.0, 0.02, true},
          {F_DH_COUNT, 60, 30, false},
          {F_DH_SRV_COUNT, 90, 40, false},
          {F_DH_SAME_SRC_PORT, 0.55, 0.18, true},
          {F_DH_SRV_DIFF_HOST, 0.5, 0.2, true}}},
        {"nmap",
         0.022,
         "icmp",
         {{"eco_i", 1.0}},
         {{"SF", 1.0}},
         {{F_SRC_BYTES, 24, 5, false},
          {F_COUNT, 2, 2, false},
          {F_SRV_COUNT, 2, 2, false},
          {F_SAME_SRV, 1.0, 0.02, true},
          {F_DH_COUNT, 95, 33, false},
          {F_DH_SRV_COUNT, 90, 40, false},
          {F_DH_SAME_SRC_PORT, 0.75, 0.16, true},
          {F_DH_SRV_DIFF_HOST, 0.5, 0.2, true}}},
        {"smurf",
         0.060,
         "icmp",
         {{"ecr_i", 1.0}},
         {{"SF", 1.0}},
         {{F_SRC_BYTES, 1032, 30, false},
          {F_COUNT, 280, 60, false},
          {F_SRV_COUNT, 280, 60, false},
          {F_SAME_SRV, 1.0, 0.01, true},
          {F_DH_COUNT, 255, 5, false},
          {F_DH_SRV_COUNT, 255, 5, false},
          {F_DH_SAME_SRC_PORT, 1.0, 0.02, true}}},
        {"portsweep",
         0.050,
         "tcp",
         {{"private", 0.8}, {"http", 0.2}},
         {{"RSTR", 0.6}, {"REJ", 0.4}},
         {{F_DURATION, 2, 2, false},
          {F_SRC_BYTES, 2, 2, false},
          {F_DST_BYTES, 6, 6, false},
          {F_COUNT, 4, 3, false},
          {F_SRV_COUNT, 4, 3, false},
          {F_DIFF_SRV, 0.85, 0.1, true},
          {F_RERROR, 0.3, 0.2, true},
          {F_DH_COUNT, 255, 8, false},
          {F_DH_SRV_COUNT, 10, 6, false},
          {F_DH_DIFF_SRV, 0.8, 0.1, true},
          {F_DH_RERROR, 0.4, 0.2, true},
          {F_DH_SAME_SRC_PORT, 0.3, 0.2, true}}},
        {"back",
         0.025,
         "tcp",
         {{"http", 1.0}},
         {{"SF", 1.0}},
         {{F_SRC_BYTES, 54000, 5000, false},
          {F_DST_BYTES, 8000, 2000, false},
          {F_LOGGED_IN, 1, 0, false},
          {F_HOT, 2, 1, false},
          {F_COUNT, 8, 4, false},
          {F_SRV_COUNT, 8, 4, false},
          {F_SAME_SRV, 1.0, 0.02, true},
          {F_DH_SRV_COUNT, 255, 5, false}}},
        {"pod",
         0.008,
         "icmp",
         {{"ecr_i", 1.0}},
         {{"SF", 1.0}},
         {{F_SRC_BYTES, 1480, 60, false}, {F_WRONG_FRAGMENT, 1, 0.4, false}, {F_COUNT, 3, 2, false}}},
        {"teardrop",
         0.010,
         "udp",
         {{"private", 1.0}},
         {{"SF", 1.0}},
         {{F_SRC_BYTES, 28, 3, false}, {F_WRONG_FRAGMENT, 2, 0.5, false}, {F_COUNT, 5, 3, false}}},
        {"buffer_overflow",
         0.004,
         "tcp",
         {{"telnet", 1.0}},
         {{"SF", 1.0}},
         {{F_DURATION, 180, 60, false},
          {F_SRC_BYTES, 1300, 300, false},
          {F_DST_BYTES, 2000, 500, false},
          {F_HOT, 3, 1, false},
          {F_LOGGED_IN, 1, 0, false},
          {F_ROOT_SHELL, 1, 0, false},
          {F_NUM_COMPROMISED, 2, 1, false}}},
    };
    return p;
}

const char* pick(const std::vector<Choice>& choices, std::mt19937_64& eng) {
    double total = 0.0;
    for (const Choice& c : choices) total += c.weight;
    std::uniform_real_distribution<double> u(0.0, total);
    double t = u(eng);
    for (const Choice& c : choices) {
        t -= c.weight;
        if (t <= 0.0) return c.token;
    }
    return choices.back().token;
}

// rate columns in the 41-feature layout (printed with 2 decimals)
bool is_rate_feature(int f) {
    return (f >= F_SERROR && f <= F_SRV_DIFF_HOST) || (f >= F_DH_SAME_SRV && f <= F_DH_SRV_RERROR);
}

} // namespace

void write_sample(std::ostream& out, const SynthOptions& opt) {
    std::mt19937_64 eng(opt.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    const auto& profs = profiles();
    double total_w = 0.0;
    for (const Profile& p : profs) total_w += p.weight;

    std::array<std::string, 41> cells;
    char buf[64];
    for (int row = 0; row < opt.rows; ++row) {
        double t = u01(eng) * total_w;
        const Profile* prof = &profs.back();
        for (const Profile& p : profs) {
            t -= p.weight;
            if (t <= 0.0) {
                prof = &p;
                break;
            }
        }

        for (int f = 0; f < 41; ++f) cells[f] = is_rate_feature(f) ? "0.00" : "0";
        cells[1] = prof->protocol;
        cells[2] = pick(prof->services, eng);
        cells[3] = pick(prof->flags, eng);
        for (const Gauss& g : prof->features) {
            double v = g.mean + g.sd * gauss(eng);
            if (g.is_rate) {
                v = std::clamp(v, 0.0, 1.0);
                std::snprintf(buf, sizeof(buf), "%.2f", v);
                cells[g.feature] = buf;
            } else {
                long iv = std::lround(std::max(0.0, v));
                cells[g.feature] = std::to_string(iv);
            }
        }

        // occasional dirty cells, the kind clean() deals with
        if (u01(eng) < opt.sentinel_rate) cells[F_SRC_BYTES] = u01(eng) < 0.5 ? "*" : "99999";
        if (u01(eng) < opt.missing_rate) cells[F_DST_BYTES] = "";

        std::string line;
        for (int f = 0; f < 41; ++f) {
            line += cells[f];
            line += ',';
        }
        line += prof->label;
        if (opt.difficulty_field) {
            line += ',';
            std::uniform_int_distribution<int> d(0, 21);
            line += std::to_string(d(eng));
        }
        line += '\n';
        out << line;
    }
}

void write_sample_file(const std::string& path, const SynthOptions& opt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write sample file: " + path);
    write_sample(out, opt);
}

} // namespace nids::synth
