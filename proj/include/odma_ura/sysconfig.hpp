#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "odma_ura/types.hpp"

namespace odma_ura {

enum class SicMode {
    InitialEstimates,        // subtract with the pilot-based LMMSE channel rows
    DataAidedReestimation,   // re-estimate channels from re-encoded frames first
};

inline const char* to_string(SicMode mode) {
    return mode == SicMode::InitialEstimates ? "initial" : "reest";
}

inline SicMode sic_mode_from_string(const std::string& s) {
    if (s == "initial" || s == "initial-estimates") return SicMode::InitialEstimates;
    if (s == "reest" || s == "data-aided" || s == "data-aided-reestimation")
        return SicMode::DataAidedReestimation;
    throw InvalidArgument("unknown sic mode '" + s + "'");
}

// Every scalar parameter of the link. Defaults follow the M = 8 operating
// point (n = 3200, B = 100, Bp = 15, np = 800, n'p = 1200).
struct SystemConfig {
    int n = 3200;            // frame length, channel uses
    int B = 100;             // message bits
    int Bp = 15;             // pilot/pattern index bits; N = 2^Bp
    int np = 800;            // pilot sequence length
    int np_prime = 1200;     // pilot part length
    int nc = 1024;           // polar code length
    int r = 16;              // CRC bits
    int nd = 512;            // data symbols per user (nc / 2)
    int M = 8;               // receive antennas
    int Ka = 100;            // active users
    long long Kt = 0;        // total users; reporting only
    double N0 = 1.0;         // noise variance per complex entry
    double Pp = 1.0;         // average pilot symbol power
    double Pd = 1.0;         // average data symbol power
    int delta = 10;          // gOMP over-selection margin
    int n_omp = 4;           // gOMP iterations
    int n_max = 16;          // decoder iterations
    int n_list = 128;        // SCL list size
    double epsilon = 0.1;    // target PUPE
    SicMode sic_mode = SicMode::DataAidedReestimation;
    std::uint64_t seed = 1;
    bool scl_exact_metric = false;  // exact LLR update instead of min-sum

    std::uint64_t codebook_size() const { return std::uint64_t{1} << Bp; }
    int payload_bits() const { return B - Bp; }
    int info_bits() const { return B - Bp + r; }
    int data_part_length() const { return n - np_prime; }
};

struct ValidationReport {
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
    explicit operator bool() const { return ok(); }
};

inline ValidationReport validate(const SystemConfig& c) {
    ValidationReport rep;
    auto check = [&](bool cond, const char* what) {
        if (!cond) rep.violations.emplace_back(what);
    };
    check(c.n > 0, "frame length must be positive");
    check(c.B > 0, "message length must be positive");
    check(c.Bp > 0, "pilot index bits must be positive");
    check(c.Bp <= 32, "pilot index bits exceed 32");
    check(c.Bp < c.B, "pilot index bits must leave a data payload");
    check(c.np > 0, "pilot sequence length must be positive");
    check(c.np_prime > 0, "pilot part length must be positive");
    check(c.nc > 0, "code length must be positive");
    check(c.r >= 0, "CRC length must be non-negative");
    check(c.r == 0 || c.r == 16, "only CRC-16 is supported");
    check(c.nd > 0, "data symbol count must be positive");
    check(c.M > 0, "antenna count must be positive");
    check(c.Ka > 0, "active user count must be positive");
    check(c.N0 > 0.0, "noise variance must be positive");
    check(c.Pp > 0.0, "pilot power must be positive");
    check(c.Pd > 0.0, "data power must be positive");
    check(c.delta > 0, "gOMP margin must be positive");
    check(c.n_omp > 0, "gOMP iteration count must be positive");
    check(c.n_max > 0, "decoder iteration count must be positive");
    check(c.n_list > 0, "list size must be positive");
    check(c.epsilon > 0.0, "target PUPE must be positive");
    check(c.np <= c.np_prime, "pilot part shorter than pilot sequence");
    check(c.np_prime < c.n, "pilot part must be shorter than the frame");
    check(c.nd * 2 == c.nc, "QPSK symbol count mismatch");
    check(c.nd <= c.n - c.np_prime, "data part shorter than data symbol count");
    check(c.nc > 0 && (c.nc & (c.nc - 1)) == 0, "code length must be a power of two");
    check(c.nc <= 1024, "code length exceeds the reliability sequence");
    check(c.info_bits() <= c.nc, "information bits exceed code length");
    return rep;
}

struct EnergyPerBit {
    double linear;
    double db;
};

// (np*Pp + nd*Pd) / (B*N0)
inline EnergyPerBit energy_per_bit(const SystemConfig& c) {
    const double lin = (c.np * c.Pp + c.nd * c.Pd) / (c.B * c.N0);
    return {lin, 10.0 * std::log10(lin)};
}

inline void to_json(nlohmann::json& j, const SystemConfig& c) {
    j = nlohmann::json{{"n", c.n},         {"B", c.B},
                       {"Bp", c.Bp},       {"np", c.np},
                       {"np_prime", c.np_prime},
                       {"nc", c.nc},       {"r", c.r},
                       {"nd", c.nd},       {"M", c.M},
                       {"Ka", c.Ka},       {"Kt", c.Kt},
                       {"N0", c.N0},       {"Pp", c.Pp},
                       {"Pd", c.Pd},       {"delta", c.delta},
                       {"n_omp", c.n_omp}, {"n_max", c.n_max},
                       {"n_list", c.n_list},
                       {"epsilon", c.epsilon},
                       {"sic_mode", to_string(c.sic_mode)},
                       {"seed", c.seed},
                       {"scl_exact_metric", c.scl_exact_metric}};
}

// Missing keys keep their current value, so a partial file overrides defaults.
inline void from_json(const nlohmann::json& j, SystemConfig& c) {
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    get("n", c.n);
    get("B", c.B);
    get("Bp", c.Bp);
    get("np", c.np);
    get("np_prime", c.np_prime);
    get("nc", c.nc);
    get("r", c.r);
    get("nd", c.nd);
    get("M", c.M);
    get("Ka", c.Ka);
    get("Kt", c.Kt);
    get("N0", c.N0);
    get("Pp", c.Pp);
    get("Pd", c.Pd);
    get("delta", c.delta);
    get("n_omp", c.n_omp);
    get("n_max", c.n_max);
    get("n_list", c.n_list);
    get("epsilon", c.epsilon);
    get("seed", c.seed);
    get("scl_exact_metric", c.scl_exact_metric);
    if (j.contains("sic_mode")) c.sic_mode = sic_mode_from_string(j.at("sic_mode").get<std::string>());
}

inline SystemConfig load_config(const std::string& path, SystemConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path + "'");
    nlohmann::json j = nlohmann::json::parse(in);
    from_json(j, base);
    return base;
}

}  // namespace odma_ura
