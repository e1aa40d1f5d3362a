#pragma once

#include <cstdio>
#include <string>

#include "odma_ura/harness.hpp"

namespace acceptance {

// n = 800, B = 64, Bp = 12, nc = 256, np = 128, np' = 256.
inline odma_ura::SystemConfig scaled_config() {
    odma_ura::SystemConfig c;
    c.n = 800;
    c.B = 64;
    c.Bp = 12;
    c.np = 128;
    c.np_prime = 256;
    c.nc = 256;
    c.nd = 128;
    c.N0 = 1.0;
    c.n_list = 32;
    c.epsilon = 0.1;
    c.seed = 20240601;
    return c;
}

class Report {
public:
    void line(int id, const std::string& name, bool pass, const std::string& detail) {
        std::printf("criterion %2d %s: %s (%s)\n", id, pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
        std::fflush(stdout);
        failures_ += pass ? 0 : 1;
    }
    void info(const std::string& text) {
        std::printf("  info: %s\n", text.c_str());
        std::fflush(stdout);
    }
    int exit_code() const { return failures_ == 0 ? 0 : 1; }

private:
    int failures_ = 0;
};

inline std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

}  // namespace acceptance
