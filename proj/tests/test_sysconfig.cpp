#include <gtest/gtest.h>

#include <algorithm>

#include "odma_ura/sysconfig.hpp"

using namespace odma_ura;

namespace {

SystemConfig full_scale_m50() {
    SystemConfig c;
    c.n = 3200;
    c.np = 600;
    c.np_prime = 1000;
    c.nc = 1024;
    c.nd = 512;
    return c;
}

bool has(const ValidationReport& r, const std::string& what) {
    return std::find(r.violations.begin(), r.violations.end(), what) != r.violations.end();
}

}  // namespace

TEST(Validate, AcceptsFullScaleOperatingPoint) {
    const auto rep = validate(full_scale_m50());
    EXPECT_TRUE(rep.ok()) << (rep.violations.empty() ? "" : rep.violations.front());
}

TEST(Validate, PilotPartShorterThanSequence) {
    auto c = full_scale_m50();
    c.np_prime = 500;
    const auto rep = validate(c);
    EXPECT_FALSE(rep.ok());
    EXPECT_TRUE(has(rep, "pilot part shorter than pilot sequence"));
}

TEST(Validate, QpskSymbolCountMismatch) {
    auto c = full_scale_m50();
    c.nd = 500;
    EXPECT_TRUE(has(validate(c), "QPSK symbol count mismatch"));
}

TEST(Validate, ReportsEveryViolationSeparately) {
    auto c = full_scale_m50();
    c.np_prime = 500;
    c.nd = 500;
    c.M = 0;
    c.Bp = 40;
    const auto rep = validate(c);
    EXPECT_TRUE(has(rep, "pilot part shorter than pilot sequence"));
    EXPECT_TRUE(has(rep, "QPSK symbol count mismatch"));
    EXPECT_TRUE(has(rep, "antenna count must be positive"));
    EXPECT_TRUE(has(rep, "pilot index bits exceed 32"));
}

TEST(Validate, IsPure) {
    auto c = full_scale_m50();
    c.nd = 7;
    EXPECT_EQ(validate(c).violations, validate(c).violations);
}

TEST(EnergyPerBit, DirectFormula) {
    SystemConfig c;
    c.np = 600;
    c.Pp = 1;
    c.nd = 512;
    c.Pd = 1;
    c.B = 100;
    c.N0 = 1;
    EXPECT_NEAR(energy_per_bit(c).linear, 11.12, 1e-12);
    EXPECT_NEAR(energy_per_bit(c).db, 10 * std::log10(11.12), 1e-12);

    c.np = 800;
    c.Pp = 0.5;
    c.Pd = 2;
    c.N0 = 2;
    EXPECT_NEAR(energy_per_bit(c).linear, 7.12, 1e-12);
}

TEST(EnergyPerBit, ZeroPower) {
    SystemConfig c;
    c.Pp = 0;
    c.Pd = 0;
    EXPECT_EQ(energy_per_bit(c).linear, 0.0);
}

TEST(EnergyPerBit, ScalingProperties) {
    SystemConfig c;
    c.Pp = 0.7;
    c.Pd = 1.3;
    c.N0 = 0.9;
    const double base = energy_per_bit(c).linear;

    SystemConfig pilot_only = c, data_only = c;
    pilot_only.Pd = 0;
    data_only.Pp = 0;
    EXPECT_NEAR(energy_per_bit(pilot_only).linear + energy_per_bit(data_only).linear, base, 1e-12);

    SystemConfig scaled = pilot_only;
    scaled.Pp *= 3;
    EXPECT_NEAR(energy_per_bit(scaled).linear, 3 * energy_per_bit(pilot_only).linear, 1e-12);

    SystemConfig noisy = c;
    noisy.N0 *= 4;
    EXPECT_NEAR(energy_per_bit(noisy).linear, base / 4, 1e-12);
}

TEST(ConfigJson, PartialOverrideKeepsDefaults) {
    SystemConfig c;
    from_json(nlohmann::json{{"Ka", 7}, {"sic_mode", "initial"}}, c);
    EXPECT_EQ(c.Ka, 7);
    EXPECT_EQ(c.sic_mode, SicMode::InitialEstimates);
    EXPECT_EQ(c.n, 3200);

    nlohmann::json j = c;
    SystemConfig back;
    from_json(j, back);
    EXPECT_EQ(nlohmann::json(back), j);
}

TEST(ConfigJson, RejectsUnknownSicMode) {
    SystemConfig c;
    EXPECT_THROW(from_json(nlohmann::json{{"sic_mode", "magic"}}, c), InvalidArgument);
}
