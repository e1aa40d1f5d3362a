#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "odma_ura/fec/crc.hpp"
#include "odma_ura/fec/reliability_5g.hpp"
#include "odma_ura/types.hpp"

namespace odma_ura::fec {

struct PolarCodeSpec {
    int nc = 0;                          // code length, power of two
    int k_info = 0;                      // information + CRC bits
    int crc_bits = 16;                   // trailing CRC bits inside k_info (0 = none)
    std::vector<std::uint8_t> frozen;    // per u-index flag, 1 = frozen
    std::vector<int> info_positions;     // ascending u-indices carrying information

    int log2_length() const {
        int m = 0;
        while ((1 << m) < nc) ++m;
        return m;
    }
    int frozen_count() const { return nc - k_info; }
};

// Frozen set from the NR reliability order: the k_info most reliable indices
// below nc carry information.
inline PolarCodeSpec make_polar_spec(int nc, int k_info, int crc_bits = Crc16::kLength) {
    require(nc >= 1 && nc <= 1024 && (nc & (nc - 1)) == 0, "polar length must be a power of two up to 1024");
    require(k_info >= 0 && k_info <= nc, "information length out of range");
    require(crc_bits == 0 || crc_bits == Crc16::kLength, "unsupported CRC length");
    require(crc_bits <= k_info, "CRC longer than information block");
    PolarCodeSpec spec;
    spec.nc = nc;
    spec.k_info = k_info;
    spec.crc_bits = crc_bits;
    spec.frozen.assign(static_cast<std::size_t>(nc), 1);
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(nc));
    for (const auto q : kReliability5g) {
        if (q < nc) order.push_back(q);
    }
    for (int i = nc - k_info; i < nc; ++i) spec.frozen[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 0;
    for (int i = 0; i < nc; ++i) {
        if (!spec.frozen[static_cast<std::size_t>(i)]) spec.info_positions.push_back(i);
    }
    return spec;
}

// Explicit frozen set; used for small hand-built codes.
inline PolarCodeSpec make_polar_spec_from_frozen(int nc, std::vector<std::uint8_t> frozen, int crc_bits = 0) {
    require(nc >= 1 && (nc & (nc - 1)) == 0, "polar length must be a power of two");
    require(frozen.size() == static_cast<std::size_t>(nc), "frozen mask length mismatch");
    PolarCodeSpec spec;
    spec.nc = nc;
    spec.crc_bits = crc_bits;
    spec.frozen = std::move(frozen);
    for (int i = 0; i < nc; ++i) {
        if (!spec.frozen[static_cast<std::size_t>(i)]) spec.info_positions.push_back(i);
    }
    spec.k_info = static_cast<int>(spec.info_positions.size());
    require(crc_bits <= spec.k_info, "CRC longer than information block");
    return spec;
}

// x = u * F^{(x)m} over GF(2), F = [1 0; 1 1], natural (non bit-reversed) order.
inline void polar_transform_inplace(std::span<std::uint8_t> x) {
    const std::size_t n = x.size();
    for (std::size_t half = 1; half < n; half <<= 1) {
        for (std::size_t start = 0; start < n; start += 2 * half) {
            for (std::size_t j = start; j < start + half; ++j) x[j] ^= x[j + half];
        }
    }
}

inline Bits polar_encode(const PolarCodeSpec& spec, std::span<const std::uint8_t> info_bits) {
    require(info_bits.size() == static_cast<std::size_t>(spec.k_info), "polar information length mismatch");
    Bits u(static_cast<std::size_t>(spec.nc), 0);
    for (std::size_t i = 0; i < info_bits.size(); ++i) {
        u[static_cast<std::size_t>(spec.info_positions[i])] = info_bits[i] & 1U;
    }
    polar_transform_inplace(u);
    return u;
}

}  // namespace odma_ura::fec
