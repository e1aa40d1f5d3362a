#pragma once

#include <cstdint>
#include <span>

#include "odma_ura/types.hpp"

namespace odma_ura::fec {

// CRC-16 with generator x^16 + x^12 + x^5 + 1, zero initial register, no
// reflection and no final XOR. Bits are processed MSB-first and the
// remainder is appended MSB-first.
struct Crc16 {
    static constexpr std::uint16_t kPoly = 0x1021;
    static constexpr int kLength = 16;

    static std::uint16_t remainder(std::span<const std::uint8_t> bits) {
        std::uint16_t reg = 0;
        for (const auto b : bits) {
            const bool top = ((reg >> 15) & 1U) != (b & 1U);
            reg = static_cast<std::uint16_t>(reg << 1);
            if (top) reg ^= kPoly;
        }
        return reg;
    }
};

inline Bits crc_attach(std::span<const std::uint8_t> payload, std::size_t expected_length) {
    require(payload.size() == expected_length, "CRC payload length mismatch");
    Bits out(payload.begin(), payload.end());
    const auto crc = Crc16::remainder(payload);
    for (int i = Crc16::kLength - 1; i >= 0; --i) {
        out.push_back(static_cast<std::uint8_t>((crc >> i) & 1U));
    }
    return out;
}

// True when the trailing 16 bits are the CRC of the leading bits.
inline bool crc_check(std::span<const std::uint8_t> word) {
    if (word.size() < static_cast<std::size_t>(Crc16::kLength)) return false;
    // remainder of (payload || crc) is zero exactly when the CRC matches
    return Crc16::remainder(word) == 0;
}

}  // namespace odma_ura::fec
