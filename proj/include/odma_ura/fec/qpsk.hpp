#pragma once

#include <cmath>
#include <span>
#include <utility>

#include "odma_ura/types.hpp"

namespace odma_ura::fec {

// Gray QPSK: (b0, b1) -> sqrt(Pd/2) * ((1 - 2 b0) + j (1 - 2 b1)).
struct QpskSymbolBlock {
    CVector symbols;
    double power = 0.0;
};

inline QpskSymbolBlock qpsk_map(std::span<const std::uint8_t> bits, double Pd) {
    require(bits.size() % 2 == 0, "QPSK needs an even number of bits");
    const double a = std::sqrt(Pd / 2.0);
    QpskSymbolBlock block;
    block.power = Pd;
    block.symbols.resize(static_cast<Eigen::Index>(bits.size() / 2));
    for (std::size_t k = 0; k < bits.size() / 2; ++k) {
        const double re = bits[2 * k] ? -a : a;
        const double im = bits[2 * k + 1] ? -a : a;
        block.symbols(static_cast<Eigen::Index>(k)) = {re, im};
    }
    return block;
}

inline Bits qpsk_hard_demap(const CVector& symbols) {
    Bits out;
    out.reserve(static_cast<std::size_t>(symbols.size()) * 2);
    for (const auto& s : symbols) {
        out.push_back(s.real() < 0.0 ? 1 : 0);
        out.push_back(s.imag() < 0.0 ? 1 : 0);
    }
    return out;
}

// Bit LLRs for y = gain * x + w, E|w|^2 = noise_var. Positive favours bit 0.
inline std::pair<double, double> qpsk_llr(Complex sym_est, double gain, double noise_var, double Pd) {
    require(gain > 0.0, "QPSK LLR gain must be positive");
    require(noise_var > 0.0, "QPSK LLR noise variance must be positive");
    const double scale = 2.0 * std::sqrt(2.0 * Pd) * gain / noise_var;
    return {scale * sym_est.real(), scale * sym_est.imag()};
}

}  // namespace odma_ura::fec
