#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "odma_ura/codebooks.hpp"
#include "odma_ura/fec/crc.hpp"
#include "odma_ura/fec/polar.hpp"
#include "odma_ura/fec/qpsk.hpp"
#include "odma_ura/sysconfig.hpp"
#include "odma_ura/types.hpp"

namespace odma_ura {

struct UserMessage {
    Bits bits;            // B bits
    Bits mp;              // first Bp bits
    Bits md;              // remaining B - Bp bits
    std::uint64_t ind = 0;  // dec(mp) + 1, in [1, N]

    std::size_t column() const { return static_cast<std::size_t>(ind - 1); }
};

// Big-endian: the first bit is the most significant.
inline std::uint64_t bits_to_index(std::span<const std::uint8_t> bits) {
    require(bits.size() <= 64, "index wider than 64 bits");
    std::uint64_t v = 0;
    for (const auto b : bits) v = (v << 1) | (b & 1U);
    return v;
}

inline Bits index_to_bits(std::uint64_t value, int width) {
    Bits out(static_cast<std::size_t>(width));
    for (int i = width - 1; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(value & 1U);
        value >>= 1;
    }
    return out;
}

inline UserMessage split_message(std::span<const std::uint8_t> bits, int B, int Bp) {
    require(bits.size() == static_cast<std::size_t>(B), "message length mismatch");
    require(Bp > 0 && Bp < B && Bp <= 32, "pilot index bits out of range");
    UserMessage msg;
    msg.bits.assign(bits.begin(), bits.end());
    msg.mp.assign(bits.begin(), bits.begin() + Bp);
    msg.md.assign(bits.begin() + Bp, bits.end());
    msg.ind = bits_to_index(msg.mp) + 1;
    return msg;
}

inline UserMessage split_message(std::span<const std::uint8_t> bits, const SystemConfig& cfg) {
    return split_message(bits, cfg.B, cfg.Bp);
}

// One user's length-n transmit signal and where it is non-zero.
struct TxFrame {
    CVector signal;                          // length n
    std::vector<std::uint32_t> pilot_rows;   // np rows in [0, np')
    std::vector<std::uint32_t> data_rows;    // nd rows in [np', n)
    std::uint64_t ind = 0;

    double energy() const { return signal.squaredNorm(); }
};

inline fec::PolarCodeSpec make_code(const SystemConfig& cfg) {
    return fec::make_polar_spec(cfg.nc, cfg.info_bits(), cfg.r);
}

// Channel coding chain of the data part: CRC, polar encoding, QPSK.
inline CVector encode_data(std::span<const std::uint8_t> md, const fec::PolarCodeSpec& code, double Pd) {
    const auto payload_len = static_cast<std::size_t>(code.k_info - code.crc_bits);
    const Bits info = code.crc_bits > 0 ? fec::crc_attach(md, payload_len) : Bits(md.begin(), md.end());
    const Bits codeword = fec::polar_encode(code, info);
    return fec::qpsk_map(codeword, Pd).symbols;
}

inline TxFrame encode_user(const UserMessage& msg, const CodebookSet& books, const fec::PolarCodeSpec& code,
                           const SystemConfig& cfg) {
    require(msg.ind >= 1 && msg.ind <= static_cast<std::uint64_t>(books.pilot.size()), "pilot index out of range");
    const std::size_t col = msg.column();
    TxFrame frame;
    frame.ind = msg.ind;
    frame.signal = CVector::Zero(cfg.n);

    const auto ps = books.pilot_pattern.support(col);
    frame.pilot_rows.assign(ps.begin(), ps.end());
    for (std::size_t k = 0; k < ps.size(); ++k) {
        frame.signal(ps[k]) = books.pilot.A(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(col));
    }

    const CVector symbols = encode_data(msg.md, code, cfg.Pd);
    const auto ds = books.data_pattern.support(col);
    require(static_cast<Eigen::Index>(ds.size()) == symbols.size(), "data pattern weight differs from symbol count");
    frame.data_rows.reserve(ds.size());
    for (std::size_t k = 0; k < ds.size(); ++k) {
        const auto row = static_cast<std::uint32_t>(cfg.np_prime) + ds[k];
        frame.data_rows.push_back(row);
        frame.signal(row) = symbols(static_cast<Eigen::Index>(k));
    }
    return frame;
}

// Sum over users of x_i h_i; `H` holds one channel row per frame.
inline CMatrix superimpose(std::span<const TxFrame> frames, const CMatrix& H) {
    require(H.rows() == static_cast<Eigen::Index>(frames.size()), "channel rows differ from user count");
    require(!frames.empty(), "no frames to superimpose");
    const Eigen::Index n = frames.front().signal.size();
    CMatrix Y = CMatrix::Zero(n, H.cols());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto& f = frames[i];
        require(f.signal.size() == n, "frame length mismatch");
        Y.noalias() += f.signal * H.row(static_cast<Eigen::Index>(i));
    }
    return Y;
}

}  // namespace odma_ura
