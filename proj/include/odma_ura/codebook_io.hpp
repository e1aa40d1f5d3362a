#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "odma_ura/codebooks.hpp"

namespace odma_ura {

// Binary codebook dump:
//   "ODMACB01" | u32 header length | JSON header |
//   A (np x N complex128, row-major) | DFT rows (u32 x np) |
//   pilot supports (u32, N x np) | data supports (u32, N x nd)
// All integers and doubles little-endian. The extended codebook is rebuilt
// on load.
inline constexpr char kCodebookMagic[8] = {'O', 'D', 'M', 'A', 'C', 'B', '0', '1'};

namespace detail {

template <typename T>
void write_le(std::ostream& os, T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    auto bits = std::bit_cast<U>(value);
    char buf[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        buf[i] = static_cast<char>(bits & 0xFFU);
        bits >>= 8;
    }
    os.write(buf, sizeof buf);
}

template <typename T>
T read_le(std::istream& is) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    unsigned char buf[sizeof(U)];
    if (!is.read(reinterpret_cast<char*>(buf), sizeof buf)) throw std::runtime_error("truncated codebook file");
    U bits = 0;
    for (std::size_t i = sizeof(U); i-- > 0;) bits = (bits << 8) | buf[i];
    return std::bit_cast<T>(bits);
}

}  // namespace detail

inline void save_codebooks(const std::string& path, const CodebookSet& books, std::uint64_t seed) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write codebook file '" + path + "'");
    const nlohmann::json header{{"np", books.pilot.length()},
                                {"N", books.pilot.size()},
                                {"np_prime", books.pilot_pattern.rows()},
                                {"data_rows", books.data_pattern.rows()},
                                {"nd", books.data_pattern.weight()},
                                {"seed", seed},
                                {"dtype", "complex128"},
                                {"order", "row-major"},
                                {"endian", "little"}};
    const std::string text = header.dump();
    os.write(kCodebookMagic, sizeof kCodebookMagic);
    detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(text.size()));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (Eigen::Index r = 0; r < books.pilot.A.rows(); ++r) {
        for (Eigen::Index c = 0; c < books.pilot.A.cols(); ++c) {
            detail::write_le<double>(os, books.pilot.A(r, c).real());
            detail::write_le<double>(os, books.pilot.A(r, c).imag());
        }
    }
    for (const auto v : books.pilot.dft_rows) detail::write_le<std::uint32_t>(os, v);
    for (const auto v : books.pilot_pattern.raw_supports()) detail::write_le<std::uint32_t>(os, v);
    for (const auto v : books.data_pattern.raw_supports()) detail::write_le<std::uint32_t>(os, v);
    if (!os) throw std::runtime_error("failed writing codebook file '" + path + "'");
}

struct LoadedCodebooks {
    CodebookSet books;
    std::uint64_t seed = 0;
};

inline LoadedCodebooks load_codebooks(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open codebook file '" + path + "'");
    char magic[sizeof kCodebookMagic];
    if (!is.read(magic, sizeof magic) || std::memcmp(magic, kCodebookMagic, sizeof magic) != 0) {
        throw std::runtime_error("not a codebook file: '" + path + "'");
    }
    const auto len = detail::read_le<std::uint32_t>(is);
    std::string text(len, '\0');
    if (!is.read(text.data(), static_cast<std::streamsize>(len))) throw std::runtime_error("truncated codebook header");
    const auto header = nlohmann::json::parse(text);
    require(header.at("dtype") == "complex128", "unsupported codebook dtype");

    const auto np = header.at("np").get<Eigen::Index>();
    const auto N = header.at("N").get<Eigen::Index>();
    const auto np_prime = header.at("np_prime").get<std::uint32_t>();
    const auto data_rows = header.at("data_rows").get<std::uint32_t>();
    const auto nd = header.at("nd").get<std::uint32_t>();

    LoadedCodebooks out;
    out.seed = header.at("seed").get<std::uint64_t>();
    auto& b = out.books;
    b.pilot.A.resize(np, N);
    for (Eigen::Index r = 0; r < np; ++r) {
        for (Eigen::Index c = 0; c < N; ++c) {
            const double re = detail::read_le<double>(is);
            const double im = detail::read_le<double>(is);
            b.pilot.A(r, c) = {re, im};
        }
    }
    b.pilot.dft_rows.resize(static_cast<std::size_t>(np));
    for (auto& v : b.pilot.dft_rows) v = detail::read_le<std::uint32_t>(is);
    auto read_supports = [&](std::size_t count) {
        std::vector<std::uint32_t> s(count);
        for (auto& v : s) v = detail::read_le<std::uint32_t>(is);
        return s;
    };
    const auto cols = static_cast<std::size_t>(N);
    b.pilot_pattern = PatternMatrix(PatternKind::Pilot, np_prime, static_cast<std::uint32_t>(np),
                                    read_supports(cols * static_cast<std::size_t>(np)));
    b.data_pattern = PatternMatrix(PatternKind::Data, data_rows, nd, read_supports(cols * nd));
    b.extended = extend_pilot_codebook(b.pilot, b.pilot_pattern);
    return out;
}

}  // namespace odma_ura
