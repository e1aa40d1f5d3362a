#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "odma_ura/rng.hpp"
#include "odma_ura/sysconfig.hpp"
#include "odma_ura/types.hpp"

namespace odma_ura {

// np x N pilot matrix: np seeded rows of the N-point DFT, every column
// scaled to Euclidean norm sqrt(np * Pp).
struct PilotCodebook {
    CMatrix A;
    std::vector<std::uint32_t> dft_rows;  // ascending DFT row of each pilot symbol

    Eigen::Index length() const { return A.rows(); }
    Eigen::Index size() const { return A.cols(); }
};

enum class PatternKind { Pilot, Data };

// Binary rows x N matrix with `weight` ones per column, stored as the sorted
// support of each column.
class PatternMatrix {
public:
    PatternMatrix() = default;
    PatternMatrix(PatternKind kind, std::uint32_t rows, std::uint32_t weight,
                  std::vector<std::uint32_t> supports)
        : kind_(kind), rows_(rows), weight_(weight), supports_(std::move(supports)) {
        require(weight_ > 0 && supports_.size() % weight_ == 0, "pattern support size mismatch");
    }

    PatternKind kind() const { return kind_; }
    std::uint32_t rows() const { return rows_; }
    std::uint32_t weight() const { return weight_; }
    std::size_t columns() const { return weight_ == 0 ? 0 : supports_.size() / weight_; }

    // Active rows of column `col` (0-based), ascending.
    std::span<const std::uint32_t> support(std::size_t col) const {
        return {supports_.data() + col * weight_, weight_};
    }

    bool mask(std::uint32_t row, std::size_t col) const {
        const auto s = support(col);
        return std::binary_search(s.begin(), s.end(), row);
    }

    const std::vector<std::uint32_t>& raw_supports() const { return supports_; }

private:
    PatternKind kind_ = PatternKind::Pilot;
    std::uint32_t rows_ = 0;
    std::uint32_t weight_ = 0;
    std::vector<std::uint32_t> supports_;
};

// np' x N: column i holds A's column i on P_pilot column i's support, in
// ascending row order, and zeros elsewhere.
struct ExtendedPilotCodebook {
    CMatrix A_ext;
};

struct CodebookSet {
    PilotCodebook pilot;
    PatternMatrix pilot_pattern;
    PatternMatrix data_pattern;
    ExtendedPilotCodebook extended;
};

inline PilotCodebook build_pilot_codebook(std::uint64_t N, int np, double Pp, std::uint64_t seed) {
    require(np > 0, "pilot length must be positive");
    require(N >= static_cast<std::uint64_t>(np), "codebook size smaller than pilot length; cannot sub-sample DFT rows");
    require(N <= (std::uint64_t{1} << 31), "codebook size too large");
    CounterRng rng(stream_key(seed, static_cast<std::uint64_t>(StreamDomain::PilotRows), N,
                              static_cast<std::uint64_t>(np)));
    PilotCodebook cb;
    cb.dft_rows = rng.sample_without_replacement(static_cast<std::uint32_t>(N),
                                                 static_cast<std::uint32_t>(np));
    const auto cols = static_cast<Eigen::Index>(N);
    cb.A.resize(np, cols);
    const double amplitude = std::sqrt(Pp);
    for (Eigen::Index i = 0; i < cols; ++i) {
        for (int k = 0; k < np; ++k) {
            // reduce the phase index modulo N before scaling to keep it exact
            const std::uint64_t idx =
                (static_cast<std::uint64_t>(cb.dft_rows[k]) * static_cast<std::uint64_t>(i)) % N;
            const double phase = -2.0 * std::numbers::pi * static_cast<double>(idx) / static_cast<double>(N);
            cb.A(k, i) = amplitude * Complex(std::cos(phase), std::sin(phase));
        }
    }
    return cb;
}

inline PilotCodebook build_pilot_codebook(const SystemConfig& cfg) {
    return build_pilot_codebook(cfg.codebook_size(), cfg.np, cfg.Pp, cfg.seed);
}

inline PatternMatrix build_pattern_matrix(PatternKind kind, std::uint32_t rows, std::uint32_t weight,
                                          std::uint64_t N, std::uint64_t seed) {
    require(weight > 0, "pattern weight must be positive");
    require(weight <= rows, "pattern weight exceeds row count");
    const auto domain = kind == PatternKind::Pilot ? StreamDomain::PilotPattern : StreamDomain::DataPattern;
    std::vector<std::uint32_t> supports;
    supports.reserve(static_cast<std::size_t>(N) * weight);
    // one stream per column so any column can be regenerated on its own
    for (std::uint64_t col = 0; col < N; ++col) {
        CounterRng rng(stream_key(seed, static_cast<std::uint64_t>(domain), rows, col));
        const auto s = rng.sample_without_replacement(rows, weight);
        supports.insert(supports.end(), s.begin(), s.end());
    }
    return PatternMatrix(kind, rows, weight, std::move(supports));
}

inline PatternMatrix build_pattern_matrix(const SystemConfig& cfg, PatternKind kind) {
    if (kind == PatternKind::Pilot) {
        return build_pattern_matrix(kind, static_cast<std::uint32_t>(cfg.np_prime),
                                    static_cast<std::uint32_t>(cfg.np), cfg.codebook_size(), cfg.seed);
    }
    return build_pattern_matrix(kind, static_cast<std::uint32_t>(cfg.data_part_length()),
                                static_cast<std::uint32_t>(cfg.nd), cfg.codebook_size(), cfg.seed);
}

inline ExtendedPilotCodebook extend_pilot_codebook(const PilotCodebook& pilot, const PatternMatrix& pattern) {
    require(pattern.kind() == PatternKind::Pilot, "extension needs a pilot pattern");
    require(static_cast<Eigen::Index>(pattern.columns()) == pilot.size(), "pattern/codebook column mismatch");
    require(static_cast<Eigen::Index>(pattern.weight()) == pilot.length(),
            "pilot pattern support size differs from pilot length");
    ExtendedPilotCodebook ext;
    ext.A_ext = CMatrix::Zero(pattern.rows(), pilot.size());
    for (Eigen::Index i = 0; i < pilot.size(); ++i) {
        const auto s = pattern.support(static_cast<std::size_t>(i));
        for (std::size_t k = 0; k < s.size(); ++k) {
            ext.A_ext(s[k], i) = pilot.A(static_cast<Eigen::Index>(k), i);
        }
    }
    return ext;
}

// Recovers the np pilot symbols of column `col` from the extended codebook.
inline CVector restrict_to_support(const ExtendedPilotCodebook& ext, const PatternMatrix& pattern, std::size_t col) {
    const auto s = pattern.support(col);
    CVector out(static_cast<Eigen::Index>(s.size()));
    for (std::size_t k = 0; k < s.size(); ++k) {
        out(static_cast<Eigen::Index>(k)) = ext.A_ext(s[k], static_cast<Eigen::Index>(col));
    }
    return out;
}

inline CodebookSet build_codebooks(const SystemConfig& cfg) {
    CodebookSet set;
    set.pilot = build_pilot_codebook(cfg);
    set.pilot_pattern = build_pattern_matrix(cfg, PatternKind::Pilot);
    set.data_pattern = build_pattern_matrix(cfg, PatternKind::Data);
    set.extended = extend_pilot_codebook(set.pilot, set.pilot_pattern);
    return set;
}

}  // namespace odma_ura
