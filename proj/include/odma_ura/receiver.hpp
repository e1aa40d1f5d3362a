#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "odma_ura/channel.hpp"
#include "odma_ura/codebooks.hpp"
#include "odma_ura/fec/polar.hpp"
#include "odma_ura/fec/qpsk.hpp"
#include "odma_ura/fec/scl.hpp"
#include "odma_ura/sysconfig.hpp"
#include "odma_ura/transmitter.hpp"
#include "odma_ura/types.hpp"

namespace odma_ura {

constexpr double kConditionWarning = 1e10;

struct RidgeSolution {
    CMatrix X;
    double condition = 1.0;  // reciprocal of the LLT rcond estimate
};

// X = (G + N0 I)^{-1} R with G Hermitian PSD, via Cholesky.
inline RidgeSolution ridge_solve(const CMatrix& gram, const CMatrix& rhs, double N0) {
    require(gram.rows() == gram.cols() && gram.rows() == rhs.rows(), "ridge solve dimension mismatch");
    CMatrix reg = gram;
    reg.diagonal().array() += N0;
    Eigen::LLT<CMatrix> llt(reg);
    const double rcond = reg.rows() == 0 ? 1.0 : llt.rcond();
    if (llt.info() != Eigen::Success || !(rcond > 0.0)) {
        throw SolveError("regularised Gram matrix is not positive definite (rcond " + std::to_string(rcond) + ")",
                         rcond > 0.0 ? 1.0 / rcond : INFINITY);
    }
    return {llt.solve(rhs), 1.0 / rcond};
}

// Columns of `A` picked by 1-based indices.
inline CMatrix select_columns(const CMatrix& A, std::span<const std::uint64_t> indices) {
    CMatrix out(A.rows(), static_cast<Eigen::Index>(indices.size()));
    for (std::size_t k = 0; k < indices.size(); ++k) {
        out.col(static_cast<Eigen::Index>(k)) = A.col(static_cast<Eigen::Index>(indices[k] - 1));
    }
    return out;
}

struct DetectedSet {
    std::vector<std::uint64_t> indices;  // 1-based pilot/pattern indices, selection order
    CMatrix residual;                    // pilot residual after the last update
    std::vector<std::string> diagnostics;

    // First Bp message bits implied by the k-th detected index.
    Bits index_bits(std::size_t k, int Bp) const { return index_to_bits(indices[k] - 1, Bp); }
};

// Generalised OMP over the extended pilot codebook. `active_users` is the
// user count the receiver assumes when sizing each selection step.
inline DetectedSet gomp_detect(const CMatrix& Yp, const CMatrix& A_ext, int active_users, int delta, int n_omp,
                               double N0) {
    require(Yp.rows() == A_ext.rows(), "pilot block and extended codebook disagree on rows");
    require(n_omp >= 1 && active_users >= 0 && delta >= 0, "invalid gOMP parameters");
    const auto N = static_cast<std::size_t>(A_ext.cols());
    const auto budget = std::min<std::size_t>(static_cast<std::size_t>(active_users + delta), N);
    const auto per_iter = static_cast<std::size_t>((active_users + delta + n_omp - 1) / n_omp);

    DetectedSet out;
    std::vector<std::uint8_t> taken(N, 0);
    std::vector<std::uint32_t> candidates;
    candidates.reserve(N);
    out.residual = Yp;

    for (int k = 0; k < n_omp && out.indices.size() < budget; ++k) {
        const CMatrix C = A_ext.adjoint() * out.residual;
        const Eigen::VectorXd score = C.rowwise().norm();
        candidates.clear();
        for (std::uint32_t i = 0; i < N; ++i) {
            if (!taken[i]) candidates.push_back(i);
        }
        const std::size_t pick = std::min({per_iter, budget - out.indices.size(), candidates.size()});
        // highest score first, lowest index on ties
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(pick), candidates.end(),
                          [&](std::uint32_t a, std::uint32_t b) {
                              if (score(a) != score(b)) return score(a) > score(b);
                              return a < b;
                          });
        const std::size_t before = out.indices.size();
        for (std::size_t j = 0; j < pick; ++j) {
            taken[candidates[j]] = 1;
            out.indices.push_back(candidates[j] + 1);
        }

        // residual relative to the original block over every index so far
        while (out.indices.size() > 0) {
            const CMatrix As = select_columns(A_ext, out.indices);
            try {
                const RidgeSolution sol = ridge_solve(As.adjoint() * As, As.adjoint() * Yp, N0);
                if (sol.condition > kConditionWarning) {
                    out.diagnostics.push_back("gomp iteration " + std::to_string(k) + ": condition estimate " +
                                              std::to_string(sol.condition));
                }
                out.residual = Yp - As * sol.X;
                break;
            } catch (const SolveError& e) {
                if (out.indices.size() == before) throw;
                out.diagnostics.push_back("gomp iteration " + std::to_string(k) + ": dropped index " +
                                          std::to_string(out.indices.back()) + " (" + e.what() + ")");
                out.indices.pop_back();
            }
        }
    }
    return out;
}

// (A'^H A' + N0 I)^{-1} A'^H Yp over the selected columns; |I| x M.
template <typename PilotBlock>
CMatrix lmmse_channel_estimate(const PilotBlock& Yp_res, const CMatrix& A_sel, double N0) {
    require(A_sel.cols() >= 1, "channel estimation needs at least one pilot");
    return ridge_solve(A_sel.adjoint() * A_sel, A_sel.adjoint() * Yp_res, N0).X;
}

struct MrcOutput {
    CVector symbols;             // length nd
    double mean_row_energy = 0;  // average ||y_row||^2 over the combined rows
};

// Rows of the data block picked by the user's data pattern (ascending),
// combined with h^H.
template <typename DataBlock>
MrcOutput mrc_combine(const DataBlock& Yd_res, std::span<const std::uint32_t> data_support, const CRowVector& h) {
    require(h.size() == Yd_res.cols(), "channel row length differs from antenna count");
    MrcOutput out;
    out.symbols.resize(static_cast<Eigen::Index>(data_support.size()));
    double energy = 0.0;
    for (std::size_t k = 0; k < data_support.size(); ++k) {
        const auto row = Yd_res.row(static_cast<Eigen::Index>(data_support[k]));
        out.symbols(static_cast<Eigen::Index>(k)) = h.dot(row);  // sum_m conj(h_m) y_m
        energy += row.squaredNorm();
    }
    out.mean_row_energy = data_support.empty() ? 0.0 : energy / static_cast<double>(data_support.size());
    return out;
}

template <typename DataBlock>
CVector mrc_estimate(const DataBlock& Yd_res, std::span<const std::uint32_t> data_support, const CRowVector& h) {
    return mrc_combine(Yd_res, data_support, h).symbols;
}

// Per-antenna interference-plus-noise variance seen by one user after
// removing its own expected contribution, floored at N0.
inline double effective_noise_variance(double mean_row_energy, double channel_gain, double Pd, int M, double N0) {
    const double residual = (mean_row_energy - Pd * channel_gain) / static_cast<double>(M);
    return std::max(N0, residual);
}

struct UserDecode {
    Bits md;
    bool pass = false;
};

// QPSK LLRs of the MRC output treated as y = g x + w with g = ||h||^2 and
// E|w|^2 = g * noise_var_per_antenna, then CRC-aided SCL decoding.
inline UserDecode decode_user(const CVector& s_hat, const CRowVector& h, double noise_var_per_antenna,
                              const SystemConfig& cfg, fec::SclDecoder& decoder, const fec::PolarCodeSpec& code) {
    require(s_hat.size() * 2 == code.nc, "symbol count differs from code length / 2");
    UserDecode out;
    const double gain = h.squaredNorm();
    if (!(gain > 0.0) || !(noise_var_per_antenna > 0.0)) return out;
    std::vector<double> llr(static_cast<std::size_t>(code.nc));
    for (Eigen::Index k = 0; k < s_hat.size(); ++k) {
        const auto [l0, l1] = fec::qpsk_llr(s_hat(k), gain, gain * noise_var_per_antenna, cfg.Pd);
        llr[static_cast<std::size_t>(2 * k)] = l0;
        llr[static_cast<std::size_t>(2 * k + 1)] = l1;
    }
    const auto res = decoder.decode(llr);
    out.pass = res.pass;
    const auto payload = static_cast<std::size_t>(code.k_info - code.crc_bits);
    out.md.assign(res.info_bits.begin(), res.info_bits.begin() + static_cast<std::ptrdiff_t>(payload));
    return out;
}

inline UserDecode decode_user(const CVector& s_hat, const CRowVector& h, double noise_var_per_antenna,
                              const SystemConfig& cfg, const fec::PolarCodeSpec& code) {
    fec::SclDecoder decoder(code, cfg.n_list, cfg.scl_exact_metric);
    return decode_user(s_hat, h, noise_var_per_antenna, cfg, decoder, code);
}

// Y - sum_i x_i h_i over the decoded users.
inline CMatrix sic_initial(const CMatrix& Y_res, std::span<const TxFrame> frames, const CMatrix& H_decoded) {
    require(H_decoded.rows() == static_cast<Eigen::Index>(frames.size()), "one channel row per decoded frame");
    CMatrix out = Y_res;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        out.noalias() -= frames[i].signal * H_decoded.row(static_cast<Eigen::Index>(i));
    }
    return out;
}

inline CMatrix stack_frames(std::span<const TxFrame> frames, Eigen::Index n) {
    CMatrix X(n, static_cast<Eigen::Index>(frames.size()));
    for (std::size_t i = 0; i < frames.size(); ++i) {
        require(frames[i].signal.size() == n, "frame length mismatch");
        X.col(static_cast<Eigen::Index>(i)) = frames[i].signal;
    }
    return X;
}

struct Reestimation {
    CMatrix H_re;   // |D| x M
    CMatrix Y_res;  // n x M
};

// Channel re-estimate from the re-encoded frames, then cancellation.
inline Reestimation sic_reestimated(const CMatrix& Y_res, const CMatrix& X_hat, double N0) {
    require(X_hat.cols() >= 1, "re-estimation needs at least one decoded frame");
    require(X_hat.rows() == Y_res.rows(), "reconstructed frames and residual differ in length");
    Reestimation out;
    out.H_re = ridge_solve(X_hat.adjoint() * X_hat, X_hat.adjoint() * Y_res, N0).X;
    out.Y_res = Y_res - X_hat * out.H_re;
    return out;
}

// Transmitted messages and channels, used only for diagnostics.
struct GroundTruth {
    std::vector<Bits> messages;
    CMatrix H;  // one row per message
};

struct IterationDiagnostics {
    int iteration = 0;
    std::size_t detected = 0;        // |I| entering the iteration
    std::size_t decoded = 0;         // |D|
    double residual_energy = 0.0;    // ||Y_res||_F^2 entering the iteration
    std::optional<double> channel_mse;            // LMMSE rows matched to true users
    std::optional<double> decoded_mse_initial;    // decoded users, pilot-based estimate
    std::optional<double> decoded_mse_reestimated;  // decoded users, data-aided estimate
};

struct DecodeOutput {
    std::vector<Bits> messages;  // unique
    std::vector<IterationDiagnostics> iterations;
    DetectedSet detection;
};

struct DecodeOptions {
    int assumed_active_users = -1;  // < 0: use cfg.Ka
    const GroundTruth* truth = nullptr;
    bool compare_sic_estimates = false;  // fill decoded_mse_* in every iteration
};

namespace detail {

// 1-based index -> true channel row, for indices used by exactly one user.
inline std::map<std::uint64_t, Eigen::Index> unique_index_rows(const GroundTruth& truth, int Bp) {
    std::map<std::uint64_t, int> counts;
    std::map<std::uint64_t, Eigen::Index> rows;
    for (std::size_t i = 0; i < truth.messages.size(); ++i) {
        const auto ind = bits_to_index(std::span(truth.messages[i]).first(static_cast<std::size_t>(Bp))) + 1;
        ++counts[ind];
        rows[ind] = static_cast<Eigen::Index>(i);
    }
    for (auto it = rows.begin(); it != rows.end();) {
        it = counts[it->first] > 1 ? rows.erase(it) : std::next(it);
    }
    return rows;
}

inline double mean_row_error(const CMatrix& est, const std::vector<Eigen::Index>& est_rows, const CMatrix& truth,
                             const std::vector<Eigen::Index>& truth_rows) {
    double acc = 0.0;
    for (std::size_t k = 0; k < est_rows.size(); ++k) {
        acc += (est.row(est_rows[k]) - truth.row(truth_rows[k])).squaredNorm() / static_cast<double>(truth.cols());
    }
    return acc / static_cast<double>(est_rows.size());
}

}  // namespace detail

// Activity detection once, then up to n_max rounds of channel estimation,
// per-user MRC and decoding, and interference cancellation.
inline DecodeOutput iterative_decode(const ReceivedFrame& rx, const CodebookSet& books, const fec::PolarCodeSpec& code,
                                     const SystemConfig& cfg, const DecodeOptions& opts = {}) {
    const CMatrix& A_ext = books.extended.A_ext;
    require(rx.np_prime == A_ext.rows(), "received pilot part differs from codebook");
    const int assumed = opts.assumed_active_users >= 0 ? opts.assumed_active_users : cfg.Ka;

    DecodeOutput out;
    out.detection = gomp_detect(rx.pilot(), A_ext, assumed, cfg.delta, cfg.n_omp, cfg.N0);
    std::vector<std::uint64_t> active = out.detection.indices;

    std::map<std::uint64_t, Eigen::Index> truth_rows;
    if (opts.truth) truth_rows = detail::unique_index_rows(*opts.truth, cfg.Bp);

    CMatrix Y = rx.Y;
    const Eigen::Index np_prime = rx.np_prime;
    const Eigen::Index n = Y.rows();
    fec::SclDecoder decoder(code, cfg.n_list, cfg.scl_exact_metric);
    std::set<Bits> listed;

    for (int j = 1; j <= cfg.n_max && !active.empty(); ++j) {
        IterationDiagnostics diag;
        diag.iteration = j;
        diag.detected = active.size();
        diag.residual_energy = Y.squaredNorm();

        const CMatrix A_sel = select_columns(A_ext, active);
        CMatrix H_hat;
        try {
            H_hat = lmmse_channel_estimate(Y.topRows(np_prime), A_sel, cfg.N0);
        } catch (const SolveError& e) {
            out.detection.diagnostics.push_back("iteration " + std::to_string(j) + ": " + e.what());
            out.iterations.push_back(diag);
            break;
        }

        if (opts.truth) {
            std::vector<Eigen::Index> est_rows, true_rows;
            for (std::size_t k = 0; k < active.size(); ++k) {
                const auto it = truth_rows.find(active[k]);
                if (it == truth_rows.end()) continue;
                est_rows.push_back(static_cast<Eigen::Index>(k));
                true_rows.push_back(it->second);
            }
            if (!est_rows.empty()) diag.channel_mse = detail::mean_row_error(H_hat, est_rows, opts.truth->H, true_rows);
        }

        std::vector<std::size_t> decoded_slots;
        std::vector<Bits> decoded_messages;
        std::vector<TxFrame> frames;
        const auto Yd = Y.bottomRows(n - np_prime);
        for (std::size_t k = 0; k < active.size(); ++k) {
            const std::size_t col = static_cast<std::size_t>(active[k] - 1);
            const CRowVector h = H_hat.row(static_cast<Eigen::Index>(k));
            const MrcOutput mrc = mrc_combine(Yd, books.data_pattern.support(col), h);
            const double noise = effective_noise_variance(mrc.mean_row_energy, h.squaredNorm(), cfg.Pd, cfg.M, cfg.N0);
            const UserDecode dec = decode_user(mrc.symbols, h, noise, cfg, decoder, code);
            if (!dec.pass) continue;
            Bits message = index_to_bits(active[k] - 1, cfg.Bp);
            message.insert(message.end(), dec.md.begin(), dec.md.end());
            frames.push_back(encode_user(split_message(message, cfg), books, code, cfg));
            decoded_slots.push_back(k);
            decoded_messages.push_back(std::move(message));
        }
        diag.decoded = decoded_slots.size();
        if (decoded_slots.empty()) {
            out.iterations.push_back(diag);
            break;
        }

        CMatrix H_dec(static_cast<Eigen::Index>(decoded_slots.size()), Y.cols());
        for (std::size_t d = 0; d < decoded_slots.size(); ++d) {
            H_dec.row(static_cast<Eigen::Index>(d)) = H_hat.row(static_cast<Eigen::Index>(decoded_slots[d]));
        }

        std::optional<Reestimation> reest;
        if (cfg.sic_mode == SicMode::DataAidedReestimation || opts.compare_sic_estimates) {
            reest = sic_reestimated(Y, stack_frames(frames, n), cfg.N0);
        }

        if (opts.truth && opts.compare_sic_estimates) {
            std::vector<Eigen::Index> est_rows, true_rows;
            for (std::size_t d = 0; d < decoded_messages.size(); ++d) {
                const auto it = truth_rows.find(active[decoded_slots[d]]);
                if (it == truth_rows.end() || opts.truth->messages[static_cast<std::size_t>(it->second)] != decoded_messages[d])
                    continue;
                est_rows.push_back(static_cast<Eigen::Index>(d));
                true_rows.push_back(it->second);
            }
            if (!est_rows.empty()) {
                diag.decoded_mse_initial = detail::mean_row_error(H_dec, est_rows, opts.truth->H, true_rows);
                diag.decoded_mse_reestimated = detail::mean_row_error(reest->H_re, est_rows, opts.truth->H, true_rows);
            }
        }

        Y = cfg.sic_mode == SicMode::DataAidedReestimation ? std::move(reest->Y_res) : sic_initial(Y, frames, H_dec);

        for (auto& m : decoded_messages) {
            if (listed.insert(m).second) out.messages.push_back(std::move(m));
        }
        std::vector<std::uint64_t> remaining;
        remaining.reserve(active.size());
        for (std::size_t k = 0, d = 0; k < active.size(); ++k) {
            if (d < decoded_slots.size() && decoded_slots[d] == k) {
                ++d;
                continue;
            }
            remaining.push_back(active[k]);
        }
        active = std::move(remaining);
        out.iterations.push_back(diag);
    }
    return out;
}

}  // namespace odma_ura
