#pragma once

#include "odma_ura/rng.hpp"
#include "odma_ura/types.hpp"

namespace odma_ura {

// Quasi-static Rayleigh channel: one CN(0, 1) row per user for the whole frame.
struct ChannelRealization {
    CMatrix H;  // Ka x M
};

inline ChannelRealization draw_channel(int Ka, int M, CounterRng& rng) {
    require(Ka >= 1 && M >= 1, "channel needs at least one user and one antenna");
    ChannelRealization ch;
    ch.H.resize(Ka, M);
    for (int i = 0; i < Ka; ++i) {
        for (int m = 0; m < M; ++m) ch.H(i, m) = rng.complex_normal(1.0);
    }
    return ch;
}

// n x M received block with row views onto the pilot and data parts.
struct ReceivedFrame {
    CMatrix Y;
    Eigen::Index np_prime = 0;

    auto pilot() const { return Y.topRows(np_prime); }
    auto data() const { return Y.bottomRows(Y.rows() - np_prime); }
};

inline ReceivedFrame add_noise(CMatrix noiseless, double N0, CounterRng& rng, Eigen::Index np_prime) {
    require(N0 >= 0.0, "noise variance must be non-negative");
    require(np_prime >= 0 && np_prime <= noiseless.rows(), "pilot part exceeds frame");
    if (N0 > 0.0) {
        for (Eigen::Index m = 0; m < noiseless.cols(); ++m) {
            for (Eigen::Index t = 0; t < noiseless.rows(); ++t) noiseless(t, m) += rng.complex_normal(N0);
        }
    }
    return {std::move(noiseless), np_prime};
}

}  // namespace odma_ura
