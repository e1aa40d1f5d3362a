#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "odma_ura/transmitter.hpp"
#include "odma_ura/types.hpp"

namespace odma_ura {

struct TrialOutcome {
    std::vector<Bits> transmitted;   // Ka entries, may repeat
    std::vector<Bits> decoded;       // the receiver's list
    std::size_t misdetections = 0;   // users whose message is not in the list
    std::size_t false_alarms = 0;    // list entries no user sent
    std::size_t collisions = 0;      // users sharing their first Bp bits
    std::size_t list_size = 0;       // distinct list entries
    std::optional<double> channel_mse;
};

inline std::size_t count_collisions(std::span<const Bits> messages, int Bp) {
    std::map<Bits, std::size_t> counts;
    for (const auto& m : messages) {
        require(m.size() >= static_cast<std::size_t>(Bp), "message shorter than Bp");
        ++counts[Bits(m.begin(), m.begin() + Bp)];
    }
    std::size_t collided = 0;
    for (const auto& [prefix, c] : counts) {
        if (c > 1) collided += c;
    }
    return collided;
}

// Exact B-bit identity; the list is treated as a set.
inline TrialOutcome evaluate_trial(std::vector<Bits> transmitted, std::vector<Bits> decoded, int Bp) {
    TrialOutcome t;
    const std::set<Bits> list(decoded.begin(), decoded.end());
    const std::set<Bits> sent(transmitted.begin(), transmitted.end());
    for (const auto& m : transmitted) {
        if (!list.contains(m)) ++t.misdetections;
    }
    for (const auto& m : list) {
        if (!sent.contains(m)) ++t.false_alarms;
    }
    t.list_size = list.size();
    t.collisions = count_collisions(transmitted, Bp);
    t.transmitted = std::move(transmitted);
    t.decoded = std::move(decoded);
    return t;
}

struct Pupe {
    double Pmd = 0.0;
    double Pfa = 0.0;
    double Pe = 0.0;
};

inline double trial_pmd(const TrialOutcome& t) {
    return static_cast<double>(t.misdetections) / static_cast<double>(t.transmitted.size());
}

// |L| = 0 contributes zero false-alarm rate.
inline double trial_pfa(const TrialOutcome& t) {
    return t.list_size == 0 ? 0.0 : static_cast<double>(t.false_alarms) / static_cast<double>(t.list_size);
}

inline Pupe compute_pupe(std::span<const TrialOutcome> outcomes) {
    require(!outcomes.empty(), "PUPE needs at least one trial");
    Pupe p;
    for (const auto& t : outcomes) {
        require(!t.transmitted.empty(), "trial without active users");
        p.Pmd += trial_pmd(t);
        p.Pfa += trial_pfa(t);
    }
    p.Pmd /= static_cast<double>(outcomes.size());
    p.Pfa /= static_cast<double>(outcomes.size());
    p.Pe = p.Pmd + p.Pfa;
    return p;
}

// Mean over matched users of ||h_est - h_true||^2 / M. `matches` pairs an
// estimate row with a true row; empty matches give no value.
inline std::optional<double> channel_mse(const CMatrix& H_est, const CMatrix& H_true,
                                         std::span<const std::pair<Eigen::Index, Eigen::Index>> matches) {
    if (matches.empty()) return std::nullopt;
    require(H_est.cols() == H_true.cols(), "antenna count mismatch");
    double acc = 0.0;
    for (const auto& [e, t] : matches) {
        acc += (H_est.row(e) - H_true.row(t)).squaredNorm() / static_cast<double>(H_true.cols());
    }
    return acc / static_cast<double>(matches.size());
}

}  // namespace odma_ura
