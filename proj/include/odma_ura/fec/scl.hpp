#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "odma_ura/fec/crc.hpp"
#include "odma_ura/fec/polar.hpp"
#include "odma_ura/types.hpp"

namespace odma_ura::fec {

struct SclCandidate {
    Bits info_bits;
    double path_metric = 0.0;  // -log P(u | y) up to a constant; lower is better
};

struct SclResult {
    Bits info_bits;
    bool pass = false;
    double path_metric = 0.0;
};

// LLR-domain successive-cancellation list decoder; positive LLR favours 0.
//
// Stage arrays are shared between paths and reference counted. A path that
// writes a shared array gets a fresh one; every write covers the whole array,
// so forking never copies data. Decided information bits live in a parent-
// linked log and are read back once at the end.
class SclDecoder {
public:
    SclDecoder(const PolarCodeSpec& spec, int list_size, bool exact_metric = false)
        : spec_(spec), list_size_(list_size), exact_(exact_metric), m_(spec.log2_length()) {
        require(list_size_ >= 1, "list size must be positive");
        const auto L = static_cast<std::size_t>(list_size_);
        const auto stages = static_cast<std::size_t>(m_) + 1;
        alpha_.resize(stages);
        beta_.resize(stages);
        left_.resize(stages);
        for (std::size_t s = 0; s < stages; ++s) {
            const std::size_t len = std::size_t{1} << s;
            alpha_[s].init(L, len);
            beta_[s].init(L, len);
            left_[s].init(L, len);
        }
        paths_.resize(L);
        for (auto& p : paths_) {
            p.alpha.assign(stages, -1);
            p.beta.assign(stages, -1);
            p.left.assign(stages, -1);
        }
    }

    // Surviving paths sorted by ascending metric (ties: lower path slot).
    std::vector<SclCandidate> decode_list(std::span<const double> llr) {
        require(llr.size() == static_cast<std::size_t>(spec_.nc), "LLR length differs from code length");
        for (const double v : llr) require(std::isfinite(v), "LLRs must be finite");
        reset();
        channel_ = llr;
        decode_node(m_, 0);

        std::vector<int> order = active_;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (paths_[a].metric != paths_[b].metric) return paths_[a].metric < paths_[b].metric;
            return a < b;
        });
        std::vector<SclCandidate> out;
        out.reserve(order.size());
        const auto k = spec_.info_positions.size();
        for (const int p : order) {
            SclCandidate c;
            c.path_metric = paths_[p].metric;
            c.info_bits.assign(k, 0);
            std::int32_t d = paths_[p].last_decision;
            for (std::size_t i = k; i-- > 0;) {
                c.info_bits[i] = decisions_[static_cast<std::size_t>(d)].bit;
                d = decisions_[static_cast<std::size_t>(d)].parent;
            }
            out.push_back(std::move(c));
        }
        return out;
    }

    // Best CRC-passing survivor; without a CRC, the best survivor with pass=true.
    // An all-zero LLR vector is an erasure and never passes.
    SclResult decode(std::span<const double> llr) {
        auto list = decode_list(llr);
        SclResult res;
        if (list.empty()) return res;
        if (std::all_of(llr.begin(), llr.end(), [](double v) { return v == 0.0; })) {
            res.info_bits = std::move(list.front().info_bits);
            res.path_metric = list.front().path_metric;
            return res;
        }
        if (spec_.crc_bits == 0) {
            res.info_bits = std::move(list.front().info_bits);
            res.path_metric = list.front().path_metric;
            res.pass = true;
            return res;
        }
        for (auto& c : list) {
            if (crc_check(c.info_bits)) {
                res.info_bits = std::move(c.info_bits);
                res.path_metric = c.path_metric;
                res.pass = true;
                return res;
            }
        }
        res.info_bits = std::move(list.front().info_bits);
        res.path_metric = list.front().path_metric;
        return res;
    }

private:
    template <typename T>
    struct StagePool {
        std::vector<T> data;
        std::vector<int> refs;
        std::vector<int> free;
        std::size_t len = 0;

        void init(std::size_t count, std::size_t length) {
            len = length;
            data.assign(count * length, T{});
            refs.assign(count, 0);
            reset();
        }
        void reset() {
            std::fill(refs.begin(), refs.end(), 0);
            free.clear();
            for (int i = static_cast<int>(refs.size()) - 1; i >= 0; --i) free.push_back(i);
        }
        T* at(int idx) { return data.data() + static_cast<std::size_t>(idx) * len; }
        void release(int idx) {
            if (idx >= 0 && --refs[static_cast<std::size_t>(idx)] == 0) free.push_back(idx);
        }
        // Array index owned solely by the caller, ready to be overwritten.
        int writable(int idx) {
            if (idx >= 0 && refs[static_cast<std::size_t>(idx)] == 1) return idx;
            release(idx);
            const int fresh = free.back();
            free.pop_back();
            refs[static_cast<std::size_t>(fresh)] = 1;
            return fresh;
        }
    };

    struct Path {
        std::vector<int> alpha, beta, left;  // per-stage array indices, -1 = none
        double metric = 0.0;
        std::int32_t last_decision = -1;
    };

    struct Decision {
        std::int32_t parent;
        std::uint8_t bit;
    };

    struct Fork {
        double metric;
        int path;
        std::uint8_t bit;
    };

    void reset() {
        for (auto& pool : alpha_) pool.reset();
        for (auto& pool : beta_) pool.reset();
        for (auto& pool : left_) pool.reset();
        for (auto& p : paths_) {
            std::fill(p.alpha.begin(), p.alpha.end(), -1);
            std::fill(p.beta.begin(), p.beta.end(), -1);
            std::fill(p.left.begin(), p.left.end(), -1);
            p.metric = 0.0;
            p.last_decision = -1;
        }
        decisions_.clear();
        active_.assign(1, 0);
        free_paths_.clear();
        for (int p = list_size_ - 1; p >= 1; --p) free_paths_.push_back(p);
    }

    double f(double a, double b) const {
        const double sign = ((a < 0) != (b < 0)) ? -1.0 : 1.0;
        const double mag = std::min(std::abs(a), std::abs(b));
        if (!exact_) return sign * mag;
        return sign * mag + std::log1p(std::exp(-std::abs(a + b))) - std::log1p(std::exp(-std::abs(a - b)));
    }

    static double g(double a, double b, std::uint8_t left) { return left ? b - a : b + a; }

    double penalty(double llr, std::uint8_t bit) const {
        const double x = bit ? -llr : llr;
        if (exact_) return x > -30.0 ? std::log1p(std::exp(-x)) : -x;
        return x < 0.0 ? -x : 0.0;
    }

    const double* stage_input(const Path& p, int s) {
        return s == m_ ? channel_.data() : alpha_[static_cast<std::size_t>(s)].at(p.alpha[static_cast<std::size_t>(s)]);
    }

    template <typename T>
    T* write(StagePool<T>& pool, std::vector<int>& slots, int s) {
        auto& idx = slots[static_cast<std::size_t>(s)];
        idx = pool.writable(idx);
        return pool.at(idx);
    }

    void decode_node(int s, int base) {
        if (s == 0) {
            leaf(base);
            return;
        }
        const auto below = static_cast<std::size_t>(s - 1);
        const std::size_t half = std::size_t{1} << below;
        for (const int id : active_) {
            Path& p = paths_[static_cast<std::size_t>(id)];
            const double* in = stage_input(p, s);
            double* out = write(alpha_[below], p.alpha, s - 1);
            for (std::size_t j = 0; j < half; ++j) out[j] = f(in[j], in[j + half]);
        }
        decode_node(s - 1, base);
        for (const int id : active_) {
            Path& p = paths_[static_cast<std::size_t>(id)];
            const std::uint8_t* child = beta_[below].at(p.beta[below]);
            std::uint8_t* left = write(left_[below], p.left, s - 1);
            std::copy(child, child + half, left);
            const double* in = stage_input(p, s);
            double* out = write(alpha_[below], p.alpha, s - 1);
            for (std::size_t j = 0; j < half; ++j) out[j] = g(in[j], in[j + half], left[j]);
        }
        decode_node(s - 1, base + static_cast<int>(half));
        for (const int id : active_) {
            Path& p = paths_[static_cast<std::size_t>(id)];
            const std::uint8_t* left = left_[below].at(p.left[below]);
            const std::uint8_t* right = beta_[below].at(p.beta[below]);
            std::uint8_t* out = write(beta_[static_cast<std::size_t>(s)], p.beta, s);
            for (std::size_t j = 0; j < half; ++j) {
                out[j] = left[j] ^ right[j];
                out[j + half] = right[j];
            }
        }
    }

    double leaf_llr(const Path& p) { return m_ == 0 ? channel_[0] : alpha_[0].at(p.alpha[0])[0]; }

    void set_leaf(Path& p, std::uint8_t bit) { *write(beta_[0], p.beta, 0) = bit; }

    void record(Path& p, std::uint8_t bit) {
        decisions_.push_back({p.last_decision, bit});
        p.last_decision = static_cast<std::int32_t>(decisions_.size() - 1);
    }

    void kill(int id) {
        Path& p = paths_[static_cast<std::size_t>(id)];
        for (std::size_t s = 0; s < p.alpha.size(); ++s) {
            alpha_[s].release(p.alpha[s]);
            beta_[s].release(p.beta[s]);
            left_[s].release(p.left[s]);
            p.alpha[s] = p.beta[s] = p.left[s] = -1;
        }
        free_paths_.push_back(id);
    }

    int clone(int id) {
        const int c = free_paths_.back();
        free_paths_.pop_back();
        Path& src = paths_[static_cast<std::size_t>(id)];
        Path& dst = paths_[static_cast<std::size_t>(c)];
        for (std::size_t s = 0; s < src.alpha.size(); ++s) {
            dst.alpha[s] = src.alpha[s];
            dst.beta[s] = src.beta[s];
            dst.left[s] = src.left[s];
            if (src.alpha[s] >= 0) ++alpha_[s].refs[static_cast<std::size_t>(src.alpha[s])];
            if (src.beta[s] >= 0) ++beta_[s].refs[static_cast<std::size_t>(src.beta[s])];
            if (src.left[s] >= 0) ++left_[s].refs[static_cast<std::size_t>(src.left[s])];
        }
        dst.metric = src.metric;
        dst.last_decision = src.last_decision;
        return c;
    }

    void leaf(int index) {
        if (spec_.frozen[static_cast<std::size_t>(index)]) {
            for (const int id : active_) {
                Path& p = paths_[static_cast<std::size_t>(id)];
                p.metric += penalty(leaf_llr(p), 0);
                set_leaf(p, 0);
            }
            return;
        }

        forks_.clear();
        for (const int id : active_) {
            const Path& p = paths_[static_cast<std::size_t>(id)];
            const double l = leaf_llr(p);
            forks_.push_back({p.metric + penalty(l, 0), id, 0});
            forks_.push_back({p.metric + penalty(l, 1), id, 1});
        }
        const std::size_t keep = std::min(forks_.size(), static_cast<std::size_t>(list_size_));
        if (keep < forks_.size()) {
            // strict total order, so the surviving set is unique
            std::nth_element(forks_.begin(), forks_.begin() + static_cast<std::ptrdiff_t>(keep), forks_.end(),
                             [](const Fork& a, const Fork& b) {
                                 if (a.metric != b.metric) return a.metric < b.metric;
                                 if (a.path != b.path) return a.path < b.path;
                                 return a.bit < b.bit;
                             });
        }

        const std::size_t L = paths_.size();
        keep_.assign(2 * L, 0);
        metric_.resize(2 * L);
        for (std::size_t i = 0; i < keep; ++i) {
            const auto slot = 2 * static_cast<std::size_t>(forks_[i].path) + forks_[i].bit;
            keep_[slot] = 1;
            metric_[slot] = forks_[i].metric;
        }

        next_.clear();
        for (const int id : active_) {
            const auto k = 2 * static_cast<std::size_t>(id);
            if (!keep_[k] && !keep_[k + 1]) kill(id);
        }
        for (const int id : active_) {
            const auto k = 2 * static_cast<std::size_t>(id);
            if (!keep_[k] && !keep_[k + 1]) continue;
            if (keep_[k] && keep_[k + 1]) {
                const int c = clone(id);
                Path& q = paths_[static_cast<std::size_t>(c)];
                q.metric = metric_[k + 1];
                record(q, 1);
                set_leaf(q, 1);
                next_.push_back(c);
            }
            Path& p = paths_[static_cast<std::size_t>(id)];
            const std::uint8_t bit = keep_[k] ? 0 : 1;
            p.metric = metric_[k + bit];
            record(p, bit);
            set_leaf(p, bit);
            next_.push_back(id);
        }
        std::sort(next_.begin(), next_.end());
        active_.swap(next_);
    }

    PolarCodeSpec spec_;
    int list_size_;
    bool exact_;
    int m_;
    std::vector<StagePool<double>> alpha_;
    std::vector<StagePool<std::uint8_t>> beta_;
    std::vector<StagePool<std::uint8_t>> left_;
    std::vector<Path> paths_;
    std::vector<Decision> decisions_;
    std::vector<int> active_, next_, free_paths_;
    std::vector<Fork> forks_;
    std::vector<std::uint8_t> keep_;
    std::vector<double> metric_;
    std::span<const double> channel_;
};

inline SclResult scl_decode(const PolarCodeSpec& spec, std::span<const double> llr, int n_list,
                            bool exact_metric = false) {
    SclDecoder dec(spec, n_list, exact_metric);
    return dec.decode(llr);
}

}  // namespace odma_ura::fec
