#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "odma_ura/channel.hpp"
#include "odma_ura/codebooks.hpp"
#include "odma_ura/metrics.hpp"
#include "odma_ura/receiver.hpp"
#include "odma_ura/rng.hpp"
#include "odma_ura/sysconfig.hpp"
#include "odma_ura/transmitter.hpp"

namespace odma_ura {

struct TrialOptions {
    bool force_collision = false;     // users 0 and 1 share mp, differ in md
    bool compare_sic_estimates = false;
    bool keep_diagnostics = false;
};

struct TrialRecord {
    std::uint64_t index = 0;
    TrialOutcome outcome;
    std::size_t iterations = 0;
    std::optional<double> first_iteration_mse;
    std::optional<double> decoded_mse_initial;
    std::optional<double> decoded_mse_reestimated;
    std::vector<IterationDiagnostics> diagnostics;
    double seconds = 0.0;
    bool skipped = false;
    std::string error;

    double pe() const { return trial_pmd(outcome) + trial_pfa(outcome); }
};

// Fixed per-configuration state shared read-only by every trial.
class Simulator {
public:
    explicit Simulator(SystemConfig cfg) : cfg_(std::move(cfg)) {
        const auto report = validate(cfg_);
        if (!report.ok()) {
            std::string msg = "invalid configuration:";
            for (const auto& v : report.violations) msg += " [" + v + "]";
            throw InvalidArgument(msg);
        }
        books_ = build_codebooks(cfg_);
        code_ = make_code(cfg_);
    }

    Simulator(SystemConfig cfg, CodebookSet books) : cfg_(std::move(cfg)), books_(std::move(books)) {
        require(validate(cfg_).ok(), "invalid configuration");
        code_ = make_code(cfg_);
    }

    const SystemConfig& config() const { return cfg_; }
    const CodebookSet& codebooks() const { return books_; }
    const fec::PolarCodeSpec& code() const { return code_; }

    // Uniform i.i.d. B-bit messages for one trial.
    std::vector<Bits> draw_messages(std::uint64_t trial, bool force_collision) const {
        CounterRng rng(cfg_.seed, StreamDomain::Messages, trial);
        std::vector<Bits> msgs(static_cast<std::size_t>(cfg_.Ka), Bits(static_cast<std::size_t>(cfg_.B)));
        for (auto& m : msgs) {
            for (auto& b : m) b = static_cast<std::uint8_t>(rng.bit());
        }
        if (force_collision && cfg_.Ka >= 2) {
            std::copy(msgs[0].begin(), msgs[0].begin() + cfg_.Bp, msgs[1].begin());
            if (msgs[1] == msgs[0]) msgs[1].back() ^= 1U;
        }
        return msgs;
    }

    TrialRecord run_trial(std::uint64_t trial, const TrialOptions& opts = {}) const {
        const auto start = std::chrono::steady_clock::now();
        TrialRecord rec;
        rec.index = trial;
        try {
            std::vector<Bits> msgs = draw_messages(trial, opts.force_collision);
            std::vector<TxFrame> frames;
            frames.reserve(msgs.size());
            for (const auto& m : msgs) frames.push_back(encode_user(split_message(m, cfg_), books_, code_, cfg_));

            CounterRng channel_rng(cfg_.seed, StreamDomain::Channel, trial);
            const ChannelRealization ch = draw_channel(cfg_.Ka, cfg_.M, channel_rng);
            CounterRng noise_rng(cfg_.seed, StreamDomain::Noise, trial);
            const ReceivedFrame rx = add_noise(superimpose(frames, ch.H), cfg_.N0, noise_rng, cfg_.np_prime);

            GroundTruth truth{msgs, ch.H};
            DecodeOptions dopts;
            dopts.truth = &truth;
            dopts.compare_sic_estimates = opts.compare_sic_estimates;
            DecodeOutput dec = iterative_decode(rx, books_, code_, cfg_, dopts);

            rec.iterations = dec.iterations.size();
            if (!dec.iterations.empty()) {
                rec.first_iteration_mse = dec.iterations.front().channel_mse;
                rec.decoded_mse_initial = dec.iterations.front().decoded_mse_initial;
                rec.decoded_mse_reestimated = dec.iterations.front().decoded_mse_reestimated;
            }
            if (opts.keep_diagnostics) rec.diagnostics = dec.iterations;
            rec.outcome = evaluate_trial(std::move(msgs), std::move(dec.messages), cfg_.Bp);
            rec.outcome.channel_mse = rec.first_iteration_mse;
        } catch (const std::exception& e) {
            rec.skipped = true;
            rec.error = e.what();
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return rec;
    }

private:
    SystemConfig cfg_;
    CodebookSet books_;
    fec::PolarCodeSpec code_;
};

struct ResultRow {
    int Ka = 0;
    int M = 0;
    double Pp = 0.0;
    double Pd = 0.0;
    double ebn0_db = 0.0;
    std::size_t trials = 0;
    double Pmd = 0.0;
    double Pfa = 0.0;
    double Pe = 0.0;
    double mean_iterations = 0.0;
    double mean_mse = std::numeric_limits<double>::quiet_NaN();
    double collision_rate = 0.0;
    double seconds_per_trial = 0.0;
};

inline constexpr const char* kCsvHeader =
    "Ka,M,Pp,Pd,EbN0_dB,trials,Pmd,Pfa,Pe,mean_iterations,mean_mse,collision_rate,wall_clock_per_trial";

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string to_csv(const ResultRow& r) {
    std::string s;
    s += std::to_string(r.Ka) + ',' + std::to_string(r.M) + ',' + format_number(r.Pp) + ',' + format_number(r.Pd) + ',' +
         format_number(r.ebn0_db) + ',' + std::to_string(r.trials) + ',' + format_number(r.Pmd) + ',' +
         format_number(r.Pfa) + ',' + format_number(r.Pe) + ',' + format_number(r.mean_iterations) + ',' +
         format_number(r.mean_mse) + ',' + format_number(r.collision_rate) + ',' + format_number(r.seconds_per_trial);
    return s;
}

// Sequential stopping: a point stops early once a 95% bound certifies
// Pe > epsilon, or Pe <= epsilon after at least `min_trials_pass` trials.
struct StopRule {
    double epsilon = 0.1;
    std::size_t batch = 25;
    std::size_t min_trials_pass = 500;
    std::size_t max_trials = 500;
    double z = 1.959963984540054;
};

struct ConfidenceInterval {
    double lower = 0.0;
    double upper = 0.0;
};

// Wider of a normal interval on the per-trial mean and a Wilson interval
// treating every active user as one Bernoulli outcome.
inline ConfidenceInterval pe_interval(std::span<const TrialRecord> records, int Ka, double z) {
    std::size_t n = 0;
    double sum = 0.0, sum_sq = 0.0;
    for (const auto& r : records) {
        if (r.skipped) continue;
        const double pe = r.pe();
        sum += pe;
        sum_sq += pe * pe;
        ++n;
    }
    if (n == 0) return {0.0, 2.0};
    const double mean = sum / static_cast<double>(n);
    const double var = n > 1 ? std::max(0.0, (sum_sq - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1)) : 0.0;
    const double half = z * std::sqrt(var / static_cast<double>(n));
    ConfidenceInterval ci{mean - half, mean + half};

    if (mean <= 1.0) {
        const double users = static_cast<double>(n) * Ka;
        const double denom = 1.0 + z * z / users;
        const double centre = (mean + z * z / (2.0 * users)) / denom;
        const double spread = z * std::sqrt(mean * (1.0 - mean) / users + z * z / (4.0 * users * users)) / denom;
        ci.lower = std::min(ci.lower, centre - spread);
        ci.upper = std::max(ci.upper, centre + spread);
    }
    ci.lower = std::max(0.0, ci.lower);
    return ci;
}

struct PointResult {
    ResultRow row;
    std::size_t skipped = 0;
    std::vector<TrialRecord> records;  // in trial order
    ConfidenceInterval pe_ci;
    bool stopped_early = false;
};

inline ResultRow summarize(const SystemConfig& cfg, std::span<const TrialRecord> records) {
    ResultRow row;
    row.Ka = cfg.Ka;
    row.M = cfg.M;
    row.Pp = cfg.Pp;
    row.Pd = cfg.Pd;
    row.ebn0_db = energy_per_bit(cfg).db;
    std::vector<TrialOutcome> outcomes;
    double iters = 0.0, mse = 0.0, coll = 0.0, secs = 0.0;
    std::size_t mse_count = 0;
    for (const auto& r : records) {
        if (r.skipped) continue;
        outcomes.push_back(r.outcome);
        iters += static_cast<double>(r.iterations);
        coll += static_cast<double>(r.outcome.collisions) / static_cast<double>(cfg.Ka);
        secs += r.seconds;
        if (r.first_iteration_mse) {
            mse += *r.first_iteration_mse;
            ++mse_count;
        }
    }
    row.trials = outcomes.size();
    if (outcomes.empty()) return row;
    const Pupe p = compute_pupe(outcomes);
    row.Pmd = p.Pmd;
    row.Pfa = p.Pfa;
    row.Pe = p.Pe;
    const auto n = static_cast<double>(outcomes.size());
    row.mean_iterations = iters / n;
    row.collision_rate = coll / n;
    row.seconds_per_trial = secs / n;
    if (mse_count > 0) row.mean_mse = mse / static_cast<double>(mse_count);
    return row;
}

// Runs trials [first, last) on `threads` workers; results land by index.
inline void run_trials(const Simulator& sim, std::uint64_t first, std::uint64_t last, int threads,
                       const TrialOptions& opts, std::vector<TrialRecord>& out) {
    out.resize(static_cast<std::size_t>(last));
    std::atomic<std::uint64_t> next{first};
    auto worker = [&] {
        for (std::uint64_t t = next++; t < last; t = next++) out[static_cast<std::size_t>(t)] = sim.run_trial(t, opts);
    };
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(last - first)));
    if (workers == 1) {
        worker();
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
}

// Exactly `trials` independent trials keyed by (seed, trial index).
inline PointResult run_point(const Simulator& sim, std::size_t trials, int threads, const TrialOptions& opts = {}) {
    require(trials >= 1, "at least one trial required");
    PointResult res;
    run_trials(sim, 0, trials, threads, opts, res.records);
    res.row = summarize(sim.config(), res.records);
    res.skipped = trials - res.row.trials;
    res.pe_ci = pe_interval(res.records, sim.config().Ka, StopRule{}.z);
    return res;
}

inline PointResult run_point(const SystemConfig& cfg, std::size_t trials, int threads, const TrialOptions& opts = {}) {
    return run_point(Simulator(cfg), trials, threads, opts);
}

// Batches of trials until the stop rule fires; batch boundaries do not depend
// on the thread count, so the outcome is reproducible.
inline PointResult run_point_sequential(const Simulator& sim, const StopRule& rule, int threads,
                                        const TrialOptions& opts = {}) {
    require(rule.batch >= 1 && rule.max_trials >= 1, "invalid stop rule");
    PointResult res;
    std::size_t done = 0;
    while (done < rule.max_trials) {
        const std::size_t next = std::min(rule.max_trials, done + rule.batch);
        run_trials(sim, done, next, threads, opts, res.records);
        done = next;
        res.pe_ci = pe_interval(res.records, sim.config().Ka, rule.z);
        if (res.pe_ci.lower > rule.epsilon) break;
        if (done >= rule.min_trials_pass && res.pe_ci.upper <= rule.epsilon) break;
    }
    res.stopped_early = done < rule.max_trials;
    res.row = summarize(sim.config(), res.records);
    res.skipped = done - res.row.trials;
    return res;
}

struct SicComparison {
    PointResult initial;
    PointResult reestimated;
    SicMode chosen = SicMode::InitialEstimates;
};

inline SystemConfig with_sic(SystemConfig cfg, SicMode mode) {
    cfg.sic_mode = mode;
    cfg.seed = stream_key(cfg.seed, static_cast<std::uint64_t>(StreamDomain::SicMode), static_cast<std::uint64_t>(mode));
    return cfg;
}

// Both cancellation variants on independent sub-streams; ties go to the
// cheaper initial-estimate variant.
inline SicComparison try_both_sic(const SystemConfig& cfg, std::size_t trials, int threads) {
    SicComparison cmp;
    cmp.initial = run_point(with_sic(cfg, SicMode::InitialEstimates), trials, threads);
    cmp.reestimated = run_point(with_sic(cfg, SicMode::DataAidedReestimation), trials, threads);
    cmp.chosen = cmp.reestimated.row.Pe < cmp.initial.row.Pe ? SicMode::DataAidedReestimation : SicMode::InitialEstimates;
    return cmp;
}

struct PowerPoint {
    double Pp = 0.0;
    double Pd = 0.0;
};

struct ExperimentPlan {
    SystemConfig base;
    std::vector<int> ka_values;
    std::vector<int> m_values;
    std::vector<double> pp_values;  // pilot power grid
    std::vector<double> pd_values;  // data power grid
    StopRule stop;
    int threads = 1;
    bool exhaustive = false;  // evaluate every grid point instead of pruning
    TrialOptions trial_options;
};

struct EvaluatedPoint {
    PowerPoint power;
    double ebn0_db = 0.0;
    bool pass = false;
    PointResult result;
};

struct SearchResult {
    int Ka = 0;
    int M = 0;
    bool feasible = false;
    double ebn0_db = std::numeric_limits<double>::infinity();
    PowerPoint argmin;
    std::vector<EvaluatedPoint> evaluated;  // evaluation order
    std::size_t inferred_failures = 0;      // points skipped by dominance
};

inline bool point_passes(const PointResult& r, double epsilon) { return r.row.trials > 0 && r.row.Pe <= epsilon; }

// Minimum energy-per-bit over the (Pp, Pd) grid with Pe <= epsilon.
// Pruned mode walks the grid in ascending Eb/N0 and skips any point that is
// dominated (both powers lower or equal) by a failing point; it relies on Pe
// being non-increasing in each power. The first passing point is the answer.
inline SearchResult search_min_ebn0_point(const SystemConfig& base, const ExperimentPlan& plan,
                                          const std::function<void(const EvaluatedPoint&)>& on_point = {}) {
    require(!plan.pp_values.empty() && !plan.pd_values.empty(), "power grid must be non-empty");
    SearchResult out;
    out.Ka = base.Ka;
    out.M = base.M;

    struct GridPoint {
        std::size_t ip, id;
        double ebn0;
    };
    std::vector<GridPoint> grid;
    for (std::size_t ip = 0; ip < plan.pp_values.size(); ++ip) {
        for (std::size_t id = 0; id < plan.pd_values.size(); ++id) {
            SystemConfig c = base;
            c.Pp = plan.pp_values[ip];
            c.Pd = plan.pd_values[id];
            grid.push_back({ip, id, energy_per_bit(c).db});
        }
    }
    std::stable_sort(grid.begin(), grid.end(), [](const GridPoint& a, const GridPoint& b) { return a.ebn0 < b.ebn0; });

    std::vector<PowerPoint> failures;
    for (const auto& g : grid) {
        const PowerPoint pw{plan.pp_values[g.ip], plan.pd_values[g.id]};
        if (!plan.exhaustive) {
            const bool dominated = std::any_of(failures.begin(), failures.end(), [&](const PowerPoint& f) {
                return pw.Pp <= f.Pp && pw.Pd <= f.Pd;
            });
            if (dominated) {
                ++out.inferred_failures;
                continue;
            }
        }
        SystemConfig c = base;
        c.Pp = pw.Pp;
        c.Pd = pw.Pd;
        EvaluatedPoint ev;
        ev.power = pw;
        ev.ebn0_db = g.ebn0;
        ev.result = run_point_sequential(Simulator(c), plan.stop, plan.threads, plan.trial_options);
        ev.pass = point_passes(ev.result, plan.stop.epsilon);
        if (on_point) on_point(ev);
        out.evaluated.push_back(ev);
        if (ev.pass) {
            if (!out.feasible || g.ebn0 < out.ebn0_db) {
                out.feasible = true;
                out.ebn0_db = g.ebn0;
                out.argmin = pw;
            }
            if (!plan.exhaustive) break;
        } else {
            failures.push_back(pw);
        }
    }
    return out;
}

inline std::vector<SearchResult> search_min_ebn0(const ExperimentPlan& plan,
                                                 const std::function<void(const EvaluatedPoint&)>& on_point = {}) {
    require(!plan.ka_values.empty() && !plan.m_values.empty(), "sweep axes must be non-empty");
    std::vector<SearchResult> results;
    for (const int ka : plan.ka_values) {
        for (const int m : plan.m_values) {
            SystemConfig c = plan.base;
            c.Ka = ka;
            c.M = m;
            results.push_back(search_min_ebn0_point(c, plan, on_point));
        }
    }
    return results;
}

inline nlohmann::json to_json(const IterationDiagnostics& d, std::uint64_t trial) {
    nlohmann::json j{{"trial", trial},
                     {"iteration", d.iteration},
                     {"detected", d.detected},
                     {"decoded", d.decoded},
                     {"residual_energy", d.residual_energy}};
    j["mse"] = d.channel_mse ? nlohmann::json(*d.channel_mse) : nlohmann::json(nullptr);
    return j;
}

}  // namespace odma_ura
