// Command-line driver: single points, Cartesian sweeps and the minimum
// Eb/N0 search over a (Pp, Pd) grid.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "odma_ura/codebook_io.hpp"
#include "odma_ura/harness.hpp"

using namespace odma_ura;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Axes {
    std::vector<int> ka, m;
    std::vector<double> pp, pd;
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, sep);) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& s) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ConfigError("not a number: '" + s + "'");
    }
    if (used != s.size()) throw ConfigError("not a number: '" + s + "'");
    return v;
}

// "a,b,c" or "start:step:stop" (inclusive, within half a step).
std::vector<double> parse_values(const std::string& s) {
    std::vector<double> out;
    if (s.find(':') != std::string::npos) {
        const auto parts = split(s, ':');
        if (parts.size() != 3) throw ConfigError("range must be start:step:stop, got '" + s + "'");
        const double a = parse_double(parts[0]), step = parse_double(parts[1]), b = parse_double(parts[2]);
        if (!(step > 0) || b < a) throw ConfigError("empty or invalid range '" + s + "'");
        const auto count = static_cast<long>(std::floor((b - a) / step + 0.5));
        for (long i = 0; i <= count; ++i) out.push_back(a + static_cast<double>(i) * step);
    } else {
        for (const auto& v : split(s, ',')) out.push_back(parse_double(v));
    }
    if (out.empty()) throw ConfigError("empty axis '" + s + "'");
    return out;
}

std::vector<double> from_db(std::vector<double> v) {
    for (auto& x : v) x = std::pow(10.0, x / 10.0);
    return v;
}

// "ka=16,32;m=8,50;pp=0.1:0.1:1;pd_db=-16:0.5:-10"
void apply_sweep(const std::string& spec, Axes& axes) {
    for (const auto& clause : split(spec, ';')) {
        const auto eq = clause.find('=');
        if (eq == std::string::npos) throw ConfigError("sweep clause without '=': '" + clause + "'");
        const std::string key = clause.substr(0, eq);
        const auto values = parse_values(clause.substr(eq + 1));
        auto as_int = [&](std::vector<int>& dst) {
            dst.clear();
            for (const double v : values) {
                if (v != std::floor(v)) throw ConfigError("axis '" + key + "' needs integers");
                dst.push_back(static_cast<int>(v));
            }
        };
        if (key == "ka") as_int(axes.ka);
        else if (key == "m") as_int(axes.m);
        else if (key == "pp") axes.pp = values;
        else if (key == "pd") axes.pd = values;
        else if (key == "pp_db") axes.pp = from_db(values);
        else if (key == "pd_db") axes.pd = from_db(values);
        else throw ConfigError("unknown sweep axis '" + key + "'");
    }
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write '" + path + "'");
    return os;
}

std::string sidecar_path(const std::string& csv) {
    std::filesystem::path p(csv);
    p.replace_extension(".json");
    return p.string();
}

nlohmann::json ci_json(const ConfidenceInterval& ci) { return {{"lower", ci.lower}, {"upper", ci.upper}}; }

void write_trace(std::ostream* trace, const ResultRow& row, const PointResult& res) {
    if (!trace) return;
    for (const auto& rec : res.records) {
        for (const auto& d : rec.diagnostics) {
            auto j = to_json(d, rec.index);
            j["Ka"] = row.Ka;
            j["M"] = row.M;
            j["Pp"] = row.Pp;
            j["Pd"] = row.Pd;
            *trace << j.dump() << '\n';
        }
        if (rec.skipped) {
            *trace << nlohmann::json{{"trial", rec.index}, {"Ka", row.Ka}, {"M", row.M}, {"error", rec.error}}.dump()
                   << '\n';
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ODMA unsourced random access link simulator"};
    app.set_version_flag("--version", "odma_sim 1.0");

    std::string config_path, sweep, out_path, trace_path, sic = "", dump_path, load_path;
    std::size_t trials = 100, min_trials = 500, batch = 25;
    std::optional<std::size_t> max_trials;
    int threads = 1;
    bool search = false, exhaustive = false, validate_only = false;

    std::optional<int> n, B, Bp, np, np_prime, nc, r, nd, M, Ka, delta, n_omp, n_max, n_list;
    std::optional<long long> Kt;
    std::optional<double> N0, Pp, Pd, epsilon;
    std::optional<std::uint64_t> seed;
    bool exact_metric = false;

    app.add_option("--config", config_path, "JSON config; missing keys keep defaults")->check(CLI::ExistingFile);
    app.add_option("--ka", Ka, "active users");
    app.add_option("--m", M, "receive antennas");
    app.add_option("--pp", Pp, "pilot symbol power");
    app.add_option("--pd", Pd, "data symbol power");
    app.add_option("--trials", trials, "trials per point (fixed-count runs)")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "master seed");
    app.add_option("--sic", sic, "cancellation variant")->check(CLI::IsMember({"initial", "reest", "both"}));
    app.add_option("--sweep", sweep, "axes, e.g. \"ka=16,32;m=8,50;pd_db=-14:0.5:-8\"");
    app.add_option("--out", out_path, "CSV output; a .json sidecar is written next to it");
    app.add_option("--trace", trace_path, "per-iteration JSONL diagnostics");
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

    app.add_option("--n", n, "frame length");
    app.add_option("--B", B, "message bits");
    app.add_option("--Bp", Bp, "pilot index bits");
    app.add_option("--np", np, "pilot length");
    app.add_option("--np-prime", np_prime, "pilot part length");
    app.add_option("--nc", nc, "polar code length");
    app.add_option("--r", r, "CRC bits");
    app.add_option("--nd", nd, "data symbols per user");
    app.add_option("--kt", Kt, "total users (reported only)");
    app.add_option("--N0", N0, "noise variance");
    app.add_option("--delta", delta, "gOMP over-selection");
    app.add_option("--n-omp", n_omp, "gOMP iterations");
    app.add_option("--n-max", n_max, "decoder iterations");
    app.add_option("--n-list", n_list, "SCL list size");
    app.add_option("--epsilon", epsilon, "target PUPE");
    app.add_flag("--exact-metric", exact_metric, "exact SCL LLR update instead of min-sum");

    app.add_flag("--search", search, "minimum Eb/N0 search over the pp x pd grid per (ka, m)");
    app.add_flag("--exhaustive", exhaustive, "evaluate every grid point during --search");
    app.add_option("--min-trials", min_trials, "trials before a search point may pass");
    app.add_option("--max-trials", max_trials, "trial cap per search point (default: --min-trials)");
    app.add_option("--batch", batch, "sequential-test batch size")->check(CLI::PositiveNumber);
    app.add_option("--dump-codebooks", dump_path, "write the codebooks of the base config and exit");
    app.add_option("--load-codebooks", load_path, "use codebooks from a dump (fixed-count runs)");
    app.add_flag("--validate", validate_only, "check the resolved config and exit");

    CLI11_PARSE(app, argc, argv);

    try {
        SystemConfig base;
        if (!config_path.empty()) {
            try {
                base = load_config(config_path);
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError("bad config '" + config_path + "': " + e.what());
            } catch (const InvalidArgument& e) {
                throw ConfigError("bad config '" + config_path + "': " + e.what());
            }
        }
        auto set = [](auto& field, const auto& opt) {
            if (opt) field = *opt;
        };
        set(base.n, n);
        set(base.B, B);
        set(base.Bp, Bp);
        set(base.np, np);
        set(base.np_prime, np_prime);
        set(base.nc, nc);
        set(base.r, r);
        set(base.nd, nd);
        set(base.M, M);
        set(base.Ka, Ka);
        set(base.Kt, Kt);
        set(base.N0, N0);
        set(base.Pp, Pp);
        set(base.Pd, Pd);
        set(base.delta, delta);
        set(base.n_omp, n_omp);
        set(base.n_max, n_max);
        set(base.n_list, n_list);
        set(base.epsilon, epsilon);
        set(base.seed, seed);
        if (exact_metric) base.scl_exact_metric = true;
        if (sic == "initial" || sic == "reest") base.sic_mode = sic_mode_from_string(sic);

        Axes axes{{base.Ka}, {base.M}, {base.Pp}, {base.Pd}};
        if (!sweep.empty()) apply_sweep(sweep, axes);

        // every swept combination must be a valid link
        for (const int ka : axes.ka)
            for (const int m : axes.m)
                for (const double pp : axes.pp)
                    for (const double pd : axes.pd) {
                        SystemConfig c = base;
                        c.Ka = ka;
                        c.M = m;
                        c.Pp = pp;
                        c.Pd = pd;
                        const auto rep = validate(c);
                        if (!rep.ok()) {
                            std::string msg = "invalid configuration:";
                            for (const auto& v : rep.violations) msg += "\n  - " + v;
                            throw ConfigError(msg);
                        }
                    }
        if (validate_only) {
            std::cout << nlohmann::json(base).dump(2) << '\n';
            return 0;
        }

        if (!dump_path.empty()) {
            try {
                save_codebooks(dump_path, build_codebooks(base), base.seed);
            } catch (const InvalidArgument&) {
                throw;
            } catch (const std::runtime_error& e) {
                throw IoError(e.what());
            }
            std::cerr << "codebooks written to " << dump_path << '\n';
            return 0;
        }

        std::optional<CodebookSet> loaded;
        if (!load_path.empty()) {
            if (search) throw ConfigError("--load-codebooks applies to fixed-count runs only");
            if (axes.pp.size() != 1) throw ConfigError("--load-codebooks needs a single pilot power");
            LoadedCodebooks lc;
            try {
                lc = load_codebooks(load_path);
            } catch (const InvalidArgument&) {
                throw;
            } catch (const std::runtime_error& e) {
                throw IoError(e.what());
            }
            const auto& b = lc.books;
            if (b.pilot.length() != base.np || static_cast<std::uint64_t>(b.pilot.size()) != base.codebook_size() ||
                b.pilot_pattern.rows() != static_cast<std::uint32_t>(base.np_prime) ||
                b.data_pattern.rows() != static_cast<std::uint32_t>(base.data_part_length()) ||
                b.data_pattern.weight() != static_cast<std::uint32_t>(base.nd)) {
                throw ConfigError("codebook dimensions differ from the configuration");
            }
            if (std::abs(b.pilot.A.col(0).squaredNorm() - base.np * axes.pp.front()) > 1e-6 * base.np * axes.pp.front()) {
                throw ConfigError("codebook pilot power differs from --pp");
            }
            loaded = std::move(lc.books);
        }

        std::ofstream csv_file, trace_file;
        std::ostream* csv = &std::cout;
        if (!out_path.empty()) {
            csv_file = open_out(out_path);
            csv = &csv_file;
        }
        std::ostream* trace = nullptr;
        if (!trace_path.empty()) {
            trace_file = open_out(trace_path);
            trace = &trace_file;
        }
        TrialOptions topts;
        topts.keep_diagnostics = trace != nullptr;

        nlohmann::json sidecar{{"config", base},
                               {"axes", {{"Ka", axes.ka}, {"M", axes.m}, {"Pp", axes.pp}, {"Pd", axes.pd}}},
                               {"threads", threads},
                               {"sic", sic.empty() ? std::string(to_string(base.sic_mode)) : sic}};
        *csv << kCsvHeader << '\n';

        if (search) {
            ExperimentPlan plan;
            plan.base = base;
            plan.ka_values = axes.ka;
            plan.m_values = axes.m;
            plan.pp_values = axes.pp;
            plan.pd_values = axes.pd;
            plan.stop.epsilon = base.epsilon;
            plan.stop.batch = batch;
            plan.stop.min_trials_pass = min_trials;
            plan.stop.max_trials = max_trials.value_or(min_trials);
            plan.threads = threads;
            plan.exhaustive = exhaustive;
            plan.trial_options = topts;
            if (plan.stop.max_trials < plan.stop.min_trials_pass) throw ConfigError("--max-trials below --min-trials");
            sidecar["stop_rule"] = {{"epsilon", plan.stop.epsilon},
                                    {"batch", plan.stop.batch},
                                    {"min_trials_pass", plan.stop.min_trials_pass},
                                    {"max_trials", plan.stop.max_trials},
                                    {"z", plan.stop.z}};
            const auto results = search_min_ebn0(plan, [&](const EvaluatedPoint& ev) {
                *csv << to_csv(ev.result.row) << '\n';
                csv->flush();
                write_trace(trace, ev.result.row, ev.result);
                std::cerr << "Ka=" << ev.result.row.Ka << " M=" << ev.result.row.M << " Pp=" << ev.power.Pp
                          << " Pd=" << ev.power.Pd << " EbN0=" << format_number(ev.ebn0_db)
                          << " Pe=" << format_number(ev.result.row.Pe) << " trials=" << ev.result.row.trials
                          << (ev.pass ? " pass" : " fail") << '\n';
            });
            auto& js = sidecar["search"] = nlohmann::json::array();
            for (const auto& r : results) {
                nlohmann::json e{{"Ka", r.Ka},
                                 {"M", r.M},
                                 {"feasible", r.feasible},
                                 {"evaluated", r.evaluated.size()},
                                 {"inferred_failures", r.inferred_failures}};
                if (r.feasible) {
                    e["EbN0_dB"] = r.ebn0_db;
                    e["Pp"] = r.argmin.Pp;
                    e["Pd"] = r.argmin.Pd;
                }
                js.push_back(e);
                std::cerr << "required Eb/N0 for Ka=" << r.Ka << " M=" << r.M << ": "
                          << (r.feasible ? format_number(r.ebn0_db) + " dB" : std::string("infeasible on this grid"))
                          << '\n';
            }
        } else {
            auto& jp = sidecar["points"] = nlohmann::json::array();
            for (const int ka : axes.ka)
                for (const int m : axes.m)
                    for (const double pp : axes.pp)
                        for (const double pd : axes.pd) {
                            SystemConfig c = base;
                            c.Ka = ka;
                            c.M = m;
                            c.Pp = pp;
                            c.Pd = pd;
                            nlohmann::json entry{{"Ka", ka}, {"M", m}, {"Pp", pp}, {"Pd", pd}};
                            PointResult res;
                            if (sic == "both") {
                                auto cmp = try_both_sic(c, trials, threads);
                                entry["Pe_initial"] = cmp.initial.row.Pe;
                                entry["Pe_reest"] = cmp.reestimated.row.Pe;
                                entry["sic_chosen"] = to_string(cmp.chosen);
                                res = cmp.chosen == SicMode::InitialEstimates ? std::move(cmp.initial)
                                                                              : std::move(cmp.reestimated);
                            } else {
                                const Simulator sim = loaded ? Simulator(c, *loaded) : Simulator(c);
                                res = run_point(sim, trials, threads, topts);
                            }
                            entry["skipped"] = res.skipped;
                            entry["pe_ci"] = ci_json(res.pe_ci);
                            jp.push_back(entry);
                            *csv << to_csv(res.row) << '\n';
                            csv->flush();
                            write_trace(trace, res.row, res);
                            if (res.skipped > 0) std::cerr << res.skipped << " trial(s) skipped at Ka=" << ka << " M=" << m << '\n';
                        }
        }

        if (!out_path.empty()) {
            auto side = open_out(sidecar_path(out_path));
            side << sidecar.dump(2) << '\n';
            if (!side) throw IoError("failed writing sidecar");
        }
        if (!*csv) throw IoError("failed writing CSV");
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
