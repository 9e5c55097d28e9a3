// Run manifests, configuration parsing and output emission
//
// Configuration is resolved in three layers: built-in defaults, then a flat
// `key = value` file (--config), then command-line flags. Flags use the same
// names as file keys with '_' replaced by '-'.

#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qjwork/ensemble.hpp"
#include "qjwork/master_equation.hpp"
#include "qjwork/model.hpp"
#include "qjwork/renorm.hpp"
#include "qjwork/stats.hpp"

namespace qjwork::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

enum class Mode { populations, alphas, work_distribution, mixed_order, ift_check };

inline std::string_view mode_name(Mode m) {
    switch (m) {
    case Mode::populations: return "populations";
    case Mode::alphas: return "alphas";
    case Mode::work_distribution: return "work-distribution";
    case Mode::mixed_order: return "mixed-order";
    case Mode::ift_check: return "ift-check";
    }
    return "?";
}

inline Mode parse_mode(const std::string& s) {
    for (Mode m : {Mode::populations, Mode::alphas, Mode::work_distribution, Mode::mixed_order,
                   Mode::ift_check})
        if (s == mode_name(m)) return m;
    throw ConfigError("mode: unknown mode '" + s +
                      "' (expected populations, alphas, work-distribution, mixed-order or ift-check)");
}

struct RunManifest {
    SystemConfig config;
    Mode mode = Mode::work_distribution;
    fs::path out_dir = "out";
    int workers = 1;
    std::string config_hash;

    std::vector<int> orders{0, 1, 2};  // orders simulated by the per-order modes
    double bin_width = 0.01;           // in units of hbar omega0
    int alpha_points = 1001;
    std::int64_t pop_intervals = 100;
    std::int64_t me_steps_per_cycle = 100000;
    bool traj_populations = false;
    bool trajectory_log = false;
    JumpSampling sampling = JumpSampling::survival_threshold;
};

// ---------------------------------------------------------------------------
// Value parsing

using KeyValues = std::map<std::string, std::string>;

inline double parse_double(const std::string& key, const std::string& v) {
    double x = 0.0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc() || ptr != end) throw ConfigError(key + ": invalid number '" + v + "'");
    return x;
}

inline std::int64_t parse_int(const std::string& key, const std::string& v) {
    // accept 1e5-style values as long as they are exact integers
    const double x = parse_double(key, v);
    if (x != std::floor(x) || std::abs(x) > 9.0e15)
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return static_cast<std::int64_t>(x);
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "omega0",  "lambda0",       "omega_d",       "g_re",         "g_im",
        "mu",      "beta",          "T0",            "n_cycles",     "n_order",
        "n_steps", "n_traj",        "seed",          "mode",         "out_dir",
        "workers", "bin_width",     "alpha_points",  "pop_intervals", "me_steps_per_cycle",
        "sampling", "traj_populations", "trajectory_log"};
    return keys;
}

/// Reads a flat `key = value` file; '#' starts a comment.
inline KeyValues read_config_text(std::istream& in, const std::string& origin) {
    KeyValues kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string s = trim(line);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        const std::string where = origin + ":" + std::to_string(lineno);
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key = trim(std::string_view(s).substr(0, eq));
        const std::string value = trim(std::string_view(s).substr(eq + 1));
        if (!known_keys().count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
        if (value.empty()) throw ConfigError(key + ": missing value (" + where + ")");
        kv[key] = value;
    }
    return kv;
}

inline KeyValues read_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read '" + path.string() + "'");
    return read_config_text(in, path.string());
}

// ---------------------------------------------------------------------------
// Provenance hash

/// FNV-1a (64 bit) of the canonical parameter listing, as 16 hex digits.
inline std::string config_hash(const SystemConfig& c) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "omega0=%a;lambda0=%a;omega_d=%a;g_re=%a;g_im=%a;mu=%a;beta=%a;T0=%a;"
                  "n_cycles=%d;n_order=%d;n_steps=%lld;n_traj=%lld;seed=%llu",
                  c.omega0, c.lambda0, c.omega_d, c.g.real(), c.g.imag(), c.mu, c.beta, c.T0,
                  c.n_cycles, c.n_order, static_cast<long long>(c.n_steps),
                  static_cast<long long>(c.n_traj), static_cast<unsigned long long>(c.seed));
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const char* p = buf; *p; ++p) {
        h ^= static_cast<unsigned char>(*p);
        h *= 0x100000001b3ull;
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

/// Applies key/value settings on top of the defaults.
inline RunManifest resolve_manifest(const KeyValues& kv) {
    RunManifest m;
    SystemConfig& c = m.config;
    auto get = [&](const char* key) -> std::optional<std::string> {
        if (auto it = kv.find(key); it != kv.end()) return it->second;
        return std::nullopt;
    };
    for (const auto& [k, v] : kv)
        if (!known_keys().count(k)) throw ConfigError("unknown key '" + k + "'");

    if (auto v = get("omega0")) c.omega0 = parse_double("omega0", *v);
    if (auto v = get("lambda0")) c.lambda0 = parse_double("lambda0", *v);
    if (auto v = get("omega_d")) c.omega_d = parse_double("omega_d", *v);
    double g_re = c.g.real(), g_im = c.g.imag();
    if (auto v = get("g_re")) g_re = parse_double("g_re", *v);
    if (auto v = get("g_im")) g_im = parse_double("g_im", *v);
    c.g = cplx(g_re, g_im);
    if (auto v = get("mu")) c.mu = parse_double("mu", *v);
    if (auto v = get("beta")) c.beta = parse_double("beta", *v);
    // dephasing temperature defaults to twice the bath temperature
    c.T0 = 2.0 / c.beta;
    if (auto v = get("T0")) c.T0 = parse_double("T0", *v);
    if (auto v = get("n_cycles")) c.n_cycles = static_cast<int>(parse_int("n_cycles", *v));
    if (auto v = get("n_order")) {
        c.n_order = checked_order(static_cast<int>(parse_int("n_order", *v)));
        m.orders = {c.n_order};
    }
    if (auto v = get("n_steps")) c.n_steps = parse_int("n_steps", *v);
    if (auto v = get("n_traj")) c.n_traj = parse_int("n_traj", *v);
    if (auto v = get("seed")) {
        const auto s = parse_int("seed", *v);
        if (s < 0) throw ConfigError("seed: must be >= 0");
        c.seed = static_cast<std::uint64_t>(s);
    }
    if (auto v = get("mode")) m.mode = parse_mode(*v);
    if (auto v = get("out_dir")) m.out_dir = *v;
    if (auto v = get("workers")) m.workers = static_cast<int>(parse_int("workers", *v));
    if (auto v = get("bin_width")) m.bin_width = parse_double("bin_width", *v);
    if (auto v = get("alpha_points")) m.alpha_points = static_cast<int>(parse_int("alpha_points", *v));
    if (auto v = get("pop_intervals")) m.pop_intervals = parse_int("pop_intervals", *v);
    if (auto v = get("me_steps_per_cycle"))
        m.me_steps_per_cycle = parse_int("me_steps_per_cycle", *v);
    if (auto v = get("sampling")) {
        if (*v == "survival-threshold" || *v == "survival_threshold")
            m.sampling = JumpSampling::survival_threshold;
        else if (*v == "per-step" || *v == "per_step")
            m.sampling = JumpSampling::per_step;
        else
            throw ConfigError("sampling: expected survival-threshold or per-step, got '" + *v + "'");
    }
    if (auto v = get("traj_populations")) m.traj_populations = parse_bool("traj_populations", *v);
    if (auto v = get("trajectory_log")) m.trajectory_log = parse_bool("trajectory_log", *v);

    c.validate();
    if (m.workers < 1) throw ConfigError("workers: must be >= 1");
    if (!(m.bin_width > 0.0)) throw ConfigError("bin_width: must be > 0");
    if (m.alpha_points < 2) throw ConfigError("alpha_points: must be >= 2");
    if (m.pop_intervals < 1) throw ConfigError("pop_intervals: must be >= 1");
    if (m.me_steps_per_cycle < 1) throw ConfigError("me_steps_per_cycle: must be >= 1");
    if (m.traj_populations && c.n_steps % m.pop_intervals != 0)
        throw ConfigError("pop_intervals: must divide n_steps when trajectory populations are requested");
    if (m.mode == Mode::mixed_order) m.orders = {c.n_order};
    m.config_hash = config_hash(c);
    return m;
}

// ---------------------------------------------------------------------------
// Output helpers

inline std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

/// Files are written to a temporary name and renamed when complete. If the run
/// fails, everything committed so far is removed again.
class OutputSet {
public:
    explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw std::runtime_error("cannot create output directory '" + dir_.string() +
                                         "': " + ec.message());
    }
    OutputSet(const OutputSet&) = delete;
    OutputSet& operator=(const OutputSet&) = delete;

    ~OutputSet() {
        if (committed_all_) return;
        std::error_code ec;
        for (const auto& p : written_) fs::remove(p, ec);
    }

    void write(const std::string& name, const std::string& content) {
        const fs::path target = dir_ / name;
        const fs::path tmp = dir_ / (name + ".tmp");
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
            out << content;
            out.flush();
            if (!out) {
                std::error_code ec;
                fs::remove(tmp, ec);
                throw std::runtime_error("write failed for '" + tmp.string() + "'");
            }
        }
        std::error_code ec;
        fs::rename(tmp, target, ec);
        if (ec) {
            fs::remove(tmp, ec);
            throw std::runtime_error("cannot rename '" + tmp.string() + "' to '" + target.string() +
                                     "'");
        }
        written_.push_back(target);
        names_.push_back(name);
    }

    void keep() { committed_all_ = true; }
    const std::vector<std::string>& names() const { return names_; }

private:
    fs::path dir_;
    std::vector<fs::path> written_;
    std::vector<std::string> names_;
    bool committed_all_ = false;
};

inline json estimate_json(const Estimate& e) {
    return json{{"mean", e.mean}, {"sem", e.sem}, {"ci95", json::array({e.ci_low(), e.ci_high()})}};
}

inline json report_json(const FluctuationReport& r) {
    json j;
    j["dynamics_order"] = r.dynamics_order;
    j["work_order"] = r.work_order;
    j["n_traj"] = r.n_traj;
    j["mean_exp_minus_beta_W"] = estimate_json(r.jarzynski.mean_exp);
    j["jarzynski_deviation"] = {{"value", r.jarzynski.deviation},
                                {"sem", r.jarzynski.deviation_sem},
                                {"ci95", json::array({r.jarzynski.deviation -
                                                          kConfidenceZ * r.jarzynski.deviation_sem,
                                                      r.jarzynski.deviation +
                                                          kConfidenceZ * r.jarzynski.deviation_sem})}};
    j["mean_W"] = estimate_json(r.moments.first);
    j["mean_W2"] = estimate_json(r.moments.second);
    if (r.has_ift) j["mean_exp_minus_R"] = estimate_json(r.ift);
    return j;
}

inline json config_json(const RunManifest& m) {
    const SystemConfig& c = m.config;
    return json{{"omega0", c.omega0},   {"lambda0", c.lambda0},  {"omega_d", c.omega_d},
                {"g_re", c.g.real()},   {"g_im", c.g.imag()},    {"mu", c.mu},
                {"beta", c.beta},       {"T0", c.T0},            {"n_cycles", c.n_cycles},
                {"n_order", c.n_order}, {"n_steps", c.n_steps},  {"n_traj", c.n_traj},
                {"seed", c.seed},
                {"sampling", m.sampling == JumpSampling::per_step ? "per-step" : "survival-threshold"}};
}

/// Histogram table over the union of the bin ranges; orders without data get
/// empty cells.
inline std::string histogram_csv(const std::map<int, WorkHistogram>& hists, double omega0) {
    std::int64_t lo = 0, hi = -1;
    bool first = true;
    double width = 0.0;
    for (const auto& [n, h] : hists) {
        const std::int64_t a = h.first_bin;
        const std::int64_t b = h.first_bin + static_cast<std::int64_t>(h.counts.size()) - 1;
        lo = first ? a : std::min(lo, a);
        hi = first ? b : std::max(hi, b);
        width = h.bin_width;
        first = false;
    }
    std::string s = "W_over_hw0,density_n0,density_n1,density_n2\n";
    for (std::int64_t i = lo; i <= hi; ++i) {
        s += fmt(static_cast<double>(i) * width / omega0);
        for (int n = 0; n < 3; ++n) {
            s += ',';
            const auto it = hists.find(n);
            if (it == hists.end()) continue;
            const auto& h = it->second;
            const std::int64_t j = i - h.first_bin;
            s += (j >= 0 && j < static_cast<std::int64_t>(h.density.size()))
                     ? fmt(h.density[static_cast<std::size_t>(j)])
                     : std::string("0");
        }
        s += '\n';
    }
    return s;
}

inline std::string trajectory_log(const std::vector<const EnsembleResult*>& results) {
    std::ostringstream o;
    o << "# T,order,traj_index,k_init,l_final,E_init,E_final\n"
      << "# J,order,traj_index,t_j,channel,omega01_n,gamma_fwd,gamma_rev\n";
    for (const EnsembleResult* r : results) {
        for (const auto& rec : r->records) {
            o << "T," << rec.order << ',' << rec.index << ',' << rec.k_init << ',' << rec.l_final
              << ',' << fmt(rec.E_init) << ',' << fmt(rec.E_final) << '\n';
            for (const auto& e : rec.events)
                o << "J," << rec.order << ',' << rec.index << ',' << fmt(e.t) << ',' << e.channel
                  << ',' << fmt(e.omega01_n) << ',' << fmt(e.gamma_forward) << ','
                  << fmt(e.gamma_reversed) << '\n';
        }
    }
    return o.str();
}

// ---------------------------------------------------------------------------
// Run

struct RunOutcome {
    json summary;
    std::vector<std::string> warnings;
    std::int64_t trajectories = 0;
};

inline EnsembleOptions ensemble_options(const RunManifest& m, std::vector<int> work_orders) {
    EnsembleOptions o;
    o.workers = m.workers;
    o.engine.sampling = m.sampling;
    o.work_orders = std::move(work_orders);
    o.keep_records = m.trajectory_log;
    return o;
}

inline void run_alphas(const RunManifest& m, OutputSet& out, RunOutcome& res) {
    const auto samples = alpha_cycle(m.config, m.alpha_points);
    std::string csv = "t_over_Tdrive,alpha1,alpha2\n";
    double max1 = 0.0, max2 = 0.0;
    std::int64_t below = 0;
    for (const auto& s : samples) {
        csv += fmt(s.t_over_Tdrive) + ',' + fmt(s.alpha1) + ',' + fmt(s.alpha2) + '\n';
        max1 = std::max(max1, s.alpha1);
        max2 = std::max(max2, s.alpha2);
        below += s.alpha2 < s.alpha1;
    }
    out.write("alphas.csv", csv);
    res.summary["alphas"] = {{"points", samples.size()},
                             {"max_alpha1", max1},
                             {"max_alpha2", max2},
                             {"points_alpha2_below_alpha1", below}};
}

inline void run_populations(const RunManifest& m, OutputSet& out, RunOutcome& res) {
    const SystemConfig& c = m.config;
    IntegrationOptions io;
    io.steps_per_cycle = m.me_steps_per_cycle;
    io.output_intervals = m.pop_intervals;
    std::map<int, PopulationSeries> me;
    for (int n : m.orders) {
        me[n] = integrate_populations(c, n, io);
        for (const auto& w : me[n].warnings) res.warnings.push_back(w);
    }
    const auto& any = me.begin()->second;
    std::string csv = "t_over_Tdrive,rho_ee_n0,rho_ee_n1,rho_ee_n2\n";
    for (std::size_t i = 0; i < any.t.size(); ++i) {
        csv += fmt(any.t[i] / c.drive_period());
        for (int n = 0; n < 3; ++n) {
            csv += ',';
            if (auto it = me.find(n); it != me.end()) csv += fmt(it->second.rho_ee[i]);
        }
        csv += '\n';
    }
    out.write("populations.csv", csv);

    json j = json::array();
    if (m.traj_populations) {
        std::map<int, EnsembleResult> traj;
        for (int n : m.orders) {
            EnsembleOptions o = ensemble_options(m, {n});
            o.engine.population_intervals = m.pop_intervals;
            traj[n] = run_ensemble(c, n, o);
            res.trajectories += c.n_traj;
        }
        std::string tcsv = "t_over_Tdrive,rho_ee_n0,sem_n0,rho_ee_n1,sem_n1,rho_ee_n2,sem_n2\n";
        const auto& t0 = traj.begin()->second;
        for (std::size_t i = 0; i < t0.pop_t.size(); ++i) {
            tcsv += fmt(t0.pop_t[i] / c.drive_period());
            for (int n = 0; n < 3; ++n) {
                if (auto it = traj.find(n); it != traj.end())
                    tcsv += ',' + fmt(it->second.pop_mean[i]) + ',' + fmt(it->second.pop_sem[i]);
                else
                    tcsv += ",,";
            }
            tcsv += '\n';
        }
        out.write("populations_traj.csv", tcsv);
        for (const auto& [n, r] : traj) {
            double max_dev = 0.0, max_ratio = 0.0;
            for (std::size_t i = 0; i < r.pop_mean.size(); ++i) {
                const double d = std::abs(r.pop_mean[i] - me[n].rho_ee[i]);
                max_dev = std::max(max_dev, d);
                if (r.pop_sem[i] > 0.0) max_ratio = std::max(max_ratio, d / r.pop_sem[i]);
            }
            j.push_back({{"order", n}, {"max_abs_deviation", max_dev}, {"max_deviation_over_sem", max_ratio}});
        }
    }
    json orders = json::array();
    for (const auto& [n, s] : me)
        orders.push_back({{"order", n}, {"rho_ee_final", s.rho_ee.back()}});
    res.summary["master_equation"] = orders;
    if (m.traj_populations) res.summary["trajectory_vs_master_equation"] = j;
}

inline void run_ensembles(const RunManifest& m, OutputSet& out, RunOutcome& res) {
    const SystemConfig& c = m.config;
    const bool mixed = m.mode == Mode::mixed_order;
    std::vector<EnsembleResult> results;
    std::map<int, WorkHistogram> hists;
    json reports = json::array();
    for (int n : m.orders) {
        EnsembleOptions o = ensemble_options(m, mixed ? std::vector<int>{0, 1, 2} : std::vector<int>{n});
        results.push_back(run_ensemble(c, n, o));
        res.trajectories += c.n_traj;
        const EnsembleResult& r = results.back();
        for (const auto& [np, samples] : r.work) {
            const WorkEnsemble e = r.work_ensemble(np);
            const bool consistent = np == n;
            const FluctuationReport rep =
                fluctuation_report(e, c, consistent ? std::span<const double>(r.entropy)
                                                    : std::span<const double>());
            json jr = report_json(rep);
            if (consistent) {
                jr["max_identity_residual"] = r.max_identity_residual;
                jr["infinite_entropy_count"] = r.infinite_entropy;
                jr["mean_jumps"] = static_cast<double>(r.total_jumps) / static_cast<double>(r.n_traj);
            }
            reports.push_back(std::move(jr));
            if (m.mode != Mode::ift_check) hists[mixed ? np : n] = histogram(e, m.bin_width * c.omega0);
        }
    }
    res.summary["delta_F"] = free_energy_difference(c, c.t_init(), c.t_final());
    res.summary["reports"] = reports;
    if (m.mode != Mode::ift_check) {
        res.summary["histogram_bin_width"] = m.bin_width;
        out.write("work_hist.csv", histogram_csv(hists, c.omega0));
    }
    if (m.trajectory_log) {
        std::vector<const EnsembleResult*> ptrs;
        for (const auto& r : results) ptrs.push_back(&r);
        out.write("trajectories.log", trajectory_log(ptrs));
    }
}

/// Executes the manifest and writes summary.json plus metadata.json next to
/// the mode-specific outputs. summary.json contains no timing or scheduling
/// information, so it is byte-identical for any worker count.
inline RunOutcome run(const RunManifest& m) {
    const auto t0 = std::chrono::steady_clock::now();
    OutputSet out(m.out_dir);
    RunOutcome res;
    res.warnings = m.config.warnings();
    res.summary["mode"] = std::string(mode_name(m.mode));
    res.summary["config_hash"] = m.config_hash;
    res.summary["config"] = config_json(m);
    json orders = json::array();
    for (int n : m.orders) orders.push_back(n);
    res.summary["orders"] = orders;

    switch (m.mode) {
    case Mode::alphas: run_alphas(m, out, res); break;
    case Mode::populations: run_populations(m, out, res); break;
    default: run_ensembles(m, out, res); break;
    }

    out.write("summary.json", res.summary.dump(2) + "\n");
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json meta;
    meta["config_hash"] = m.config_hash;
    meta["seed"] = m.config.seed;
    meta["mode"] = std::string(mode_name(m.mode));
    meta["trajectory_count"] = res.trajectories;
    meta["workers"] = m.workers;
    meta["wall_time_s"] = wall;
    meta["warnings"] = res.warnings;
    std::vector<std::string> files = out.names();
    files.push_back("metadata.json");
    meta["outputs"] = files;
    out.write("metadata.json", meta.dump(2) + "\n");
    out.keep();
    return res;
}

// ---------------------------------------------------------------------------
// Command line

/// Builds the merged key/value layer from --config and the flags. Returns
/// std::nullopt when CLI11 handled the invocation (e.g. --help); `exit_code`
/// then holds the status to return.
inline std::optional<KeyValues> parse_command_line(int argc, const char* const* argv,
                                                   int& exit_code) {
    CLI::App app{"Quantum-jump work statistics for a driven dissipative two-level system"};
    app.option_defaults()->always_capture_default(false);
    std::string config_path;
    app.add_option("--config", config_path, "flat key = value configuration file");

    struct Flag {
        std::string key;
        std::string value;
        CLI::Option* opt = nullptr;
    };
    std::vector<Flag> flags;
    const std::vector<std::pair<std::string, std::string>> value_flags{
        {"mode", "populations | alphas | work-distribution | mixed-order | ift-check"},
        {"n_order", "renormalization order 0, 1 or 2 (dynamics order in mixed-order mode)"},
        {"n_traj", "number of trajectories per ensemble"},
        {"n_steps", "time steps per trajectory"},
        {"n_cycles", "number of drive cycles"},
        {"seed", "random seed"},
        {"out_dir", "output directory"},
        {"workers", "worker threads"},
        {"omega0", "resonance angular frequency"},
        {"lambda0", "drive amplitude"},
        {"omega_d", "drive angular frequency"},
        {"g_re", "coupling strength, real part"},
        {"g_im", "coupling strength, imaginary part"},
        {"mu", "damping constant"},
        {"beta", "inverse bath temperature"},
        {"T0", "dephasing temperature (default 2/beta)"},
        {"bin_width", "histogram bin width in units of hbar omega0"},
        {"alpha_points", "samples per cycle in alphas mode"},
        {"pop_intervals", "population output intervals over the whole run"},
        {"me_steps_per_cycle", "master-equation RK4 steps per drive cycle"},
        {"sampling", "jump sampling: survival-threshold | per-step"}};
    flags.reserve(value_flags.size() + 2);
    for (const auto& [key, help] : value_flags) {
        flags.push_back({key, {}, nullptr});
        std::string name = "--" + key;
        std::replace(name.begin(), name.end(), '_', '-');
        flags.back().opt = app.add_option(name, flags.back().value, help);
    }
    bool traj_pop = false, traj_log = false;
    auto* traj_pop_opt =
        app.add_flag("--traj-populations", traj_pop, "also average rho_ee over trajectories");
    auto* traj_log_opt =
        app.add_flag("--trajectory-log", traj_log, "write per-jump trajectories.log");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        exit_code = app.exit(e);
        return std::nullopt;
    }

    KeyValues kv;
    if (!config_path.empty()) kv = read_config_file(config_path);
    for (const auto& f : flags)
        if (f.opt->count() > 0) kv[f.key] = f.value;
    if (traj_pop_opt->count() > 0) kv["traj_populations"] = traj_pop ? "true" : "false";
    if (traj_log_opt->count() > 0) kv["trajectory_log"] = traj_log ? "true" : "false";
    return kv;
}

inline int main(int argc, const char* const* argv) {
    RunManifest manifest;
    try {
        int code = 0;
        const auto kv = parse_command_line(argc, argv, code);
        if (!kv) return code;
        manifest = resolve_manifest(*kv);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    try {
        const RunOutcome res = run(manifest);
        for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
        std::cout << "wrote " << (manifest.out_dir / "summary.json").string() << " (config "
                  << manifest.config_hash << ")\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace qjwork::cli
