// Command-line front end for the minimax sequential Poisson test pipeline.
//
// Subcommands: solve, fode, gamma, h, find-lfd, jbar, simulate, detect.
// Configuration comes from a JSON file (--config) with flag overrides;
// reports are JSON on stdout, curves are CSV files in the output directory.
// Exit codes: 0 success, 1 runtime/solver failure, 2 configuration error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "seqtest/boundary.hpp"
#include "seqtest/detector.hpp"
#include "seqtest/fode.hpp"
#include "seqtest/lfd.hpp"
#include "seqtest/model.hpp"
#include "seqtest/pathsim.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace seqtest;

namespace {

struct RunConfig {
    double lambda0 = 1.0;
    double lambda1 = 5.0;
    double a = 2.0;
    double b = 2.0;
    std::uint64_t seed = 20240901;
    std::int64_t n_paths = 1'000'000;
    std::int64_t saddle_paths = 100'000;
    int threads = 0;
    DpConfig dp;
    std::int64_t fode_steps = 100'000;
    double phi_tol = 1e-3;
    double psi_grid_min = 0.0;  // 0 -> alpha*/4
    double psi_grid_max = 0.0;  // 0 -> 4*beta*
    int psi_grid_count = 50;
    std::string output_dir = ".";
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

template <class T>
void read_field(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(key, std::string("invalid value for field '") + key + "'");
    }
}

RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config", std::string("config parse error: ") + e.what());
    }
    read_field(j, "lambda0", cfg.lambda0);
    read_field(j, "lambda1", cfg.lambda1);
    read_field(j, "a", cfg.a);
    read_field(j, "b", cfg.b);
    read_field(j, "seed", cfg.seed);
    read_field(j, "n_paths", cfg.n_paths);
    read_field(j, "saddle_paths", cfg.saddle_paths);
    read_field(j, "threads", cfg.threads);
    read_field(j, "fode_steps", cfg.fode_steps);
    read_field(j, "phi_tol", cfg.phi_tol);
    read_field(j, "output_dir", cfg.output_dir);
    if (j.contains("dp")) {
        const json& d = j.at("dp");
        read_field(d, "grid_points", cfg.dp.grid_points);
        read_field(d, "phi_min", cfg.dp.phi_min);
        read_field(d, "phi_max", cfg.dp.phi_max);
        read_field(d, "dt", cfg.dp.dt);
        read_field(d, "tol", cfg.dp.tol);
        read_field(d, "max_iters", cfg.dp.max_iters);
        read_field(d, "contact_tol", cfg.dp.contact_tol);
    }
    if (j.contains("psi_grid")) {
        const json& p = j.at("psi_grid");
        read_field(p, "min", cfg.psi_grid_min);
        read_field(p, "max", cfg.psi_grid_max);
        read_field(p, "count", cfg.psi_grid_count);
    }
    return cfg;
}

void validate(const RunConfig& cfg) {
    if (!(cfg.lambda0 > 0.0)) throw ConfigError("lambda0", "lambda0 must be > 0");
    if (!(cfg.lambda1 > cfg.lambda0))
        throw ConfigError("lambda1", "lambda1 must be > lambda0");
    if (!(cfg.a > 0.0)) throw ConfigError("a", "a must be > 0");
    if (!(cfg.b > 0.0)) throw ConfigError("b", "b must be > 0");
    if (cfg.n_paths < 1) throw ConfigError("n_paths", "n_paths must be >= 1");
    if (cfg.saddle_paths < 1)
        throw ConfigError("saddle_paths", "saddle_paths must be >= 1");
    if (cfg.dp.grid_points < 2)
        throw ConfigError("dp.grid_points", "dp.grid_points must be >= 2");
    if (!(cfg.dp.tol > 0.0)) throw ConfigError("dp.tol", "dp.tol must be > 0");
    if (cfg.fode_steps < 4) throw ConfigError("fode_steps", "fode_steps must be >= 4");
    if (!(cfg.phi_tol > 0.0)) throw ConfigError("phi_tol", "phi_tol must be > 0");
    if (cfg.psi_grid_count < 2)
        throw ConfigError("psi_grid.count", "psi_grid.count must be >= 2");
}

json config_echo(const RunConfig& cfg) {
    json j;
    j["lambda0"] = cfg.lambda0;
    j["lambda1"] = cfg.lambda1;
    j["a"] = cfg.a;
    j["b"] = cfg.b;
    j["seed"] = cfg.seed;
    j["n_paths"] = cfg.n_paths;
    j["saddle_paths"] = cfg.saddle_paths;
    j["threads"] = cfg.threads;
    j["dp"] = {{"grid_points", cfg.dp.grid_points}, {"phi_min", cfg.dp.phi_min},
               {"phi_max", cfg.dp.phi_max},         {"dt", cfg.dp.dt},
               {"tol", cfg.dp.tol},                 {"max_iters", cfg.dp.max_iters},
               {"contact_tol", cfg.dp.contact_tol}};
    j["fode_steps"] = cfg.fode_steps;
    j["phi_tol"] = cfg.phi_tol;
    j["psi_grid"] = {{"min", cfg.psi_grid_min},
                     {"max", cfg.psi_grid_max},
                     {"count", cfg.psi_grid_count}};
    j["output_dir"] = cfg.output_dir;
    return j;
}

json num_or_null(double x) {
    if (std::isnan(x)) return nullptr;
    return x;
}

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

Model make_model(const RunConfig& cfg) { return Model(cfg.lambda0, cfg.lambda1); }
Costs make_costs(const RunConfig& cfg) { return Costs(cfg.a, cfg.b); }

Boundaries solve_boundaries(const RunConfig& cfg) {
    const ValueGrid grid = solve_value(make_model(cfg), make_costs(cfg), cfg.dp);
    return extract_boundaries(grid, cfg.dp.contact_tol);
}

LfdConfig lfd_config(const RunConfig& cfg) {
    LfdConfig lc;
    lc.seed = cfg.seed;
    lc.n_paths = cfg.n_paths;
    lc.saddle_paths = cfg.saddle_paths;
    lc.phi_tol = cfg.phi_tol;
    lc.saddle_points = cfg.psi_grid_count;
    lc.dp = cfg.dp;
    lc.fode.steps = cfg.fode_steps;
    lc.threads = cfg.threads;
    return lc;
}

void write_file(const fs::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << contents;
}

int cmd_solve(const RunConfig& cfg) {
    const Model m = make_model(cfg);
    const Costs c = make_costs(cfg);
    json out;
    if (classify_regime(m, c) == Regime::Trivial) {
        out["regime"] = "Trivial";
        out["alpha_star"] = nullptr;
        out["beta_star"] = nullptr;
        out["ratio"] = nullptr;
        out["lfd"] = c.threshold();
    } else {
        const Boundaries bd = solve_boundaries(cfg);
        out["regime"] = "NonTrivial";
        out["alpha_star"] = bd.alpha_star;
        out["beta_star"] = bd.beta_star;
        out["ratio"] = bd.ratio();
    }
    out["config_echo"] = config_echo(cfg);
    emit(out);
    return 0;
}

int cmd_fode(const RunConfig& cfg) {
    const Model m = make_model(cfg);
    const Costs c = make_costs(cfg);
    if (classify_regime(m, c) == Regime::Trivial)
        throw std::runtime_error("fode: trivial regime has no boundary ratio");
    const Boundaries bd = solve_boundaries(cfg);
    const FodeSolution sol = solve_fode(m, c, bd.ratio(), {cfg.fode_steps});
    std::ostringstream csv;
    write_fode_csv(csv, sol);
    write_file(fs::path(cfg.output_dir) / "fode.csv", csv.str());
    json out;
    out["gamma_star"] = sol.gamma_star;
    out["ratio"] = bd.ratio();
    out["alpha_star"] = bd.alpha_star;
    out["beta_star"] = bd.beta_star;
    out["csv"] = (fs::path(cfg.output_dir) / "fode.csv").string();
    out["config_echo"] = config_echo(cfg);
    emit(out);
    return 0;
}

int cmd_gamma(const RunConfig& cfg) {
    const Model m = make_model(cfg);
    const Costs c = make_costs(cfg);
    if (classify_regime(m, c) == Regime::Trivial)
        throw std::runtime_error("gamma: trivial regime has no boundary ratio");
    const Boundaries bd = solve_boundaries(cfg);
    const FodeSolution sol = solve_fode(m, c, bd.ratio(), {cfg.fode_steps});
    const GammaEstimate mc =
        gamma_mc(m, c, bd.ratio(), cfg.n_paths, cfg.seed, cfg.threads);
    json out;
    out["ratio"] = bd.ratio();
    out["gamma_mc"] = mc.value;
    out["gamma_mc_se"] = mc.se;
    out["gamma_fode"] = sol.gamma_star;
    out["n_paths"] = cfg.n_paths;
    out["config_echo"] = config_echo(cfg);
    emit(out);
    return 0;
}

int cmd_h(const RunConfig& cfg, double phi0) {
    const Model m = make_model(cfg);
    const Costs c = make_costs(cfg);
    if (classify_regime(m, c) == Regime::Trivial)
        throw std::runtime_error("h: trivial regime has no continuation region");
    const Boundaries bd = solve_boundaries(cfg);
    const HEstimate est =
        estimate_h(m, c, bd, phi0, cfg.n_paths, cfg.seed, cfg.threads);
    json out;
    out["phi0"] = est.phi0;
    out["h"] = est.h;
    out["se"] = est.se;
    out["p_lower"] = est.p_lower;
    out["mean_int"] = est.mean_int;
    out["n_paths"] = est.n_paths;
    out["alpha_star"] = bd.alpha_star;
    out["beta_star"] = bd.beta_star;
    out["config_echo"] = config_echo(cfg);
    emit(out);
    return 0;
}

json h_estimate_json(const HEstimate& e) {
    return json{{"phi0", e.phi0},       {"h", e.h},
                {"se", e.se},           {"p_lower", e.p_lower},
                {"mean_int", e.mean_int}, {"n_paths", e.n_paths}};
}

int cmd_find_lfd(const RunConfig& cfg) {
    const Model m = make_model(cfg);
    const Costs c = make_costs(cfg);
    const LfdReport rep = find_lfd(m, c, lfd_config(cfg));

    json out;
    out["regime"] = rep.regime == Regime::Trivial ? "Trivial" : "NonTrivial";
    if (rep.boundaries) {
        out["alpha_star"] = rep.boundaries->alpha_star;
        out["beta_star"] = rep.boundaries->beta_star;
        out["ratio"] = rep.boundaries->ratio();
    } else {
        out["alpha_star"] = nullptr;
        out["beta_star"] = nullptr;
        out["ratio"] = nullptr;
    }
    out["gamma_fode"] = rep.boundaries ? json(rep.gamma_fode) : json(nullptr);
    out["gamma_mc"] = rep.boundaries ? json(rep.gamma_mc.value) : json(nullptr);
    out["gamma_mc_se"] = rep.boundaries ? json(rep.gamma_mc.se) : json(nullptr);
    out["existence_flagged"] = rep.existence_flagged;
    if (rep.existence_flagged)
        out["note"] = "gamma* >= 0: existence not guaranteed by the sufficient "
                      "condition; no root claimed";
    out["phi0"] = num_or_null(rep.phi0);
    if (rep.boundaries && !rep.existence_flagged) {
        out["stopping_interval_l"] = {rep.boundaries->alpha_star / rep.phi0,
                                      rep.boundaries->beta_star / rep.phi0};
        out["h_at_phi0"] = h_estimate_json(rep.h_at_phi0);
        out["bracket"] = {rep.bracket_lo, rep.bracket_hi};
        json scan = json::array();
        for (std::size_t i = 1; i < rep.prescan.size(); ++i) {
            if ((rep.prescan[i - 1].h > 0.0) != (rep.prescan[i].h > 0.0))
                scan.push_back({rep.prescan[i - 1].phi0, rep.prescan[i].phi0});
        }
        out["prescan_sign_changes"] = scan;
        json evals = json::array();
        for (const HEstimate& e : rep.evaluations) evals.push_back(h_estimate_json(e));
        out["evaluations"] = evals;
    }
    out["config_echo"] = config_echo(cfg);

    std::ostringstream csv;
    write_saddle_csv(csv, rep.saddle_curve);
    write_file(fs::path(cfg.output_dir) / "saddle.csv", csv.str());
    out["saddle_csv"] = (fs::path(cfg.output_dir) / "saddle.csv").string();
    emit(out);
    return 0;
}

int cmd_jbar(const RunConfig& cfg, double phi0, double psi) {
    const Model m = make_model(cfg);
    const Costs c = make_costs(cfg);
    json out;
    if (classify_regime(m, c) == Regime::Trivial) {
        out["jbar"] = jbar_at_zero(c, psi);
        out["se"] = 0.0;
        out["tau"] = "zero";
    } else {
        const Boundaries bd = solve_boundaries(cfg);
        const JbarEstimate est =
            estimate_jbar(m, c, bd, phi0, psi, cfg.n_paths, cfg.seed, cfg.threads);
        out["jbar"] = est.value;
        out["se"] = est.se;
        out["phi0"] = phi0;
    }
    out["psi"] = psi;
    out["config_echo"] = config_echo(cfg);
    emit(out);
    return 0;
}

int cmd_simulate(const RunConfig& cfg, double phi0, bool dump_paths) {
    const Model m = make_model(cfg);
    const Costs c = make_costs(cfg);
    if (classify_regime(m, c) == Regime::Trivial)
        throw std::runtime_error("simulate: trivial regime has no continuation region");
    const Boundaries bd = solve_boundaries(cfg);
    const Interval iv(bd.alpha_star / phi0, bd.beta_star / phi0, false);
    const auto records =
        collect_exits(m, iv, 1.0, cfg.n_paths, cfg.seed, cfg.threads);
    const ExitFunctionals f = reduce_exit_functionals(records);
    json out;
    out["phi0"] = phi0;
    out["interval_l"] = {iv.lower, iv.upper};
    out["p_lower"] = f.p_lower;
    out["p_lower_se"] = f.se_p_lower;
    out["mean_int_l_minus_1"] = f.mean_int_l_minus_1;
    out["mean_int_l_minus_1_se"] = f.se_int_l_minus_1;
    out["mean_tau"] = f.mean_tau;
    out["mean_tau_se"] = f.se_tau;
    out["n_paths"] = f.n_paths;
    if (dump_paths) {
        std::ostringstream csv;
        write_paths_csv(csv, records);
        write_file(fs::path(cfg.output_dir) / "paths.csv", csv.str());
        out["paths_csv"] = (fs::path(cfg.output_dir) / "paths.csv").string();
    }
    out["config_echo"] = config_echo(cfg);
    emit(out);
    return 0;
}

std::vector<double> read_stream(const std::string& path) {
    std::vector<double> events;
    auto parse = [&](std::istream& in) {
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::size_t pos = 0;
            const double t = std::stod(line, &pos);
            events.push_back(t);
        }
    };
    if (path == "-") {
        parse(std::cin);
    } else {
        std::ifstream in(path);
        if (!in) throw ConfigError("stream", "cannot open stream file: " + path);
        parse(in);
    }
    return events;
}

int cmd_detect(const RunConfig& cfg, const std::string& stream_path, double psi,
               std::optional<double> horizon) {
    const Model m = make_model(cfg);
    const Costs c = make_costs(cfg);
    if (classify_regime(m, c) == Regime::Trivial)
        throw std::runtime_error("detect: trivial regime stops immediately");
    const Boundaries bd = solve_boundaries(cfg);
    const std::vector<double> events = read_stream(stream_path);
    // The observation record ends at the last event unless a horizon is given.
    const double end = horizon ? *horizon : (events.empty() ? 0.0 : events.back());
    const DetectionOutcome out =
        detect(m, bd, PriorOdds(psi), events, end);
    json j;
    j["stopped_at"] = out.stopped_at;
    j["decision"] = out.decision == Decision::AcceptH0 ? "H0" : "H1";
    j["psi"] = out.psi_at_stop;
    j["events_consumed"] = out.events_consumed;
    j["exit_side"] = out.exit_side == ExitSide::Lower ? "lower" : "upper";
    j["stopped_at_start"] = out.stopped_at_start;
    j["config_echo"] = config_echo(cfg);
    emit(j);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Minimax sequential test for the intensity of a Poisson process"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand name

    std::string config_path;
    app.add_option("--config", config_path, "JSON configuration file");

    // Overrides shared by the subcommands.
    std::optional<std::uint64_t> seed_flag;
    std::optional<std::int64_t> paths_flag;
    std::optional<std::string> out_flag;
    app.add_option("--seed", seed_flag, "RNG seed override");
    app.add_option("--paths", paths_flag, "Monte Carlo path count override");
    app.add_option("--out", out_flag, "output directory override");

    double phi0 = 1.0;
    double psi = 1.0;
    std::string stream_path = "-";
    std::optional<double> horizon;
    bool dump_paths = false;

    CLI::App* solve = app.add_subcommand("solve", "optimal stopping boundaries");
    CLI::App* fode = app.add_subcommand("fode", "advanced-argument ODE solutions");
    CLI::App* gamma = app.add_subcommand("gamma", "gamma* by Monte Carlo and ODE");
    CLI::App* hcmd = app.add_subcommand("h", "criticality function estimate");
    hcmd->add_option("--phi0", phi0, "evaluation point");
    CLI::App* findlfd =
        app.add_subcommand("find-lfd", "full least-favorable-distribution search");
    CLI::App* jbar = app.add_subcommand("jbar", "Bayes risk estimate");
    jbar->add_option("--phi0", phi0, "stopping-rule prior odds");
    jbar->add_option("--psi", psi, "evaluation prior odds");
    CLI::App* simulate = app.add_subcommand("simulate", "exit functionals");
    simulate->add_option("--phi0", phi0, "stopping-rule prior odds");
    simulate->add_flag("--dump-paths", dump_paths, "write paths.csv");
    CLI::App* detect_cmd = app.add_subcommand("detect", "run the test on a stream");
    detect_cmd->add_option("--stream", stream_path,
                           "newline-delimited timestamps, or - for stdin");
    detect_cmd->add_option("--psi", psi, "prior odds");
    detect_cmd->add_option("--horizon", horizon,
                           "observation end time (default: last event)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        RunConfig cfg = load_config(config_path);
        if (seed_flag) cfg.seed = *seed_flag;
        if (paths_flag) cfg.n_paths = *paths_flag;
        if (out_flag) cfg.output_dir = *out_flag;
        try {
            validate(cfg);
        } catch (const ConfigError&) {
            throw;
        }

        if (solve->parsed()) return cmd_solve(cfg);
        if (fode->parsed()) return cmd_fode(cfg);
        if (gamma->parsed()) return cmd_gamma(cfg);
        if (hcmd->parsed()) return cmd_h(cfg, phi0);
        if (findlfd->parsed()) return cmd_find_lfd(cfg);
        if (jbar->parsed()) return cmd_jbar(cfg, phi0, psi);
        if (simulate->parsed()) return cmd_simulate(cfg, phi0, dump_paths);
        if (detect_cmd->parsed()) return cmd_detect(cfg, stream_path, psi, horizon);
        return 2;
    } catch (const ConfigError& e) {
        json err;
        err["error"] = {{"message", e.what()}, {"field", e.field()}};
        emit(err);
        return 2;
    } catch (const std::invalid_argument& e) {
        json err;
        err["error"] = {{"message", e.what()}};
        emit(err);
        return 2;
    } catch (const std::exception& e) {
        json err;
        err["error"] = {{"message", e.what()}};
        emit(err);
        return 1;
    }
}
