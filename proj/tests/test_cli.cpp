// End-to-end checks of the command-line interface. Invoked with the CLI
// binary path as argv[1]; exercises exit statuses, JSON report schemas, and
// CSV artifacts using a fast solver configuration.

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "json.hpp"

using json = nlohmann::json;

namespace {

int g_failures = 0;

#define EXPECT(cond)                                                     \
    do {                                                                 \
        if (!(cond)) {                                                   \
            ++g_failures;                                                \
            std::cerr << "FAILED: " << #cond << " at " << __FILE__ << ":" \
                      << __LINE__ << "\n";                               \
        }                                                                \
    } while (0)

struct RunResult {
    int status = -1;
    std::string out;
};

RunResult run(const std::string& cmd) {
    RunResult r;
    FILE* p = popen((cmd + " 2>/dev/null").c_str(), "r");
    if (!p) return r;
    char buf[4096];
    std::size_t k;
    while ((k = fread(buf, 1, sizeof(buf), p)) > 0) r.out.append(buf, k);
    const int rc = pclose(p);
    r.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return r;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    f << text;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Coarse-but-fast solver settings: the DP time step is aligned with the
// grid so the boundary lands within ~1e-3 of the full-resolution value.
const char* kFastDp = R"({"dp": {"grid_points": 801, "dt": 0.000144}})";

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: test_cli <path-to-cli>\n";
        return 1;
    }
    const std::string cli = argv[1];
    const std::string dir = "cli_test_tmp";
    if (std::system(("rm -rf " + dir + " && mkdir -p " + dir).c_str()) != 0) {
        std::cerr << "test_cli: cannot prepare temp dir\n";
        return 1;
    }
    const std::string cfg = dir + "/fast.json";
    write_file(cfg, kFastDp);

    {  // solve: report schema and expected boundary values
        const RunResult r = run(cli + " solve --config " + cfg);
        EXPECT(r.status == 0);
        const json j = json::parse(r.out);
        EXPECT(j["regime"] == "NonTrivial");
        EXPECT(j["alpha_star"].get<double>() > 0.28);
        EXPECT(j["alpha_star"].get<double>() < 0.31);
        EXPECT(j["beta_star"].get<double>() > 2.35);
        EXPECT(j["beta_star"].get<double>() < 2.43);
        EXPECT(j["ratio"].get<double>() ==
               j["alpha_star"].get<double>() / j["beta_star"].get<double>());
        EXPECT(j.contains("config_echo"));
        EXPECT(j["config_echo"]["dp"]["grid_points"] == 801);
    }

    {  // solve: trivial regime
        const std::string tcfg = dir + "/trivial.json";
        write_file(tcfg, R"({"lambda1": 1.5, "a": 2.0, "b": 3.0})");
        const RunResult r = run(cli + " solve --config " + tcfg);
        EXPECT(r.status == 0);
        const json j = json::parse(r.out);
        EXPECT(j["regime"] == "Trivial");
        EXPECT(j["alpha_star"].is_null());
        EXPECT(j["beta_star"].is_null());
        EXPECT(j["lfd"] == 1.5);
    }

    {  // malformed config: exit 2 and an error object naming the field
        const std::string bad = dir + "/bad.json";
        write_file(bad, R"({"lambda0": 2.0, "lambda1": 1.0})");
        const RunResult r = run(cli + " solve --config " + bad);
        EXPECT(r.status == 2);
        const json j = json::parse(r.out);
        EXPECT(j["error"]["field"] == "lambda1");

        write_file(bad, "{ not json");
        EXPECT(run(cli + " solve --config " + bad).status == 2);
    }

    {  // detect: empty stream is undecided -> exit 1
        const RunResult r =
            run("true | " + cli + " detect --config " + cfg + " --stream -");
        EXPECT(r.status == 1);
        const json j = json::parse(r.out);
        EXPECT(j["error"]["message"].get<std::string>().find("undecided") !=
               std::string::npos);
    }

    {  // detect: a burst of early events decides H1 at the last needed event
        const std::string ev = dir + "/events.txt";
        write_file(ev, "0.01\n0.02\n");
        const RunResult r = run(cli + " detect --config " + cfg + " --stream " +
                                ev + " --psi 1.0");
        EXPECT(r.status == 0);
        const json j = json::parse(r.out);
        EXPECT(j["decision"] == "H1");
        EXPECT(j["stopped_at"] == 0.01);
        EXPECT(j["events_consumed"] == 1);
    }

    {  // detect: silence before a late event hits the lower boundary first
        const std::string ev = dir + "/late.txt";
        write_file(ev, "5.0\n");
        const RunResult r = run(cli + " detect --config " + cfg + " --stream " +
                                ev + " --psi 1.0");
        EXPECT(r.status == 0);
        const json j = json::parse(r.out);
        EXPECT(j["decision"] == "H0");
        EXPECT(j["stopped_at"].get<double>() < 0.4);
        EXPECT(j["events_consumed"] == 0);
        EXPECT(j["exit_side"] == "lower");
    }

    {  // fode: CSV artifact obeys the closed form f0 = phi^(-1/4) on [0.2, 1]
        const RunResult r =
            run(cli + " fode --config " + cfg + " --out " + dir);
        EXPECT(r.status == 0);
        const json j = json::parse(r.out);
        EXPECT(j["gamma_star"].get<double>() < -0.7);
        std::ifstream csv(dir + "/fode.csv");
        std::string header;
        std::getline(csv, header);
        EXPECT(header == "phi,f0,f1");
        std::string line;
        double max_err = 0.0;
        int rows = 0;
        while (std::getline(csv, line)) {
            ++rows;
            double phi, f0, f1;
            EXPECT(std::sscanf(line.c_str(), "%lf,%lf,%lf", &phi, &f0, &f1) == 3);
            if (phi >= 0.2 && phi <= 1.0)
                max_err = std::max(max_err,
                                   std::fabs(f0 - std::pow(phi, -0.25)));
        }
        EXPECT(rows > 1000);
        EXPECT(max_err < 1e-8);
    }

    {  // h at phi0 = 1: small negative estimate
        const RunResult r = run(cli + " h --config " + cfg +
                                " --phi0 1.0 --paths 200000");
        EXPECT(r.status == 0);
        const json j = json::parse(r.out);
        EXPECT(j["h"].get<double>() > -0.06);
        EXPECT(j["h"].get<double>() < 0.0);
        EXPECT(j["n_paths"] == 200000);
    }

    {  // find-lfd: determinism (byte-identical reports) and artifacts
        const std::string lcfg = dir + "/lfd.json";
        write_file(lcfg,
                   R"({"dp": {"grid_points": 801, "dt": 0.000144},
                       "n_paths": 50000, "saddle_paths": 20000})");
        const RunResult r1 = run(cli + " find-lfd --config " + lcfg + " --out " + dir);
        const RunResult r2 = run(cli + " find-lfd --config " + lcfg + " --out " + dir);
        EXPECT(r1.status == 0);
        EXPECT(r1.out == r2.out);
        const json j = json::parse(r1.out);
        EXPECT(j["regime"] == "NonTrivial");
        EXPECT(j["existence_flagged"] == false);
        EXPECT(j["phi0"].get<double>() > 0.9);
        EXPECT(j["phi0"].get<double>() < 1.0);
        EXPECT(j["gamma_mc"].get<double>() < 0.0);
        const std::string saddle = read_file(dir + "/saddle.csv");
        EXPECT(saddle.rfind("psi,jbar,se\n", 0) == 0);
    }

    {  // simulate: functionals and the optional path dump
        const RunResult r = run(cli + " simulate --config " + cfg +
                                " --phi0 1.0 --paths 20000 --dump-paths --out " +
                                dir);
        EXPECT(r.status == 0);
        const json j = json::parse(r.out);
        EXPECT(j["p_lower"].get<double>() > 0.7);
        EXPECT(j["p_lower"].get<double>() < 0.9);
        const std::string paths = read_file(dir + "/paths.csv");
        EXPECT(paths.rfind("path_id,tau,side,l_exit,int_l_dt,n_jumps\n", 0) == 0);
    }

    {  // jbar and gamma wrappers
        const RunResult r = run(cli + " jbar --config " + cfg +
                                " --phi0 0.96 --psi 1.0 --paths 50000");
        EXPECT(r.status == 0);
        const json j = json::parse(r.out);
        EXPECT(j["jbar"].get<double>() > 0.6);
        EXPECT(j["jbar"].get<double>() < 0.75);

        const RunResult g = run(cli + " gamma --config " + cfg +
                                " --paths 100000");
        EXPECT(g.status == 0);
        const json gj = json::parse(g.out);
        EXPECT(std::fabs(gj["gamma_mc"].get<double>() -
                         gj["gamma_fode"].get<double>()) <
               4.0 * gj["gamma_mc_se"].get<double>());
    }

    {  // unknown subcommand / missing subcommand
        EXPECT(run(cli + " frobnicate").status != 0);
        EXPECT(run(cli).status != 0);
    }

    if (g_failures == 0) std::cout << "test_cli: all checks passed\n";
    return g_failures;
}
