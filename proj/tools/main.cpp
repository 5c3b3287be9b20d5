#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "loglap/app/config.hpp"
#include "loglap/app/run.hpp"
#include "loglap/errors.hpp"
#include "loglap/version.hpp"

namespace {

using namespace loglap::app;

bool read_file(const std::string& path, std::string& out) {
    if (path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        out = ss.str();
        return true;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::ostringstream ss;
    ss << in.rdbuf();
    out = ss.str();
    return true;
}

// manifest is written even when the run stops early
int finish(const RunConfig* cfg, const std::string& out_dir, ReportBundle bundle, int code,
           const std::string& error) {
    if (!error.empty()) std::cerr << error << '\n';
    auto files = bundle.files;
    files.emplace_back("manifest.json", manifest_json(cfg, bundle, code, error));
    if (write_bundle(out_dir, files) != kExitPass) {
        std::cerr << "cannot write output directory '" << out_dir << "'\n";
        return kExitIo;
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"loglap: logarithmic Laplacian solvers and checks"};
    cli.set_version_flag("--version", loglap::kVersion);

    std::string command;
    std::string check;
    std::string config_path;
    ConfigOverrides over;
    int n = 0;
    std::uint64_t seed = 0;
    std::string out;
    cli.add_option("command", command,
                   "constants | eigen | solve-log | solve-frac | asymptotics | verify | all");
    cli.add_option("check", check, "check name for verify");
    cli.add_option("-c,--config", config_path, "JSON run configuration ('-' reads stdin)");
    auto* n_opt = cli.add_option("--n", n, "number of cells");
    auto* seed_opt = cli.add_option("--seed", seed, "random seed");
    auto* out_opt = cli.add_option("--out", out, "output directory");
    cli.add_flag("--allow-no-existence", over.allow_no_existence,
                 "run superlinear descent for lambda >= 4/N");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = cli.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    if (!command.empty()) over.command = command;
    if (!check.empty()) over.check = check;
    if (*n_opt) over.n = n;
    if (*seed_opt) over.seed = seed;
    if (*out_opt) over.out_dir = out;
    const std::string fallback_dir = over.out_dir.value_or("loglap_out");

    std::string text = "{}";
    if (!config_path.empty() && !read_file(config_path, text)) {
        return finish(nullptr, fallback_dir, {}, kExitConfig,
                      "config: cannot read '" + config_path + "'");
    }
    if (config_path.empty() && command.empty()) {
        std::cerr << cli.help();
        return kExitConfig;
    }

    RunConfig cfg;
    try {
        cfg = parse_config(text, over);
    } catch (const ConfigError& e) {
        return finish(nullptr, fallback_dir, {}, kExitConfig, e.what());
    }

    ReportBundle bundle;
    try {
        bundle = execute(cfg);
    } catch (const ConfigError& e) {
        return finish(&cfg, cfg.out_dir, {}, kExitConfig, e.what());
    } catch (const loglap::SolverError& e) {
        ReportBundle partial;
        partial.non_converged = true;
        return finish(&cfg, cfg.out_dir, partial, kExitNoConvergence, e.what());
    } catch (const std::exception& e) {
        // domain and usage errors surfacing from the numerics are configuration faults
        return finish(&cfg, cfg.out_dir, {}, kExitConfig, e.what());
    }

    for (const auto& m : bundle.messages) std::cerr << m << '\n';
    const int code = bundle.exit_code();
    const std::size_t count = bundle.files.size();
    const int rc = finish(&cfg, cfg.out_dir, std::move(bundle), code, "");
    if (rc != kExitIo) {
        std::cout << command_name(cfg.command) << (cfg.check.empty() ? "" : " " + cfg.check)
                  << ": " << (code == kExitPass ? "pass" : "FAIL") << " (" << count
                  << " file(s) in " << cfg.out_dir << ")\n";
    }
    return rc;
}
