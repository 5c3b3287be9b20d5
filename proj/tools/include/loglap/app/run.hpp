#pragma once

#include <string>
#include <utility>
#include <vector>

#include "loglap/app/config.hpp"
#include "loglap/app/report.hpp"

namespace loglap::app {

enum ExitCode : int {
    kExitPass = 0,
    kExitCheckFailed = 1,
    kExitConfig = 2,
    kExitNoConvergence = 3,
    kExitIo = 4,
};

struct Stage {
    std::string name;
    double seconds;
};

struct ReportBundle {
    std::vector<std::pair<std::string, std::string>> files;  // name, content
    std::vector<Stage> stages;
    std::vector<std::string> messages;
    bool overall_pass = true;
    bool non_converged = false;

    void add_table(const Table& t);
    int exit_code() const;
};

// Runs the configured command. Configuration problems found late (missing
// lambda, regime gate) throw ConfigError.
ReportBundle execute(const RunConfig& cfg);

// manifest.json content for a finished (or aborted) run
std::string manifest_json(const RunConfig* cfg, const ReportBundle& bundle, int exit_code,
                          const std::string& error);

// Writes every file plus manifest.json into dir; returns kExitIo on failure.
int write_bundle(const std::string& dir, const std::vector<std::pair<std::string, std::string>>& files);

}  // namespace loglap::app
