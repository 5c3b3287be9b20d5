#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "loglap/discretize.hpp"
#include "loglap/solve.hpp"

namespace loglap::app {

// malformed or invalid run configuration (exit code 2)
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Command { Constants, Eigen, SolveLog, SolveFrac, Asymptotics, Verify, All };

const char* command_name(Command c);
std::optional<Command> parse_command(const std::string& name);

// checks reachable through `verify <check>`
const std::vector<std::string>& verify_checks();

// omega(x) = v0 + v1 x
struct OmegaSpec {
    double v0 = 0.0;
    double v1 = 0.0;
    std::string text = "const:0";

    bool constant() const { return v1 == 0.0; }
};

OmegaSpec parse_omega(const std::string& text);

struct Tolerances {
    SolveOptions solve;
    double check_tol = 1e-9;     // inequality audits
    double diaz_saa_tol = 1e-10;
    double pohozaev_rel_tol = 0.1;
};

struct RunConfig {
    Command command = Command::All;
    std::string check;  // verify only
    int n = 256;
    double a = -1.0;
    double b = 1.0;
    std::optional<double> lambda;
    OmegaSpec omega;
    std::vector<double> s_list{0.1, 0.05, 0.025, 0.0125};
    bool s_list_given = false;
    std::optional<double> p1;
    std::uint64_t seed = 42;
    Tolerances tol;
    std::string out_dir = "loglap_out";
    bool allow_no_existence = false;

    // the config as read, for the manifest
    std::string echo;
};

// command-line values that win over the JSON document
struct ConfigOverrides {
    std::optional<std::string> command;
    std::optional<std::string> check;
    std::optional<int> n;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    bool allow_no_existence = false;
};

// Parses and validates a JSON document. Unknown keys are rejected; parse
// errors carry line and column.
RunConfig parse_config(const std::string& text, const ConfigOverrides& over = {});

void validate(const RunConfig& cfg);

DiscreteFunction omega_on(const OmegaSpec& spec, const GridPtr& grid);
std::optional<DiscreteFunction> omega_prime_on(const OmegaSpec& spec, const GridPtr& grid);

}  // namespace loglap::app
