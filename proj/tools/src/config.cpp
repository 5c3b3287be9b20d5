#include "loglap/app/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

namespace loglap::app {

namespace {

using nlohmann::json;

const std::set<std::string> kKeys = {"command", "check",  "n",    "domain",  "lambda",
                                     "omega",   "s_list", "p1",   "seed",    "tol",
                                     "out_dir", "allow_no_existence"};

const std::set<std::string> kTolKeys = {"tol_g",     "tol_n",     "max_iter",
                                        "armijo_c",  "backtrack", "max_step",
                                        "check_tol", "diaz_saa_tol", "pohozaev_rel_tol"};

std::string line_col(const std::string& text, std::size_t byte) {
    // byte is 1-based and may point one past the end
    std::size_t line = 1;
    std::size_t col = 1;
    const std::size_t stop = std::min(byte == 0 ? 0 : byte - 1, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

double number(const json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError("config: '" + key + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError("config: '" + key + "' must be finite");
    return x;
}

std::int64_t integer(const json& v, const std::string& key) {
    if (!v.is_number_integer()) throw ConfigError("config: '" + key + "' must be an integer");
    return v.get<std::int64_t>();
}

double parse_real(const std::string& s, const std::string& what) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty() || !std::isfinite(x)) {
        throw ConfigError("config: bad number '" + s + "' in " + what);
    }
    return x;
}

}  // namespace

const char* command_name(Command c) {
    switch (c) {
        case Command::Constants: return "constants";
        case Command::Eigen: return "eigen";
        case Command::SolveLog: return "solve-log";
        case Command::SolveFrac: return "solve-frac";
        case Command::Asymptotics: return "asymptotics";
        case Command::Verify: return "verify";
        case Command::All: return "all";
    }
    return "?";
}

std::optional<Command> parse_command(const std::string& name) {
    for (Command c : {Command::Constants, Command::Eigen, Command::SolveLog, Command::SolveFrac,
                      Command::Asymptotics, Command::Verify, Command::All}) {
        if (name == command_name(c)) return c;
    }
    return std::nullopt;
}

const std::vector<std::string>& verify_checks() {
    static const std::vector<std::string> checks = {
        "diaz-saa",   "ray-convexity", "log-sobolev",   "frac-sobolev", "pohozaev",
        "obstruction", "boundary-rate", "hypotheses",   "expansion"};
    return checks;
}

OmegaSpec parse_omega(const std::string& text) {
    OmegaSpec spec;
    spec.text = text;
    if (text.rfind("const:", 0) == 0) {
        spec.v0 = parse_real(text.substr(6), "omega");
    } else if (text.rfind("linear:", 0) == 0) {
        const std::string body = text.substr(7);
        const auto comma = body.find(',');
        if (comma == std::string::npos) {
            throw ConfigError("config: omega 'linear:<v0>,<v1>' needs two values");
        }
        spec.v0 = parse_real(body.substr(0, comma), "omega");
        spec.v1 = parse_real(body.substr(comma + 1), "omega");
    } else {
        throw ConfigError("config: omega must be 'const:<v>' or 'linear:<v0>,<v1>'");
    }
    return spec;
}

RunConfig parse_config(const std::string& text, const ConfigOverrides& over) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        std::string msg = e.what();
        // drop the library prefix, keep the description
        if (const auto p = msg.find("syntax error"); p != std::string::npos) msg = msg.substr(p);
        throw ConfigError("config: malformed JSON at " + line_col(text, e.byte) + ": " + msg);
    }
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");

    RunConfig cfg;
    for (const auto& [key, _] : doc.items()) {
        if (!kKeys.count(key)) throw ConfigError("config: unknown key '" + key + "'");
    }
    std::string command_text;
    if (over.command) {
        command_text = *over.command;
    } else if (doc.contains("command")) {
        if (!doc["command"].is_string()) throw ConfigError("config: 'command' must be a string");
        command_text = doc["command"].get<std::string>();
    } else {
        throw ConfigError("config: 'command' is required");
    }
    const auto cmd = parse_command(command_text);
    if (!cmd) throw ConfigError("config: unknown command '" + command_text + "'");
    cfg.command = *cmd;

    if (doc.contains("check")) {
        if (!doc["check"].is_string()) throw ConfigError("config: 'check' must be a string");
        cfg.check = doc["check"].get<std::string>();
    }
    if (doc.contains("n")) {
        const auto n = integer(doc["n"], "n");
        if (n < 0 || n > 1 << 20) throw ConfigError("config: 'n' out of range");
        cfg.n = static_cast<int>(n);
    }
    if (doc.contains("domain")) {
        const json& d = doc["domain"];
        if (!d.is_array() || d.size() != 2) throw ConfigError("config: 'domain' must be [a, b]");
        cfg.a = number(d[0], "domain");
        cfg.b = number(d[1], "domain");
    }
    if (doc.contains("lambda")) cfg.lambda = number(doc["lambda"], "lambda");
    if (doc.contains("omega")) {
        if (!doc["omega"].is_string()) throw ConfigError("config: 'omega' must be a string");
        cfg.omega = parse_omega(doc["omega"].get<std::string>());
    }
    if (doc.contains("s_list")) {
        const json& s = doc["s_list"];
        if (!s.is_array()) throw ConfigError("config: 's_list' must be an array");
        cfg.s_list.clear();
        for (const auto& v : s) cfg.s_list.push_back(number(v, "s_list"));
        cfg.s_list_given = true;
    }
    if (doc.contains("p1")) cfg.p1 = number(doc["p1"], "p1");
    if (doc.contains("seed")) {
        const json& v = doc["seed"];
        if (v.is_number_unsigned()) {
            cfg.seed = v.get<std::uint64_t>();
        } else if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
            cfg.seed = static_cast<std::uint64_t>(v.get<std::int64_t>());
        } else {
            throw ConfigError("config: 'seed' must be a non-negative integer");
        }
    }
    if (doc.contains("tol")) {
        const json& t = doc["tol"];
        if (!t.is_object()) throw ConfigError("config: 'tol' must be an object");
        for (const auto& [key, v] : t.items()) {
            if (!kTolKeys.count(key)) throw ConfigError("config: unknown tolerance '" + key + "'");
            if (key == "max_iter") {
                const auto m = integer(v, "tol.max_iter");
                if (m < 1 || m > 100000000) throw ConfigError("config: 'tol.max_iter' out of range");
                cfg.tol.solve.max_iter = static_cast<int>(m);
                continue;
            }
            const double x = number(v, "tol." + key);
            if (!(x > 0.0)) throw ConfigError("config: 'tol." + key + "' must be positive");
            if (key == "tol_g") cfg.tol.solve.tol_g = x;
            else if (key == "tol_n") cfg.tol.solve.tol_n = x;
            else if (key == "armijo_c") cfg.tol.solve.armijo_c = x;
            else if (key == "backtrack") cfg.tol.solve.backtrack = x;
            else if (key == "max_step") cfg.tol.solve.max_step = x;
            else if (key == "check_tol") cfg.tol.check_tol = x;
            else if (key == "diaz_saa_tol") cfg.tol.diaz_saa_tol = x;
            else cfg.tol.pohozaev_rel_tol = x;
        }
    }
    if (doc.contains("out_dir")) {
        if (!doc["out_dir"].is_string()) throw ConfigError("config: 'out_dir' must be a string");
        cfg.out_dir = doc["out_dir"].get<std::string>();
    }
    if (doc.contains("allow_no_existence")) {
        if (!doc["allow_no_existence"].is_boolean()) {
            throw ConfigError("config: 'allow_no_existence' must be a boolean");
        }
        cfg.allow_no_existence = doc["allow_no_existence"].get<bool>();
    }
    if (over.check) cfg.check = *over.check;
    if (over.n) cfg.n = *over.n;
    if (over.seed) cfg.seed = *over.seed;
    if (over.out_dir) cfg.out_dir = *over.out_dir;
    if (over.allow_no_existence) cfg.allow_no_existence = true;
    cfg.echo = doc.dump();
    validate(cfg);
    return cfg;
}

void validate(const RunConfig& cfg) {
    if (cfg.n < 8 || cfg.n % 2 != 0) throw ConfigError("config: 'n' must be even and >= 8");
    if (!(cfg.a < cfg.b)) throw ConfigError("config: 'domain' needs a < b");
    if (cfg.s_list.empty()) throw ConfigError("config: 's_list' must not be empty");
    for (std::size_t i = 0; i < cfg.s_list.size(); ++i) {
        const double s = cfg.s_list[i];
        if (!(s > 0.0 && s < 0.25)) throw ConfigError("config: 's_list' entries must lie in (0, 1/4)");
        if (i > 0 && !(s < cfg.s_list[i - 1])) {
            throw ConfigError("config: 's_list' must be strictly decreasing");
        }
    }
    if (cfg.lambda && *cfg.lambda == 0.0) throw ConfigError("config: 'lambda' must be non-zero");
    if (cfg.p1 && (*cfg.p1 == 0.0 || !(*cfg.p1 < 4.0))) {
        throw ConfigError("config: 'p1' must be non-zero and below 4");
    }
    if (cfg.command == Command::Verify) {
        if (cfg.check.empty()) throw ConfigError("config: verify needs a 'check'");
        const auto& all = verify_checks();
        if (std::find(all.begin(), all.end(), cfg.check) == all.end()) {
            std::ostringstream os;
            os << "config: unknown check '" << cfg.check << "' (one of";
            for (const auto& c : all) os << ' ' << c;
            os << ')';
            throw ConfigError(os.str());
        }
    } else if (!cfg.check.empty()) {
        throw ConfigError("config: 'check' is only valid with verify");
    }
    if (cfg.out_dir.empty()) throw ConfigError("config: 'out_dir' must not be empty");
}

DiscreteFunction omega_on(const OmegaSpec& spec, const GridPtr& grid) {
    return DiscreteFunction::sample(grid, [&](double x) { return spec.v0 + spec.v1 * x; });
}

std::optional<DiscreteFunction> omega_prime_on(const OmegaSpec& spec, const GridPtr& grid) {
    if (spec.constant()) return std::nullopt;
    return DiscreteFunction(grid, Eigen::VectorXd::Constant(grid->n, spec.v1));
}

}  // namespace loglap::app
