#include "loglap/app/report.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace loglap::app {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string format_bool(bool b) { return b ? "true" : "false"; }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string to_csv(const Table& t) {
    std::string out;
    const auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += csv_field(cells[i]);
        }
        out += '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
    return out;
}

std::string param_json(const CheckReport& c) {
    // insertion order, numbers through format_double
    std::string out = "{";
    bool first = true;
    const auto key = [&](const std::string& k) {
        if (!first) out += ',';
        first = false;
        out += nlohmann::json(k).dump();
        out += ':';
    };
    for (const auto& [k, v] : c.context) {
        key(k);
        out += std::isfinite(v) ? format_double(v) : "null";
    }
    if (!c.note.empty()) {
        key("note");
        out += nlohmann::json(c.note).dump();
    }
    out += '}';
    return out;
}

Table check_table(std::string file, const std::vector<CheckReport>& checks) {
    Table t{std::move(file), {"name", "param_json", "lhs", "rhs", "margin", "pass"}, {}};
    for (const auto& c : checks) {
        t.rows.push_back({c.name, param_json(c), format_double(c.lhs), format_double(c.rhs),
                          format_double(c.margin), format_bool(c.pass)});
    }
    return t;
}

Table asymptotics_table(std::string file, const std::vector<AsymptoticsRow>& rows) {
    Table t{std::move(file),
            {"s", "energy_over_s", "norm_s", "l2_gap", "sup_norm", "t_s", "A_const"},
            {}};
    for (const auto& r : rows) {
        t.rows.push_back({format_double(r.s), format_double(r.energy_over_s),
                          format_double(r.norm_s), format_double(r.l2_gap),
                          format_double(r.sup_norm), format_double(r.t_s),
                          format_double(r.A_const)});
    }
    return t;
}

}  // namespace loglap::app
