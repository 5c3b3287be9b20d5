#pragma once

#include <string>
#include <vector>

#include "loglap/verify.hpp"

namespace loglap::app {

// one CSV file: header plus pre-formatted cells
struct Table {
    std::string file;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// 17 significant digits, '.' separator; round-trips every finite double
std::string format_double(double x);
std::string format_bool(bool b);

// RFC 4180 field quoting
std::string csv_field(const std::string& s);
std::string to_csv(const Table& t);

// columns: name, param_json, lhs, rhs, margin, pass
Table check_table(std::string file, const std::vector<CheckReport>& checks);
std::string param_json(const CheckReport& c);

Table asymptotics_table(std::string file, const std::vector<AsymptoticsRow>& rows);

}  // namespace loglap::app
