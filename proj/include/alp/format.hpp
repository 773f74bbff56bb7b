#pragma once

// Number formatting and file helpers shared by the I/O code.

#include <string>
#include <string_view>

#include "json.hpp"

namespace alp {

/// Shortest decimal that parses back to the same double ("." separator, no locale).
std::string format_shortest(double x);

/// printf %.12g, used for human-facing output.
std::string format_sig12(double x);

/// Strict locale-independent parse of the whole string. Returns false on junk.
bool parse_double(std::string_view s, double& out);

/// null for NaN/inf, the number otherwise.
nlohmann::json json_number(double x);

std::string read_file(const std::string& path);

/// Write to a sibling temporary file and rename over `path`.
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace alp
