#pragma once

#include <string>
#include <vector>

#include "casp/environment.hpp"

namespace casp {

/// Shortest round-trip decimal rendering of a double (exact reload).
std::string format_double(double v);

/// Structured-text form of an environment (JSON with sorted keys and
/// shortest-round-trip numbers, so save -> load -> save is byte-identical).
std::string environment_to_text(const Environment& env);
Environment environment_from_text(const std::string& text);

void save_environment(const Environment& env, const std::string& path);
Environment load_environment(const std::string& path);

/// Minimal CSV escaping: quotes a field if it contains a comma, quote, or
/// newline. All numeric fields pass through untouched.
std::string csv_field(const std::string& raw);

/// Writes header + rows; every row must match the header width.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Reads back a whole file (test and report plumbing).
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace casp
