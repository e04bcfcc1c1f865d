#pragma once

// Deterministic text output: every floating-point number is written with 12
// significant digits in lowercase scientific notation.

#include <string>

#include "json.hpp"

namespace ctraj::io {

using Json = nlohmann::ordered_json;

std::string format_real(double v);

/// Serializes with fixed float formatting and two-space indentation.
std::string dump(const Json& j);

Json complex_pair(double re, double im);

/// Writes text to path, creating parent directories; throws on failure.
void write_file(const std::string& path, const std::string& text);

}  // namespace ctraj::io
