#pragma once

#include <string>
#include <string_view>

#include "twflat/circuit.hpp"

namespace twf {

/// Parse the line-based circuit format:
///
///   input <name> [<variable>]
///   const <name> <integer>
///   zvar  <name> <variable>
///   gate  <name> <add|mul|and|or|not> <arg> [<arg>]
///   output <name>
///
/// `#` starts a comment. The optional variable of `input` lets several
/// leaves read the same variable (formulas need that). Throws ParseError.
Circuit parse_circuit(std::string_view text);
Circuit read_circuit_file(const std::string& path);

std::string write_circuit(const Circuit& c);
void write_circuit_file(const Circuit& c, const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace twf
