#pragma once

#include <istream>
#include <map>
#include <string>
#include <vector>

#include "mlmc/run.hpp"

namespace mlmc {

// Flat key/value configuration with [section] headers; keys are addressed as
// "section.key". Later assignments win, so command-line overrides are applied
// by inserting after the file contents.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config(std::istream& in);
ConfigMap parse_config_file(const std::string& path);

// Build a run configuration from section.key values; unknown keys are errors.
RunConfig config_from_map(const ConfigMap& map);

std::vector<long long> parse_int_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);

}  // namespace mlmc
