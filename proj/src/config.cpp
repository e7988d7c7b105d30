#include "mlmc/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace mlmc {

namespace {

std::string trim(const std::string& text) {
  std::size_t begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  std::size_t end = text.find_last_not_of(" \t\r\n");
  return text.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& value, const std::string& key) {
  std::string v = value;
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw InvalidArgs("config key " + key + " expects a boolean, got '" + value + "'");
}

double parse_double(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    double parsed = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    throw InvalidArgs("config key " + key + " expects a number, got '" + value + "'");
  }
}

long long parse_int(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    long long parsed = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    throw InvalidArgs("config key " + key + " expects an integer, got '" + value + "'");
  }
}

}  // namespace

std::vector<long long> parse_int_list(const std::string& text) {
  std::vector<long long> values;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    values.push_back(parse_int(item, "list"));
  }
  return values;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    values.push_back(parse_double(item, "list"));
  }
  return values;
}

ConfigMap parse_config(std::istream& in) {
  ConfigMap map;
  std::string line;
  std::string section;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    std::size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw InvalidArgs("config line " + std::to_string(line_number) + ": malformed section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    std::size_t equals = line.find('=');
    if (equals == std::string::npos)
      throw InvalidArgs("config line " + std::to_string(line_number) + ": expected key = value");
    std::string key = trim(line.substr(0, equals));
    std::string value = trim(line.substr(equals + 1));
    if (key.empty())
      throw InvalidArgs("config line " + std::to_string(line_number) + ": empty key");
    map[section.empty() ? key : section + "." + key] = value;
  }
  return map;
}

ConfigMap parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgs("cannot open config file '" + path + "'");
  return parse_config(in);
}

RunConfig config_from_map(const ConfigMap& map) {
  RunConfig config;
  PauseModelSpec pause;
  SyntheticModelSpec synthetic;
  Elliptic1DSpec elliptic;
  std::string model_kind = "synthetic";

  for (const auto& [key, value] : map) {
    if (key == "estimator.eps" || key == "estimator.tolerance") {
      config.estimator.tolerance = parse_double(value, key);
    } else if (key == "estimator.refinement" || key == "estimator.s") {
      config.estimator.refinement_factor = parse_double(value, key);
    } else if (key == "estimator.max_levels") {
      config.estimator.max_levels = static_cast<int>(parse_int(value, key));
    } else if (key == "estimator.initial_levels") {
      config.estimator.initial_levels = static_cast<int>(parse_int(value, key));
    } else if (key == "estimator.initial_samples") {
      config.estimator.initial_samples = parse_int_list(value);
    } else if (key == "estimator.safety") {
      config.estimator.safety_factor = parse_double(value, key);
    } else if (key == "estimator.min_alpha") {
      config.estimator.min_alpha = parse_double(value, key);
    } else if (key == "estimator.work_growth") {
      config.estimator.work_growth = parse_double(value, key);
    } else if (key == "partition.p") {
      config.partition.workers = static_cast<int>(parse_int(value, key));
    } else if (key == "partition.q") {
      config.partition.group_sizes.clear();
      for (long long q : parse_int_list(value))
        config.partition.group_sizes.push_back(static_cast<int>(q));
    } else if (key == "batch.min_fraction") {
      config.batch.min_fraction = parse_double(value, key);
    } else if (key == "batch.max_fraction") {
      config.batch.max_fraction = parse_double(value, key);
    } else if (key == "coordinator.enabled") {
      config.use_coordinator_tree = parse_bool(value, key);
    } else if (key == "coordinator.comm_limit") {
      config.comm_limit = static_cast<int>(parse_int(value, key));
    } else if (key == "run.seed") {
      config.seed = static_cast<std::uint64_t>(parse_int(value, key));
    } else if (key == "run.mode") {
      if (value == "simulate") config.mode = RunMode::Simulate;
      else if (value == "run" || value == "execute") config.mode = RunMode::Execute;
      else throw InvalidArgs("run.mode must be simulate or run");
    } else if (key == "run.adaptive") {
      config.adaptive = parse_bool(value, key);
    } else if (key == "run.max_iterations") {
      config.max_iterations = static_cast<int>(parse_int(value, key));
    } else if (key == "run.master_overhead") {
      config.coordinator_overhead = parse_double(value, key);
    } else if (key == "run.time_scale") {
      config.execute_time_scale = parse_double(value, key);
    } else if (key == "model.kind") {
      model_kind = value;
    } else if (key == "model.mu") {
      pause.mu_per_level = parse_double_list(value);
    } else if (key == "model.sigma") {
      pause.sigma_per_level = parse_double_list(value);
    } else if (key == "model.sigma_interpretation") {
      if (value == "stddev") pause.interpretation = SigmaInterpretation::StdDev;
      else if (value == "variance") pause.interpretation = SigmaInterpretation::Variance;
      else throw InvalidArgs("model.sigma_interpretation must be stddev or variance");
    } else if (key == "model.base_mean") {
      synthetic.base_mean = parse_double(value, key);
    } else if (key == "model.decay_c") {
      synthetic.decay_c = parse_double(value, key);
    } else if (key == "model.decay_alpha") {
      synthetic.decay_alpha = parse_double(value, key);
    } else if (key == "model.s") {
      synthetic.s = parse_double(value, key);
    } else if (key == "model.noise") {
      synthetic.noise_scale = parse_double(value, key);
    } else if (key == "model.cost_base") {
      synthetic.cost_base = parse_double(value, key);
    } else if (key == "model.work_exponent") {
      synthetic.work_exponent = parse_double(value, key);
    } else if (key == "model.coarse_elements") {
      elliptic.coarse_elements = static_cast<int>(parse_int(value, key));
    } else if (key == "model.refinement") {
      elliptic.refinement = static_cast<int>(parse_int(value, key));
    } else if (key == "model.kle_terms") {
      elliptic.kle_terms = static_cast<int>(parse_int(value, key));
    } else if (key == "model.correlation_length") {
      elliptic.correlation_length = parse_double(value, key);
    } else if (key == "model.log_std") {
      elliptic.log_std = parse_double(value, key);
    } else if (key == "model.qoi") {
      if (value == "midpoint") elliptic.qoi = EllipticQoi::MidpointValue;
      else if (value == "integral") elliptic.qoi = EllipticQoi::Integral;
      else throw InvalidArgs("model.qoi must be midpoint or integral");
    } else if (key == "model.work_per_element") {
      elliptic.work_per_element = parse_double(value, key);
    } else {
      throw InvalidArgs("unknown config key '" + key + "'");
    }
  }

  if (model_kind == "pause") {
    if (pause.mu_per_level.empty()) pause.mu_per_level = {1.0};
    config.model.spec = pause;
  } else if (model_kind == "synthetic") {
    config.model.spec = synthetic;
  } else if (model_kind == "elliptic1d") {
    config.model.spec = elliptic;
  } else {
    throw InvalidArgs("model.kind must be pause, synthetic or elliptic1d");
  }
  return config;
}

}  // namespace mlmc
