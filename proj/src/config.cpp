#include "seqgc/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace seqgc {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty()) {
    throw std::invalid_argument("config key '" + key + "': not a number: '" + value + "'");
  }
  return out;
}

int to_int(const std::string& key, const std::string& value) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw std::invalid_argument("config key '" + key + "': not an integer: '" + value + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw std::invalid_argument("config key '" + key + "': not a boolean: '" + value + "'");
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("invalid config: ") + what);
}

}  // namespace

void validate(const FitConfig& cfg) {
  require(cfg.lambda_homography >= 0.0 && cfg.lambda_homography <= 1.0,
          "lambda_homography must lie in [0, 1]");
  require(cfg.lambda_plane >= 0.0 && cfg.lambda_plane <= 1.0, "lambda_plane must lie in [0, 1]");
  require(cfg.ste_threshold > 0.0, "ste_threshold must be positive");
  require(cfg.ste_residual_threshold > 0.0, "ste_residual_threshold must be positive");
  require(cfg.confidence > 0.0 && cfg.confidence < 1.0, "confidence must lie in (0, 1)");
  require(cfg.grid_cells_per_axis >= 1, "grid_cells_per_axis must be >= 1");
  require(cfg.max_outer_iterations >= 1, "max_outer_iterations must be >= 1");
  require(cfg.min_inner_iterations >= 1 && cfg.max_inner_iterations >= cfg.min_inner_iterations,
          "inner iteration bounds must satisfy 1 <= min <= max");
  require(cfg.distance_threshold > 0.0, "distance_threshold must be positive");
  require(cfg.residual_threshold > 0.0, "residual_threshold must be positive");
  require(cfg.normal_parallel_threshold > 0.0 && cfg.normal_parallel_threshold < 1.0,
          "normal_parallel_threshold must lie in (0, 1)");
  require(cfg.offset_threshold > 0.0, "offset_threshold must be positive");
  require(cfg.neighbor_radius > 0.0, "neighbor_radius must be positive");
  require(cfg.min_plane_support >= 0, "min_plane_support must be non-negative");
  require(cfg.pairwise_weight > 0.0, "pairwise_weight must be positive");
  require(cfg.merge_rounds >= 1, "merge_rounds must be >= 1");
  require(cfg.merge_sample_fraction > 0.0 && cfg.merge_sample_fraction <= 1.0,
          "merge_sample_fraction must lie in (0, 1]");
}

FitConfig scale_thresholds(const FitConfig& cfg, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::domain_error("map scale must be positive and finite");
  }
  FitConfig out = cfg;
  out.distance_threshold *= scale;
  out.residual_threshold *= scale;
  out.offset_threshold *= scale;
  out.neighbor_radius *= scale;
  return out;
}

FitConfig scale_thresholds_mono(const FitConfig& cfg, double median_depth) {
  if (!(median_depth > 0.0)) throw std::domain_error("median depth must be positive");
  return scale_thresholds(cfg, median_depth);
}

FitConfig scale_thresholds_rgbd(const FitConfig& cfg, const std::vector<MapPoint>& points) {
  if (points.empty()) throw std::domain_error("cannot estimate map scale from an empty point set");
  double sum = 0.0;
  for (const auto& p : points) sum += p.position.norm();
  return scale_thresholds(cfg, sum / static_cast<double>(points.size()));
}

std::vector<std::pair<std::string, std::string>> read_key_values(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": empty key");
    }
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

FitConfig parse_config(std::istream& in) {
  FitConfig cfg;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto real = [](double& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = to_double(k, v); };
  };
  auto integer = [](int& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = to_int(k, v); };
  };
  auto boolean = [](bool& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = to_bool(k, v); };
  };
  const std::map<std::string, Setter> setters = {
      {"lambda_homography", real(cfg.lambda_homography)},
      {"lambda_plane", real(cfg.lambda_plane)},
      {"ste_threshold", real(cfg.ste_threshold)},
      {"ste_residual_threshold", real(cfg.ste_residual_threshold)},
      {"confidence", real(cfg.confidence)},
      {"grid_cells_per_axis", integer(cfg.grid_cells_per_axis)},
      {"max_outer_iterations", integer(cfg.max_outer_iterations)},
      {"max_inner_iterations", integer(cfg.max_inner_iterations)},
      {"min_inner_iterations", integer(cfg.min_inner_iterations)},
      {"distance_threshold", real(cfg.distance_threshold)},
      {"residual_threshold", real(cfg.residual_threshold)},
      {"normal_parallel_threshold", real(cfg.normal_parallel_threshold)},
      {"offset_threshold", real(cfg.offset_threshold)},
      {"neighbor_radius", real(cfg.neighbor_radius)},
      {"min_plane_support", integer(cfg.min_plane_support)},
      {"pairwise_weight", real(cfg.pairwise_weight)},
      {"local_optimization", boolean(cfg.local_optimization)},
      {"merge_rounds", integer(cfg.merge_rounds)},
      {"merge_sample_fraction", real(cfg.merge_sample_fraction)},
      {"literal_offset_test", boolean(cfg.literal_offset_test)},
  };

  bool saw_offset = false;
  bool saw_radius = false;
  for (const auto& [key, value] : read_key_values(in)) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw std::invalid_argument("unknown config key '" + key + "'");
    it->second(key, value);
    saw_offset |= key == "offset_threshold";
    saw_radius |= key == "neighbor_radius";
  }
  if (!saw_offset) cfg.offset_threshold = 10.0 * cfg.distance_threshold;
  if (!saw_radius) cfg.neighbor_radius = 2.0 * cfg.distance_threshold;
  validate(cfg);
  return cfg;
}

FitConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  return parse_config(in);
}

std::string format_config(const FitConfig& cfg) {
  std::ostringstream out;
  out.precision(17);
  out << std::boolalpha;
  out << "lambda_homography = " << cfg.lambda_homography << '\n'
      << "lambda_plane = " << cfg.lambda_plane << '\n'
      << "ste_threshold = " << cfg.ste_threshold << '\n'
      << "ste_residual_threshold = " << cfg.ste_residual_threshold << '\n'
      << "confidence = " << cfg.confidence << '\n'
      << "grid_cells_per_axis = " << cfg.grid_cells_per_axis << '\n'
      << "max_outer_iterations = " << cfg.max_outer_iterations << '\n'
      << "max_inner_iterations = " << cfg.max_inner_iterations << '\n'
      << "min_inner_iterations = " << cfg.min_inner_iterations << '\n'
      << "distance_threshold = " << cfg.distance_threshold << '\n'
      << "residual_threshold = " << cfg.residual_threshold << '\n'
      << "normal_parallel_threshold = " << cfg.normal_parallel_threshold << '\n'
      << "offset_threshold = " << cfg.offset_threshold << '\n'
      << "neighbor_radius = " << cfg.neighbor_radius << '\n'
      << "min_plane_support = " << cfg.min_plane_support << '\n'
      << "pairwise_weight = " << cfg.pairwise_weight << '\n'
      << "local_optimization = " << cfg.local_optimization << '\n'
      << "merge_rounds = " << cfg.merge_rounds << '\n'
      << "merge_sample_fraction = " << cfg.merge_sample_fraction << '\n'
      << "literal_offset_test = " << cfg.literal_offset_test << '\n';
  return out.str();
}

}  // namespace seqgc
