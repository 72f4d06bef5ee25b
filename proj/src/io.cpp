#include "seqgc/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

namespace seqgc {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ": " + what);
}

double to_double(const std::string& field, std::size_t line) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    fail(line, "not a finite number: '" + field + "'");
  }
  return v;
}

long long to_integer(const std::string& field, std::size_t line) {
  long long v = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc() || ptr != end) fail(line, "not an integer: '" + field + "'");
  return v;
}

std::size_t to_id(const std::string& field, std::size_t line) {
  const long long v = to_integer(field, line);
  if (v < 0) fail(line, "negative id");
  return static_cast<std::size_t>(v);
}

std::optional<int> to_label(const std::string& field, std::size_t line) {
  if (field.empty()) return std::nullopt;
  const long long v = to_integer(field, line);
  if (v == -1) return std::nullopt;
  if (v < -1 || v > std::numeric_limits<int>::max()) fail(line, "label out of range");
  return static_cast<int>(v);
}

// Calls `row(fields, line_number)` for every data line.
template <class Row>
void for_each_row(std::istream& in, Row row) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    if (text.rfind("id", 0) == 0) {
      if (number == 1) continue;
      fail(number, "unexpected header");
    }
    row(split_csv(text), number);
  }
}

void expect_fields(const std::vector<std::string>& fields, std::size_t lo, std::size_t hi,
                   std::size_t line) {
  if (fields.size() < lo || fields.size() > hi) {
    fail(line, "expected " + std::to_string(lo) + (lo == hi ? "" : "-" + std::to_string(hi)) +
                   " fields, got " + std::to_string(fields.size()));
  }
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

template <class Reader>
auto load_with_context(const std::filesystem::path& path, Reader reader) {
  auto in = open(path);
  try {
    return reader(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

template <class T>
void compact(std::vector<T>& items) {
  std::map<int, int> remap;
  for (const auto& item : items) {
    if (item.prior_label) remap.emplace(*item.prior_label, 0);
  }
  int next = 0;
  for (auto& [from, to] : remap) to = next++;
  for (auto& item : items) {
    if (item.prior_label) item.prior_label = remap.at(*item.prior_label);
  }
}

std::string label_field(const std::optional<int>& label) {
  return label ? std::to_string(*label) : std::string();
}

}  // namespace

PointFormat point_format(const std::string& name, const std::filesystem::path& path) {
  std::string key = name;
  if (key.empty()) {
    key = path.extension().string();
    if (!key.empty()) key.erase(0, 1);
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
  }
  if (key == "csv") return PointFormat::csv;
  if (key == "ply") return PointFormat::ply;
  throw UsageError("unknown point format '" + key + "' (expected csv or ply)");
}

std::vector<MapPoint> read_points_csv(std::istream& in) {
  std::vector<MapPoint> points;
  for_each_row(in, [&](const std::vector<std::string>& f, std::size_t line) {
    expect_fields(f, 4, 5, line);
    MapPoint p;
    p.id = to_id(f[0], line);
    p.position = {to_double(f[1], line), to_double(f[2], line), to_double(f[3], line)};
    if (f.size() == 5) p.prior_label = to_label(f[4], line);
    points.push_back(p);
  });
  return points;
}

std::vector<MapPoint> read_points_ply(std::istream& in) {
  std::string line;
  std::size_t number = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++number;
    line = trim(line);
    return true;
  };
  if (!next_line() || line != "ply") fail(1, "missing 'ply' magic");

  std::size_t vertex_count = 0;
  bool in_vertex = false;
  bool seen_vertex = false;
  std::vector<std::string> vertex_props;
  while (true) {
    if (!next_line()) fail(number, "unterminated header");
    std::istringstream words(line);
    std::string word;
    words >> word;
    if (word == "format") {
      std::string kind;
      words >> kind;
      if (kind != "ascii") fail(number, "only ascii PLY is supported");
    } else if (word == "element") {
      std::string name;
      long long count = -1;
      words >> name >> count;
      if (count < 0) fail(number, "bad element count");
      in_vertex = name == "vertex";
      if (in_vertex) {
        vertex_count = static_cast<std::size_t>(count);
        seen_vertex = true;
      } else if (!seen_vertex) {
        fail(number, "elements before 'vertex' are not supported");
      }
    } else if (word == "property") {
      if (in_vertex) {
        std::string type, name;
        words >> type;
        if (type == "list") fail(number, "list properties on vertices are not supported");
        words >> name;
        vertex_props.push_back(name);
      }
    } else if (word == "end_header") {
      break;
    } else if (word != "comment" && word != "obj_info" && !word.empty()) {
      fail(number, "unexpected header line '" + line + "'");
    }
  }

  auto column = [&](const char* name) -> std::size_t {
    const auto it = std::find(vertex_props.begin(), vertex_props.end(), name);
    if (it == vertex_props.end()) fail(number, std::string("vertex has no '") + name + "' property");
    return static_cast<std::size_t>(it - vertex_props.begin());
  };
  const std::size_t cx = column("x"), cy = column("y"), cz = column("z");

  std::vector<MapPoint> points;
  points.reserve(vertex_count);
  for (std::size_t i = 0; i < vertex_count; ++i) {
    if (!next_line()) fail(number + 1, "expected " + std::to_string(vertex_count) + " vertices");
    std::istringstream words(line);
    std::vector<std::string> values;
    for (std::string w; words >> w;) values.push_back(w);
    if (values.size() != vertex_props.size()) {
      fail(number, "expected " + std::to_string(vertex_props.size()) + " values");
    }
    MapPoint p;
    p.id = i;
    p.position = {to_double(values[cx], number), to_double(values[cy], number),
                  to_double(values[cz], number)};
    points.push_back(p);
  }
  return points;
}

std::vector<MapPoint> load_points(const std::filesystem::path& path, const std::string& format) {
  const PointFormat f = point_format(format, path);
  return load_with_context(path, [&](std::istream& in) {
    return f == PointFormat::csv ? read_points_csv(in) : read_points_ply(in);
  });
}

std::vector<Correspondence> read_matches_csv(std::istream& in) {
  std::vector<Correspondence> matches;
  for_each_row(in, [&](const std::vector<std::string>& f, std::size_t line) {
    expect_fields(f, 5, 6, line);
    Correspondence c;
    c.id = to_id(f[0], line);
    c.ref_point = {to_double(f[1], line), to_double(f[2], line)};
    c.cur_point = {to_double(f[3], line), to_double(f[4], line)};
    if (f.size() == 6) c.prior_label = to_label(f[5], line);
    matches.push_back(c);
  });
  return matches;
}

std::vector<Correspondence> load_matches(const std::filesystem::path& path) {
  return load_with_context(path, [](std::istream& in) { return read_matches_csv(in); });
}

std::vector<MaskEntry> read_mask_csv(std::istream& in) {
  std::vector<MaskEntry> mask;
  for_each_row(in, [&](const std::vector<std::string>& f, std::size_t line) {
    expect_fields(f, 2, 2, line);
    mask.push_back({to_id(f[0], line), to_label(f[1], line)});
  });
  return mask;
}

std::vector<MaskEntry> load_mask(const std::filesystem::path& path) {
  return load_with_context(path, [](std::istream& in) { return read_mask_csv(in); });
}

void apply_mask(std::vector<MapPoint>& points, const std::vector<MaskEntry>& mask) {
  std::map<std::size_t, std::size_t> index;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!index.emplace(points[i].id, i).second) {
      throw DataError("duplicate point id " + std::to_string(points[i].id));
    }
    points[i].prior_label.reset();
  }
  std::vector<char> seen(points.size(), 0);
  for (const auto& entry : mask) {
    const auto it = index.find(entry.id);
    if (it == index.end()) throw DataError("mask names unknown point id " + std::to_string(entry.id));
    if (seen[it->second]++) throw DataError("mask repeats point id " + std::to_string(entry.id));
    points[it->second].prior_label = entry.label;
  }
}

void compact_labels(std::vector<MapPoint>& points) { compact(points); }
void compact_labels(std::vector<Correspondence>& matches) { compact(matches); }

void write_points_csv(std::ostream& out, const std::vector<MapPoint>& points) {
  out << std::setprecision(17) << "id,x,y,z,label\n";
  for (const auto& p : points) {
    out << p.id << ',' << p.position.x() << ',' << p.position.y() << ',' << p.position.z() << ','
        << label_field(p.prior_label) << '\n';
  }
}

void write_points_ply(std::ostream& out, const std::vector<MapPoint>& points) {
  out << "ply\nformat ascii 1.0\nelement vertex " << points.size()
      << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  out << std::setprecision(17);
  for (const auto& p : points) {
    out << p.position.x() << ' ' << p.position.y() << ' ' << p.position.z() << '\n';
  }
}

void write_matches_csv(std::ostream& out, const std::vector<Correspondence>& matches) {
  out << std::setprecision(17) << "id,xr,yr,xc,yc,label\n";
  for (const auto& c : matches) {
    out << c.id << ',' << c.ref_point.x() << ',' << c.ref_point.y() << ',' << c.cur_point.x() << ','
        << c.cur_point.y() << ',' << label_field(c.prior_label) << '\n';
  }
}

void write_mask_csv(std::ostream& out, const std::vector<MapPoint>& points) {
  out << "id,label\n";
  for (const auto& p : points) out << p.id << ',' << label_field(p.prior_label) << '\n';
}

}  // namespace seqgc
