#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "seqgc/types.hpp"

namespace seqgc {

/// Bad invocation: unknown format, missing option.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class PointFormat { csv, ply };

/// "csv" or "ply"; an empty name is resolved from the file extension.
/// Throws UsageError otherwise.
PointFormat point_format(const std::string& name, const std::filesystem::path& path = {});

/// `id,x,y,z[,label]`. An empty label or -1 means unlabeled. An optional
/// header line starting with "id" is skipped.
std::vector<MapPoint> read_points_csv(std::istream& in);
/// ASCII PLY whose vertex element carries x, y, z (other properties ignored).
/// Points get ids 0..n-1 and no label.
std::vector<MapPoint> read_points_ply(std::istream& in);
std::vector<MapPoint> load_points(const std::filesystem::path& path, const std::string& format = "");

/// `id,xr,yr,xc,yc[,label]`.
std::vector<Correspondence> read_matches_csv(std::istream& in);
std::vector<Correspondence> load_matches(const std::filesystem::path& path);

struct MaskEntry {
  std::size_t id = 0;
  std::optional<int> label;
};

/// `id,label`.
std::vector<MaskEntry> read_mask_csv(std::istream& in);
std::vector<MaskEntry> load_mask(const std::filesystem::path& path);

/// Sets each point's label from the mask entry with the same id; points
/// without an entry become unlabeled. Throws DataError on duplicate or
/// unknown ids.
void apply_mask(std::vector<MapPoint>& points, const std::vector<MaskEntry>& mask);

/// Renumbers labels densely in ascending order of the original values.
void compact_labels(std::vector<MapPoint>& points);
void compact_labels(std::vector<Correspondence>& matches);

void write_points_csv(std::ostream& out, const std::vector<MapPoint>& points);
void write_points_ply(std::ostream& out, const std::vector<MapPoint>& points);
void write_matches_csv(std::ostream& out, const std::vector<Correspondence>& matches);
void write_mask_csv(std::ostream& out, const std::vector<MapPoint>& points);

}  // namespace seqgc
