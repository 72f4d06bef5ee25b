#include "seqgc/estimators.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Geometry>
#include <Eigen/SVD>

namespace seqgc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::optional<Eigen::Vector2d> transfer(const Eigen::Matrix3d& m, const Eigen::Vector2d& p) {
  const Eigen::Vector3d q = m * p.homogeneous();
  if (std::abs(q.z()) < 1e-12) return std::nullopt;
  return q.hnormalized();
}

// Similarity taking the points to centroid 0 and mean distance sqrt(2).
Eigen::Matrix3d normalizing_transform(std::span<const Eigen::Vector2d> pts) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  const double s = mean_dist > 0.0 ? std::sqrt(2.0) / mean_dist : 1.0;
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  t(0, 0) = s;
  t(1, 1) = s;
  t(0, 2) = -s * centroid.x();
  t(1, 2) = -s * centroid.y();
  return t;
}

double triangle_area(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  const Eigen::Vector2d u = b - a;
  const Eigen::Vector2d v = c - a;
  return 0.5 * std::abs(u.x() * v.y() - u.y() * v.x());
}

bool has_colinear_triple(std::span<const Eigen::Vector2d> pts) {
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b)
      for (std::size_t c = b + 1; c < pts.size(); ++c)
        if (triangle_area(pts[a], pts[b], pts[c]) < 1e-9) return true;
  return false;
}

std::optional<Homography> ndlt(std::span<const Correspondence> matches, bool minimal) {
  const std::size_t n = matches.size();
  std::vector<Eigen::Vector2d> ref(n);
  std::vector<Eigen::Vector2d> cur(n);
  for (std::size_t i = 0; i < n; ++i) {
    ref[i] = matches[i].ref_point;
    cur[i] = matches[i].cur_point;
  }
  const Eigen::Matrix3d t_ref = normalizing_transform(ref);
  const Eigen::Matrix3d t_cur = normalizing_transform(cur);
  for (std::size_t i = 0; i < n; ++i) {
    ref[i] = (t_ref * ref[i].homogeneous()).hnormalized();
    cur[i] = (t_cur * cur[i].homogeneous()).hnormalized();
  }
  if (minimal && (has_colinear_triple(ref) || has_colinear_triple(cur))) return std::nullopt;

  Eigen::MatrixXd a(2 * n, 9);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = ref[i].x(), y = ref[i].y();
    const double u = cur[i].x(), v = cur[i].y();
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::Matrix<double, 9, 1> h;
  if (n == 4) {
    // 8x9: pad to square so the full right singular basis is available.
    Eigen::Matrix<double, 9, 9> sq = Eigen::Matrix<double, 9, 9>::Zero();
    sq.topRows(8) = a;
    Eigen::JacobiSVD<Eigen::Matrix<double, 9, 9>> svd(sq, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv(7) <= 1e-12 * sv(0)) return std::nullopt;
    h = svd.matrixV().col(8);
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv(7) <= 1e-12 * sv(0)) return std::nullopt;
    h = svd.matrixV().col(8);
  }
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  const Eigen::Matrix3d denorm = t_cur.inverse() * hn * t_ref;
  return Homography::from_matrix(denorm);
}

}  // namespace

double ste(const Homography& h, const Correspondence& c) {
  const auto fwd = transfer(h.matrix(), c.ref_point);
  const auto bwd = transfer(h.inverse(), c.cur_point);
  if (!fwd || !bwd) return kInf;
  return std::sqrt((c.cur_point - *fwd).squaredNorm() + (c.ref_point - *bwd).squaredNorm());
}

double point_plane_distance(const Plane& plane, const Eigen::Vector3d& v) {
  return std::abs(plane.normal.dot(v) + plane.offset) / plane.normal.norm();
}

double point_plane_distance(const Plane& plane, const MapPoint& v) {
  return point_plane_distance(plane, v.position);
}

std::optional<Homography> fit_homography_minimal(std::span<const Correspondence> sample) {
  if (sample.size() != kHomographySampleSize) {
    throw std::invalid_argument("minimal homography sample needs exactly 4 correspondences");
  }
  return ndlt(sample, true);
}

std::optional<Homography> fit_homography_lsq(std::span<const Correspondence> inliers) {
  if (inliers.size() < kHomographySampleSize) return std::nullopt;
  if (inliers.size() == kHomographySampleSize) return ndlt(inliers, true);
  return ndlt(inliers, false);
}

std::optional<Plane> fit_plane_minimal(std::span<const Eigen::Vector3d> sample) {
  if (sample.size() != kPlaneSampleSize) {
    throw std::invalid_argument("minimal plane sample needs exactly 3 points");
  }
  const Eigen::Vector3d e1 = sample[1] - sample[0];
  const Eigen::Vector3d e2 = sample[2] - sample[0];
  const Eigen::Vector3d n = e1.cross(e2);
  const double scale = e1.norm() * e2.norm();
  if (!(n.norm() >= 1e-12 * scale) || scale == 0.0) return std::nullopt;
  return Plane::canonical(n, -n.dot(sample[0]));
}

std::optional<Plane> fit_plane_minimal(std::span<const MapPoint> sample) {
  if (sample.size() != kPlaneSampleSize) {
    throw std::invalid_argument("minimal plane sample needs exactly 3 points");
  }
  const std::array<Eigen::Vector3d, 3> pts = {sample[0].position, sample[1].position,
                                               sample[2].position};
  return fit_plane_minimal(std::span<const Eigen::Vector3d>(pts));
}

std::optional<Plane> fit_plane_lsq(std::span<const Eigen::Vector3d> inliers) {
  const std::size_t n = inliers.size();
  if (n < kPlaneSampleSize) return std::nullopt;
  if (n == kPlaneSampleSize) return fit_plane_minimal(inliers);

  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : inliers) centroid += p;
  centroid /= static_cast<double>(n);
  Eigen::MatrixX3d centered(n, 3);
  for (std::size_t i = 0; i < n; ++i) centered.row(i) = (inliers[i] - centroid).transpose();

  Eigen::JacobiSVD<Eigen::MatrixX3d> svd(centered, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(1) > 1e-12 * sv(0))) return std::nullopt;  // colinear or coincident
  const Eigen::Vector3d normal = svd.matrixV().col(2);
  return Plane::canonical(normal, -normal.dot(centroid));
}

std::optional<Plane> fit_plane_lsq(std::span<const MapPoint> inliers) {
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(inliers.size());
  for (const auto& p : inliers) pts.push_back(p.position);
  return fit_plane_lsq(std::span<const Eigen::Vector3d>(pts));
}

double model_residual(std::span<const double> distances, double threshold,
                      std::size_t min_support) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const double d : distances) {
    if (d < threshold) {
      sum += d;
      ++count;
    }
  }
  if (count == 0 || count < min_support) return kInf;
  return sum / static_cast<double>(count);
}

double model_residual(const Plane& plane, std::span<const MapPoint> points, double threshold,
                      std::size_t min_support) {
  std::vector<double> d;
  d.reserve(points.size());
  for (const auto& p : points) d.push_back(point_plane_distance(plane, p));
  return model_residual(d, threshold, min_support);
}

double model_residual(const Homography& h, std::span<const Correspondence> points,
                      double threshold, std::size_t min_support) {
  std::vector<double> d;
  d.reserve(points.size());
  for (const auto& c : points) d.push_back(ste(h, c));
  return model_residual(d, threshold, min_support);
}

}  // namespace seqgc
