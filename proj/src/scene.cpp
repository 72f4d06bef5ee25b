#include "seqgc/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "seqgc/config.hpp"
#include "seqgc/sampler.hpp"

namespace seqgc {
namespace {

std::pair<Eigen::Vector3d, Eigen::Vector3d> patch_basis(const PatchSpec& patch) {
  const Eigen::Vector3d n = patch.plane.normal.normalized();
  Eigen::Vector3d u = patch.u_axis - patch.u_axis.dot(n) * n;
  if (u.norm() < 1e-9) {
    Eigen::Index axis = 0;
    n.cwiseAbs().minCoeff(&axis);
    const Eigen::Vector3d e = Eigen::Vector3d::Unit(axis);
    u = e - e.dot(n) * n;
  }
  u.normalize();
  return {u, n.cross(u)};
}

Eigen::Vector3d patch_center(const PatchSpec& patch) {
  return patch.center - patch.plane.signed_distance(patch.center) * patch.plane.normal.normalized();
}

double parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  double v = 0.0;
  std::string extra;
  if (!(in >> v) || (in >> extra)) {
    throw std::invalid_argument("scene key '" + key + "': not a number: '" + value + "'");
  }
  return v;
}

// Instance labels with leak and unlabeled corruption applied; records the
// corruption in `truth`.
std::vector<std::optional<int>> corrupt_labels(
    const std::vector<Eigen::Vector3d>& positions, const std::vector<int>& instance,
    const std::vector<Eigen::Vector3d>& centers, const SceneSpec& spec, std::mt19937_64& rng,
    GroundTruth& truth) {
  const std::size_t n = positions.size();
  const int k = static_cast<int>(centers.size());
  std::vector<std::optional<int>> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = instance[i];

  truth.boundary_counts.assign(centers.size(), 0);
  if (k >= 2 && spec.leak_fraction > 0.0) {
    std::vector<std::optional<int>> leaked_labels = labels;
    for (int i = 0; i < k; ++i) {
      const int next = (i + 1) % k;
      std::vector<std::size_t> members;
      for (std::size_t p = 0; p < n; ++p) {
        if (truth.point_plane[p] == i) members.push_back(p);
      }
      truth.boundary_counts[static_cast<std::size_t>(i)] = members.size();
      std::stable_sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
        return (positions[a] - centers[next]).squaredNorm() <
               (positions[b] - centers[next]).squaredNorm();
      });
      const auto count = static_cast<std::size_t>(
          std::floor(spec.leak_fraction * static_cast<double>(members.size())));
      for (std::size_t m = 0; m < count; ++m) {
        leaked_labels[members[m]] = next;
        truth.leaked.push_back(members[m]);
      }
    }
    labels = std::move(leaked_labels);
    std::sort(truth.leaked.begin(), truth.leaked.end());
  }

  const auto drop = static_cast<std::size_t>(std::floor(spec.unlabeled_fraction * static_cast<double>(n)));
  if (drop > 0) {
    truth.unlabeled = sample_without_replacement(n, drop, rng);
    std::sort(truth.unlabeled.begin(), truth.unlabeled.end());
    for (const auto p : truth.unlabeled) labels[p].reset();
  }
  return labels;
}

}  // namespace

void validate(const SceneSpec& spec) {
  auto fraction = [](double f) { return f >= 0.0 && f <= 1.0; };
  if (spec.patches.empty()) throw std::invalid_argument("scene needs at least one plane");
  if (spec.points_per_plane == 0) throw std::invalid_argument("points_per_plane must be positive");
  if (!fraction(spec.outlier_fraction) || spec.outlier_fraction >= 1.0) {
    throw std::invalid_argument("outlier_fraction must lie in [0, 1)");
  }
  if (!fraction(spec.leak_fraction) || !fraction(spec.unlabeled_fraction)) {
    throw std::invalid_argument("leak and unlabeled fractions must lie in [0, 1]");
  }
  if (!(spec.noise_sigma >= 0.0)) throw std::invalid_argument("noise_sigma must be non-negative");
  for (const auto& p : spec.patches) {
    if (!(p.half_u > 0.0) || !(p.half_v > 0.0)) {
      throw std::invalid_argument("patch extents must be positive");
    }
  }
}

SceneSpec parse_scene_spec(std::istream& in) {
  SceneSpec spec;
  for (const auto& [key, value] : read_key_values(in)) {
    if (key == "plane") {
      std::istringstream fields(value);
      double v[9];
      for (double& x : v) {
        if (!(fields >> x)) {
          throw std::invalid_argument("scene key 'plane' expects nx ny nz d cx cy cz half_u half_v");
        }
      }
      PatchSpec patch;
      patch.plane = Plane::canonical({v[0], v[1], v[2]}, v[3]);
      patch.center = {v[4], v[5], v[6]};
      patch.half_u = v[7];
      patch.half_v = v[8];
      spec.patches.push_back(patch);
    } else if (key == "seed") {
      spec.seed = std::stoull(value);
    } else if (key == "points_per_plane") {
      spec.points_per_plane = static_cast<std::size_t>(parse_number(key, value));
    } else if (key == "outlier_fraction") {
      spec.outlier_fraction = parse_number(key, value);
    } else if (key == "noise_sigma") {
      spec.noise_sigma = parse_number(key, value);
    } else if (key == "leak_fraction") {
      spec.leak_fraction = parse_number(key, value);
    } else if (key == "unlabeled_fraction") {
      spec.unlabeled_fraction = parse_number(key, value);
    } else {
      throw std::invalid_argument("unknown scene key '" + key + "'");
    }
  }
  validate(spec);
  return spec;
}

Scene synth_scene(const SceneSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  Scene scene;
  GroundTruth& truth = scene.truth;
  std::vector<Eigen::Vector3d> positions;
  std::vector<int> instance;
  std::vector<Eigen::Vector3d> centers;

  for (std::size_t k = 0; k < spec.patches.size(); ++k) {
    const PatchSpec& patch = spec.patches[k];
    truth.planes.push_back(Plane::canonical(patch.plane.normal, patch.plane.offset));
    const auto [u, v] = patch_basis(patch);
    const Eigen::Vector3d c = patch_center(patch);
    centers.push_back(c);
    std::uniform_real_distribution<double> su(-patch.half_u, patch.half_u);
    std::uniform_real_distribution<double> sv(-patch.half_v, patch.half_v);
    for (std::size_t i = 0; i < spec.points_per_plane; ++i) {
      const double a = su(rng);
      const double b = sv(rng);
      Eigen::Vector3d p = c + a * u + b * v;
      if (spec.noise_sigma > 0.0) {
        const double nx = noise(rng), ny = noise(rng), nz = noise(rng);
        p += spec.noise_sigma * Eigen::Vector3d(nx, ny, nz);
      }
      positions.push_back(p);
      instance.push_back(static_cast<int>(k));
      truth.point_plane.push_back(static_cast<int>(k));
    }
  }

  const std::size_t planar = positions.size();
  const auto outliers = static_cast<std::size_t>(std::llround(
      spec.outlier_fraction / (1.0 - spec.outlier_fraction) * static_cast<double>(planar)));
  if (outliers > 0) {
    Eigen::Vector3d lo = positions.front();
    Eigen::Vector3d hi = lo;
    for (const auto& p : positions) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const Eigen::Vector3d margin = Eigen::Vector3d::Constant(0.1);
    lo -= margin;
    hi += margin;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < outliers; ++i) {
      const double x = unit(rng), y = unit(rng), z = unit(rng);
      const Eigen::Vector3d p = lo + Eigen::Vector3d(x, y, z).cwiseProduct(hi - lo);
      std::size_t nearest = 0;
      for (std::size_t k = 1; k < centers.size(); ++k) {
        if ((p - centers[k]).squaredNorm() < (p - centers[nearest]).squaredNorm()) nearest = k;
      }
      positions.push_back(p);
      instance.push_back(static_cast<int>(nearest));
      truth.point_plane.push_back(-1);
    }
  }

  const auto labels = corrupt_labels(positions, instance, centers, spec, rng, truth);
  scene.points.resize(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    scene.points[i] = MapPoint{positions[i], labels[i], i};
  }
  scene.prior = SegmentationPrior::from_labels(labels);
  return scene;
}

SceneSpec two_plane_spec(std::uint64_t seed, double leak, double noise, double outliers,
                         std::size_t points_per_plane, double dihedral_deg) {
  const double alpha = dihedral_deg * std::numbers::pi / 180.0;
  const Eigen::Vector3d origin(0.3, -0.2, 1.5);
  const Eigen::Vector3d y = Eigen::Vector3d::UnitY();

  PatchSpec a;
  a.u_axis = Eigen::Vector3d::UnitX();
  a.plane = Plane::canonical(Eigen::Vector3d::UnitZ(), -origin.z());
  a.center = origin + 0.5 * a.u_axis;

  PatchSpec b;
  b.u_axis = Eigen::Vector3d(-std::cos(alpha), 0.0, std::sin(alpha));
  const Eigen::Vector3d nb = b.u_axis.cross(y).normalized();
  b.plane = Plane::canonical(nb, -nb.dot(origin));
  b.center = origin + 0.5 * b.u_axis;

  SceneSpec spec;
  spec.patches = {a, b};
  spec.points_per_plane = points_per_plane;
  spec.outlier_fraction = outliers;
  spec.noise_sigma = noise;
  spec.leak_fraction = leak;
  spec.seed = seed;
  return spec;
}

MatchScene synth_matches(const SceneSpec& spec, const Intrinsics& k, const Pose& second,
                         ImageSize image, double pixel_noise) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  Eigen::Matrix3d kmat;
  kmat << k.fx, 0.0, k.cx, 0.0, k.fy, k.cy, 0.0, 0.0, 1.0;
  const Eigen::Matrix3d rot = second.rotation.toRotationMatrix();

  auto project = [&](const Eigen::Vector3d& x) -> std::optional<Eigen::Vector2d> {
    if (!(x.z() > 1e-6)) return std::nullopt;
    const Eigen::Vector2d px(k.fx * x.x() / x.z() + k.cx, k.fy * x.y() / x.z() + k.cy);
    if (px.x() < 0.0 || px.x() >= image.width || px.y() < 0.0 || px.y() >= image.height) {
      return std::nullopt;
    }
    return px;
  };
  auto in_image = [&](const Eigen::Vector2d& p) {
    return p.x() >= 0.0 && p.x() < image.width && p.y() >= 0.0 && p.y() < image.height;
  };

  MatchScene scene;
  scene.image = image;
  GroundTruth truth;
  std::vector<Eigen::Vector3d> positions;
  std::vector<int> instance;
  std::vector<Eigen::Vector3d> centers;
  std::vector<Correspondence> matches;

  for (std::size_t p = 0; p < spec.patches.size(); ++p) {
    const PatchSpec& patch = spec.patches[p];
    const Plane plane = Plane::canonical(patch.plane.normal, patch.plane.offset);
    // n.X + d = 0  =>  X2 = (R - t n^T / d) X
    const Eigen::Matrix3d h = kmat * (rot - second.translation * plane.normal.transpose() / plane.offset) *
                              kmat.inverse();
    const auto homography = Homography::from_matrix(h);
    if (!homography) throw std::invalid_argument("scene plane yields a singular homography");
    scene.homographies.push_back(*homography);

    const auto [u, v] = patch_basis(patch);
    const Eigen::Vector3d c = patch_center(patch);
    centers.push_back(c);
    std::uniform_real_distribution<double> su(-patch.half_u, patch.half_u);
    std::uniform_real_distribution<double> sv(-patch.half_v, patch.half_v);
    std::size_t made = 0;
    for (std::size_t attempt = 0; made < spec.points_per_plane && attempt < 100 * spec.points_per_plane;
         ++attempt) {
      const double a = su(rng);
      const double b = sv(rng);
      const Eigen::Vector3d x = c + a * u + b * v;
      const auto ref = project(x);
      const auto cur = project(second.transform(x));
      if (!ref || !cur) continue;
      Correspondence m;
      m.ref_point = *ref;
      m.cur_point = *cur;
      if (pixel_noise > 0.0) {
        const double n1 = noise(rng), n2 = noise(rng);
        m.cur_point += pixel_noise * Eigen::Vector2d(n1, n2);
      }
      if (!in_image(m.cur_point)) continue;
      matches.push_back(m);
      positions.push_back(x);
      instance.push_back(static_cast<int>(p));
      truth.point_plane.push_back(static_cast<int>(p));
      ++made;
    }
  }

  const std::size_t planar = matches.size();
  const auto outliers = static_cast<std::size_t>(std::llround(
      spec.outlier_fraction / (1.0 - spec.outlier_fraction) * static_cast<double>(planar)));
  std::uniform_real_distribution<double> ux(0.0, image.width);
  std::uniform_real_distribution<double> uy(0.0, image.height);
  for (std::size_t i = 0; i < outliers; ++i) {
    Correspondence m;
    const double x1 = ux(rng), y1 = uy(rng), x2 = ux(rng), y2 = uy(rng);
    m.ref_point = {x1, y1};
    m.cur_point = {x2, y2};
    // Label by the nearest patch center in the reference image.
    std::size_t nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < centers.size(); ++p) {
      const auto pc = project(centers[p]);
      if (!pc) continue;
      const double d = (*pc - m.ref_point).squaredNorm();
      if (d < best) {
        best = d;
        nearest = p;
      }
    }
    matches.push_back(m);
    positions.push_back(kmat.inverse() * m.ref_point.homogeneous());
    instance.push_back(static_cast<int>(nearest));
    truth.point_plane.push_back(-1);
  }

  const auto labels = corrupt_labels(positions, instance, centers, spec, rng, truth);
  for (std::size_t i = 0; i < matches.size(); ++i) {
    matches[i].id = i;
    matches[i].prior_label = labels[i];
  }
  scene.matches = std::move(matches);
  scene.prior = SegmentationPrior::from_labels(labels);
  scene.match_plane = std::move(truth.point_plane);
  return scene;
}

}  // namespace seqgc

namespace seqgc {

BundleScene synth_bundle(std::uint64_t seed, double pixel_noise, double rotation_deg,
                         double translation_fraction, double point_sigma) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto random_axis = [&] {
    const double x = gauss(rng), y = gauss(rng), z = gauss(rng);
    return Eigen::Vector3d(x, y, z).normalized();
  };

  Bundle b;
  b.intrinsics = Intrinsics{500.0, 500.0, 320.0, 240.0};
  // Camera centers on a short arc, all looking roughly down +z.
  for (int i = 0; i < 4; ++i) {
    const Eigen::Vector3d center(-0.45 + 0.3 * i, -0.1 + 0.05 * i, -0.2 * i);
    const Eigen::Quaterniond r(Eigen::AngleAxisd(0.04 * (i - 1.5), Eigen::Vector3d::UnitY()));
    Pose pose;
    pose.rotation = r;
    pose.translation = -(r * center);
    b.cameras.push_back(pose);
  }
  b.planes.push_back(Plane::canonical({0, -1, 0}, 1.0));  // floor, y = 1
  b.planes.push_back(Plane::canonical({0, 0, 1}, -6.0));  // wall, z = 6
  for (int i = 0; i < 60; ++i) {
    b.points.emplace_back(-1.5 + 3.0 * unit(rng), 1.0, 3.0 + 2.5 * unit(rng));
    b.associations.push_back({b.points.size() - 1, 0});
  }
  for (int i = 0; i < 60; ++i) {
    b.points.emplace_back(-2.0 + 4.0 * unit(rng), -1.5 + 2.4 * unit(rng), 6.0);
    b.associations.push_back({b.points.size() - 1, 1});
  }
  for (std::size_t c = 0; c < b.cameras.size(); ++c) {
    for (std::size_t p = 0; p < b.points.size(); ++p) {
      const Eigen::Vector3d x = b.cameras[c].transform(b.points[p]);
      const Eigen::Vector2d px(b.intrinsics.fx * x.x() / x.z() + b.intrinsics.cx,
                               b.intrinsics.fy * x.y() / x.z() + b.intrinsics.cy);
      b.observations.push_back({c, p, px});
    }
  }
  check_consistency(b);

  BundleScene scene;
  scene.truth = b;
  Bundle& q = scene.perturbed;
  q = b;
  for (auto& obs : q.observations) {
    const double nx = gauss(rng), ny = gauss(rng);
    obs.pixel += pixel_noise * Eigen::Vector2d(nx, ny);
  }
  const double angle = rotation_deg * std::numbers::pi / 180.0;
  for (std::size_t c = 1; c < q.cameras.size(); ++c) {
    Pose& pose = q.cameras[c];
    pose.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(angle, random_axis())) * pose.rotation;
    pose.translation += translation_fraction * pose.translation.norm() * random_axis();
  }
  for (auto& x : q.points) {
    const double nx = gauss(rng), ny = gauss(rng), nz = gauss(rng);
    x += point_sigma * Eigen::Vector3d(nx, ny, nz);
  }
  for (auto& plane : q.planes) {
    const Eigen::Vector3d n = Eigen::AngleAxisd(angle, random_axis()) * plane.normal;
    plane = Plane::canonical(n, plane.offset + point_sigma * gauss(rng));
  }
  return scene;
}

}  // namespace seqgc
