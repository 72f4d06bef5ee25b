#include "seqgc/bundle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace seqgc {
namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

double huber(double squared_norm, double delta) {
  if (squared_norm <= delta * delta) return squared_norm;
  return 2.0 * delta * std::sqrt(squared_norm) - delta * delta;
}

// d huber / d squared_norm
double huber_weight(double squared_norm, double delta) {
  if (squared_norm <= delta * delta) return 1.0;
  return delta / std::sqrt(squared_norm);
}

// Parameter block offsets; -1 for blocks held constant.
struct Layout {
  std::vector<int> camera;
  std::vector<int> point;
  std::vector<int> plane;
  int size = 0;
};

Layout make_layout(const Bundle& b, const RefineOptions& o) {
  Layout l;
  l.camera.assign(b.cameras.size(), -1);
  l.point.assign(b.points.size(), -1);
  l.plane.assign(b.planes.size(), -1);
  for (std::size_t i = std::min(o.fixed_cameras, b.cameras.size()); i < b.cameras.size(); ++i) {
    l.camera[i] = l.size;
    l.size += 6;
  }
  if (!o.fix_structure) {
    for (auto& p : l.point) {
      p = l.size;
      l.size += 3;
    }
    for (auto& p : l.plane) {
      p = l.size;
      l.size += 3;
    }
  }
  return l;
}

struct State {
  std::vector<Pose> cameras;
  std::vector<Eigen::Vector3d> points;
  std::vector<SphericalPlane> planes;
};

State to_state(const Bundle& b) {
  State s{b.cameras, b.points, {}};
  s.planes.reserve(b.planes.size());
  for (const auto& p : b.planes) {
    s.planes.push_back(plane_to_spherical(Plane{p.normal.normalized(), p.offset / p.normal.norm()}));
  }
  return s;
}

Bundle from_state(const Bundle& shape, const State& s) {
  Bundle out = shape;
  out.cameras = s.cameras;
  out.points = s.points;
  for (std::size_t k = 0; k < s.planes.size(); ++k) {
    const Plane p = spherical_to_plane(s.planes[k]);
    out.planes[k] = Plane::canonical(p.normal, p.offset);
  }
  return out;
}

double state_cost(const Bundle& b, const State& s, const RefineOptions& o) {
  double cost = 0.0;
  for (const auto& obs : b.observations) {
    const auto t = reprojection_term(s.cameras[obs.camera], b.intrinsics, s.points[obs.point], obs.pixel);
    if (!t.valid) continue;
    cost += huber(t.residual.squaredNorm(), o.reprojection_huber);
  }
  for (const auto& a : b.associations) {
    const auto t = plane_term(s.planes[a.plane], s.points[a.point]);
    cost += o.plane_weight * huber(t.residual * t.residual, o.plane_huber);
  }
  return cost;
}

struct Normal {
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd gradient;
};

template <int R, int A, int B>
void accumulate(Normal& ne, int off_a, const Eigen::Matrix<double, R, A>& ja, int off_b,
                const Eigen::Matrix<double, R, B>& jb, const Eigen::Matrix<double, R, 1>& r,
                double w) {
  if (off_a >= 0) {
    const Eigen::Matrix<double, A, A> haa = w * ja.transpose() * ja;
    for (int i = 0; i < A; ++i)
      for (int j = 0; j < A; ++j) ne.triplets.emplace_back(off_a + i, off_a + j, haa(i, j));
    ne.gradient.segment<A>(off_a) += w * ja.transpose() * r;
  }
  if (off_b >= 0) {
    const Eigen::Matrix<double, B, B> hbb = w * jb.transpose() * jb;
    for (int i = 0; i < B; ++i)
      for (int j = 0; j < B; ++j) ne.triplets.emplace_back(off_b + i, off_b + j, hbb(i, j));
    ne.gradient.segment<B>(off_b) += w * jb.transpose() * r;
  }
  if (off_a >= 0 && off_b >= 0) {
    const Eigen::Matrix<double, A, B> hab = w * ja.transpose() * jb;
    for (int i = 0; i < A; ++i)
      for (int j = 0; j < B; ++j) {
        ne.triplets.emplace_back(off_a + i, off_b + j, hab(i, j));
        ne.triplets.emplace_back(off_b + j, off_a + i, hab(i, j));
      }
  }
}

State apply_step(const State& s, const Layout& l, const Eigen::VectorXd& delta) {
  State out = s;
  for (std::size_t i = 0; i < s.cameras.size(); ++i) {
    if (l.camera[i] >= 0) out.cameras[i] = retract(s.cameras[i], delta.segment<6>(l.camera[i]));
  }
  for (std::size_t j = 0; j < s.points.size(); ++j) {
    if (l.point[j] >= 0) out.points[j] += delta.segment<3>(l.point[j]);
  }
  for (std::size_t k = 0; k < s.planes.size(); ++k) {
    if (l.plane[k] < 0) continue;
    out.planes[k].azimuth += delta(l.plane[k]);
    out.planes[k].elevation += delta(l.plane[k] + 1);
    out.planes[k].offset += delta(l.plane[k] + 2);
  }
  return out;
}

}  // namespace

Pose retract(const Pose& pose, const Eigen::Matrix<double, 6, 1>& xi) {
  const Eigen::Vector3d rho = xi.head<3>();
  const Eigen::Vector3d omega = xi.tail<3>();
  const double theta = omega.norm();
  const Eigen::Matrix3d w = skew(omega);
  Eigen::Matrix3d rot;
  Eigen::Matrix3d v;
  if (theta < 1e-10) {
    rot = Eigen::Matrix3d::Identity() + w;
    v = Eigen::Matrix3d::Identity() + 0.5 * w;
  } else {
    rot = Eigen::AngleAxisd(theta, omega / theta).toRotationMatrix();
    const double t2 = theta * theta;
    v = Eigen::Matrix3d::Identity() + (1.0 - std::cos(theta)) / t2 * w +
        (theta - std::sin(theta)) / (t2 * theta) * w * w;
  }
  Pose out;
  out.rotation = Eigen::Quaterniond(rot * pose.rotation.toRotationMatrix()).normalized();
  out.translation = rot * pose.translation + v * rho;
  return out;
}

void check_consistency(const Bundle& b) {
  for (const auto& o : b.observations) {
    if (o.camera >= b.cameras.size() || o.point >= b.points.size()) {
      throw std::invalid_argument("observation references a missing camera or point");
    }
  }
  for (const auto& a : b.associations) {
    if (a.point >= b.points.size() || a.plane >= b.planes.size()) {
      throw std::invalid_argument("association references a missing point or plane");
    }
  }
}

ReprojectionTerm reprojection_term(const Pose& pose, const Intrinsics& k,
                                   const Eigen::Vector3d& point, const Eigen::Vector2d& observed) {
  ReprojectionTerm t;
  const Eigen::Vector3d x = pose.transform(point);
  if (!(x.z() > 1e-9)) {
    t.valid = false;
    t.residual.setZero();
    t.d_pose.setZero();
    t.d_point.setZero();
    return t;
  }
  const double iz = 1.0 / x.z();
  const Eigen::Vector2d projected(k.fx * x.x() * iz + k.cx, k.fy * x.y() * iz + k.cy);
  t.residual = observed - projected;

  Eigen::Matrix<double, 2, 3> d_proj;
  d_proj << k.fx * iz, 0.0, -k.fx * x.x() * iz * iz, 0.0, k.fy * iz, -k.fy * x.y() * iz * iz;
  Eigen::Matrix<double, 3, 6> d_x;
  d_x.leftCols<3>() = Eigen::Matrix3d::Identity();
  d_x.rightCols<3>() = -skew(x);
  t.d_pose = -d_proj * d_x;
  t.d_point = -d_proj * pose.rotation.toRotationMatrix();
  return t;
}

PlaneTerm plane_term(const SphericalPlane& plane, const Eigen::Vector3d& point) {
  const double ca = std::cos(plane.azimuth), sa = std::sin(plane.azimuth);
  const double ce = std::cos(plane.elevation), se = std::sin(plane.elevation);
  const Eigen::Vector3d n(ce * ca, ce * sa, se);
  PlaneTerm t;
  t.residual = n.dot(point) + plane.offset;
  const Eigen::Vector3d dn_da(-ce * sa, ce * ca, 0.0);
  const Eigen::Vector3d dn_de(-se * ca, -se * sa, ce);
  t.d_plane << dn_da.dot(point), dn_de.dot(point), 1.0;
  t.d_point = n.transpose();
  return t;
}

RefineOptions refine_options_from(const FitConfig& cfg) {
  RefineOptions o;
  o.reprojection_huber = cfg.ste_threshold;
  o.plane_huber = cfg.distance_threshold;
  return o;
}

double bundle_cost(const Bundle& b, const RefineOptions& options) {
  return state_cost(b, to_state(b), options);
}

Bundle joint_refine(const Bundle& b, const RefineOptions& options, RefineReport* report) {
  check_consistency(b);
  const Layout layout = make_layout(b, options);
  State state = to_state(b);
  double cost = state_cost(b, state, options);

  RefineReport rep;
  rep.initial_cost = cost;
  rep.cost_history.push_back(cost);

  double mu = 1e-4;
  if (layout.size == 0) rep.converged = true;

  for (int iter = 0; iter < options.max_iterations && !rep.converged; ++iter) {
    rep.iterations = iter + 1;
    Normal ne;
    ne.gradient = Eigen::VectorXd::Zero(layout.size);
    for (const auto& obs : b.observations) {
      const auto t = reprojection_term(state.cameras[obs.camera], b.intrinsics,
                                       state.points[obs.point], obs.pixel);
      if (!t.valid) continue;
      const double w = huber_weight(t.residual.squaredNorm(), options.reprojection_huber);
      accumulate<2, 6, 3>(ne, layout.camera[obs.camera], t.d_pose, layout.point[obs.point],
                          t.d_point, t.residual, w);
    }
    for (const auto& a : b.associations) {
      const auto t = plane_term(state.planes[a.plane], state.points[a.point]);
      const double w =
          options.plane_weight * huber_weight(t.residual * t.residual, options.plane_huber);
      const Eigen::Matrix<double, 1, 3> jp = t.d_plane;
      const Eigen::Matrix<double, 1, 3> jv = t.d_point;
      const Eigen::Matrix<double, 1, 1> r(t.residual);
      accumulate<1, 3, 3>(ne, layout.plane[a.plane], jp, layout.point[a.point], jv, r, w);
    }
    Eigen::SparseMatrix<double> h(layout.size, layout.size);
    h.setFromTriplets(ne.triplets.begin(), ne.triplets.end());

    if (ne.gradient.lpNorm<Eigen::Infinity>() < 1e-12) {
      rep.converged = true;
      break;
    }

    Eigen::VectorXd diag = h.diagonal();
    bool accepted = false;
    for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
      Eigen::SparseMatrix<double> damped = h;
      for (int i = 0; i < layout.size; ++i) {
        damped.coeffRef(i, i) += mu * std::max(diag(i), 1e-9);
      }
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(damped);
      if (solver.info() != Eigen::Success) {
        mu *= 10.0;
        continue;
      }
      const Eigen::VectorXd delta = solver.solve(-ne.gradient);
      if (solver.info() != Eigen::Success || !delta.allFinite()) {
        mu *= 10.0;
        continue;
      }
      const State trial = apply_step(state, layout, delta);
      const double trial_cost = state_cost(b, trial, options);
      if (trial_cost < cost) {
        const double decrease = cost - trial_cost;
        state = trial;
        cost = trial_cost;
        rep.cost_history.push_back(cost);
        mu = std::max(mu / 10.0, 1e-12);
        accepted = true;
        if (decrease <= 1e-12 * std::max(cost, 1e-300) || delta.norm() < 1e-12) {
          rep.converged = true;
        }
      } else {
        mu *= 10.0;
      }
    }
    if (!accepted) {
      // No descent direction left at any damping: a local minimum to machine precision.
      rep.converged = true;
    }
  }

  Bundle out = from_state(b, state);
  rep.final_cost = cost;
  rep.rms_reprojection = rms_reprojection(out);
  rep.rms_point_plane = rms_point_plane(out);
  if (report) *report = std::move(rep);
  return out;
}

Bundle decoupled_refine(const Bundle& b, const RefineOptions& options, RefineReport* report) {
  RefineOptions structure = options;
  structure.fixed_cameras = b.cameras.size();
  RefineReport first;
  const Bundle staged = joint_refine(b, structure, &first);
  RefineReport second;
  Bundle out = joint_refine(staged, options, &second);
  if (report) {
    second.initial_cost = first.initial_cost;
    second.cost_history.insert(second.cost_history.begin(), first.cost_history.begin(),
                               first.cost_history.end() - 1);
    second.iterations += first.iterations;
    *report = std::move(second);
  }
  return out;
}

double rms_reprojection(const Bundle& b) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& o : b.observations) {
    const auto t = reprojection_term(b.cameras[o.camera], b.intrinsics, b.points[o.point], o.pixel);
    if (!t.valid) continue;
    sum += t.residual.squaredNorm();
    ++n;
  }
  return n ? std::sqrt(sum / static_cast<double>(n)) : 0.0;
}

double rms_point_plane(const Bundle& b) {
  double sum = 0.0;
  for (const auto& a : b.associations) {
    const double d = b.planes[a.plane].signed_distance(b.points[a.point]);
    sum += d * d;
  }
  return b.associations.empty() ? 0.0
                                : std::sqrt(sum / static_cast<double>(b.associations.size()));
}

void write_bundle(std::ostream& out, const Bundle& b) {
  const auto old = out.precision(17);
  out << "CAMERAS " << b.cameras.size() << '\n';
  for (const auto& c : b.cameras) {
    out << c.rotation.w() << ' ' << c.rotation.x() << ' ' << c.rotation.y() << ' '
        << c.rotation.z() << ' ' << c.translation.x() << ' ' << c.translation.y() << ' '
        << c.translation.z() << '\n';
  }
  out << "INTRINSICS 1\n"
      << b.intrinsics.fx << ' ' << b.intrinsics.fy << ' ' << b.intrinsics.cx << ' '
      << b.intrinsics.cy << '\n';
  out << "POINTS " << b.points.size() << '\n';
  for (const auto& p : b.points) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  out << "PLANES " << b.planes.size() << '\n';
  for (const auto& p : b.planes) {
    out << p.normal.x() << ' ' << p.normal.y() << ' ' << p.normal.z() << ' ' << p.offset << '\n';
  }
  out << "OBSERVATIONS " << b.observations.size() << '\n';
  for (const auto& o : b.observations) {
    out << o.camera << ' ' << o.point << ' ' << o.pixel.x() << ' ' << o.pixel.y() << '\n';
  }
  out << "ASSOCIATIONS " << b.associations.size() << '\n';
  for (const auto& a : b.associations) out << a.point << ' ' << a.plane << '\n';
  out.precision(old);
}

namespace {

class SectionReader {
 public:
  explicit SectionReader(std::istream& in) : in_(in) {}

  std::size_t header(const std::string& name) {
    std::istringstream line(next_line());
    std::string got;
    long long count = -1;
    if (!(line >> got >> count) || got != name || count < 0) {
      throw std::runtime_error("bundle line " + std::to_string(line_no_) + ": expected '" + name +
                               " <count>'");
    }
    return static_cast<std::size_t>(count);
  }

  std::vector<double> record(std::size_t fields) {
    std::istringstream line(next_line());
    std::vector<double> v(fields);
    for (auto& x : v) {
      if (!(line >> x)) {
        throw std::runtime_error("bundle line " + std::to_string(line_no_) + ": expected " +
                                 std::to_string(fields) + " numeric fields");
      }
    }
    std::string extra;
    if (line >> extra) {
      throw std::runtime_error("bundle line " + std::to_string(line_no_) + ": trailing data");
    }
    return v;
  }

 private:
  std::string next_line() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      return line;
    }
    throw std::runtime_error("bundle: unexpected end of file after line " + std::to_string(line_no_));
  }

  std::istream& in_;
  int line_no_ = 0;
};

std::size_t to_index(double v) {
  if (!(v >= 0.0) || v != std::floor(v)) throw std::runtime_error("bundle: invalid index");
  return static_cast<std::size_t>(v);
}

}  // namespace

Bundle read_bundle(std::istream& in) {
  SectionReader r(in);
  Bundle b;
  const std::size_t nc = r.header("CAMERAS");
  for (std::size_t i = 0; i < nc; ++i) {
    const auto v = r.record(7);
    Pose p;
    // Renormalizing an already-unit value perturbs the last bit, which would
    // break write/read/write stability.
    p.rotation = Eigen::Quaterniond(v[0], v[1], v[2], v[3]);
    if (std::abs(p.rotation.norm() - 1.0) > 1e-12) p.rotation.normalize();
    p.translation = {v[4], v[5], v[6]};
    b.cameras.push_back(p);
  }
  if (r.header("INTRINSICS") != 1) throw std::runtime_error("bundle: expected one intrinsics record");
  const auto k = r.record(4);
  b.intrinsics = {k[0], k[1], k[2], k[3]};
  const std::size_t np = r.header("POINTS");
  for (std::size_t i = 0; i < np; ++i) {
    const auto v = r.record(3);
    b.points.emplace_back(v[0], v[1], v[2]);
  }
  const std::size_t nk = r.header("PLANES");
  for (std::size_t i = 0; i < nk; ++i) {
    const auto v = r.record(4);
    const Eigen::Vector3d n(v[0], v[1], v[2]);
    if (std::abs(n.norm() - 1.0) <= 1e-12 && v[3] > 0.0) {
      b.planes.push_back(Plane{n, v[3]});
    } else {
      b.planes.push_back(Plane::canonical(n, v[3]));
    }
  }
  const std::size_t no = r.header("OBSERVATIONS");
  for (std::size_t i = 0; i < no; ++i) {
    const auto v = r.record(4);
    b.observations.push_back({to_index(v[0]), to_index(v[1]), {v[2], v[3]}});
  }
  const std::size_t na = r.header("ASSOCIATIONS");
  for (std::size_t i = 0; i < na; ++i) {
    const auto v = r.record(2);
    b.associations.push_back({to_index(v[0]), to_index(v[1])});
  }
  check_consistency(b);
  return b;
}

Bundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open bundle file " + path.string());
  return read_bundle(in);
}

void save_bundle(const std::filesystem::path& path, const Bundle& b) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write bundle file " + path.string());
  write_bundle(out, b);
}

}  // namespace seqgc
