#include "seqgc/report.hpp"

#include <cmath>
#include <iomanip>

#include "seqgc/io.hpp"

namespace seqgc {
namespace {

using nlohmann::json;

json timings_json(const std::vector<StageTiming>& timings) {
  json out = json::array();
  for (const auto& t : timings) out.push_back({{"stage", t.stage}, {"ms", t.ms}});
  return out;
}

json fit_summary(const PlaneFit& fit) {
  return {{"proposal", fit.proposal_id},
          {"status", to_string(fit.status)},
          {"support", fit.support},
          {"residual", std::isfinite(fit.residual) ? json(fit.residual) : json(nullptr)},
          {"iterations", fit.iterations},
          {"lo_invocations", fit.lo_invocations},
          {"note", fit.note}};
}

}  // namespace

json to_json(const Plane& plane) {
  return {{"normal", {plane.normal.x(), plane.normal.y(), plane.normal.z()}},
          {"offset", plane.offset}};
}

Plane plane_from_json(const json& j) {
  const auto& n = j.at("normal");
  if (!n.is_array() || n.size() != 3) throw DataError("plane normal needs 3 values");
  return Plane::canonical({n[0].get<double>(), n[1].get<double>(), n[2].get<double>()},
                          j.at("offset").get<double>());
}

json to_json(const PipelineResult& result, std::span<const MapPoint> points, bool with_timings) {
  json models = json::array();
  for (const auto& m : result.models) {
    json ids = json::array();
    for (const auto i : m.point_ids) ids.push_back(points[i].id);
    json entry = to_json(m.plane);
    entry["support"] = m.point_ids.size();
    entry["point_ids"] = std::move(ids);
    models.push_back(std::move(entry));
  }
  json fits = json::array();
  for (const auto& f : result.fits) fits.push_back(fit_summary(f));
  json out = {{"models", std::move(models)},
              {"fits", std::move(fits)},
              {"culled", result.culled},
              {"merges", result.merges},
              {"expanded", result.expanded},
              {"dropped_weak", result.dropped_weak},
              {"notes", result.notes}};
  if (with_timings) out["timings"] = timings_json(result.timings);
  return out;
}

json to_json(const std::vector<HomographyFit>& fits, std::span<const Correspondence> matches) {
  json out = json::array();
  for (const auto& f : fits) {
    json entry = {{"proposal", f.proposal_id},
                  {"status", to_string(f.status)},
                  {"support", f.support},
                  {"residual", std::isfinite(f.residual) ? json(f.residual) : json(nullptr)},
                  {"iterations", f.iterations},
                  {"lo_invocations", f.lo_invocations},
                  {"note", f.note}};
    if (f.model) {
      const auto& h = f.model->matrix();
      json rows = json::array();
      for (int r = 0; r < 3; ++r) rows.push_back({h(r, 0), h(r, 1), h(r, 2)});
      entry["homography"] = std::move(rows);
    } else {
      entry["homography"] = nullptr;
    }
    json ids = json::array();
    for (const auto i : f.inlier_ids()) ids.push_back(matches[i].id);
    entry["inlier_ids"] = std::move(ids);
    out.push_back(std::move(entry));
  }
  return {{"models", std::move(out)}};
}

json to_json(const GroundTruth& truth) {
  json planes = json::array();
  for (const auto& p : truth.planes) planes.push_back(to_json(p));
  return {{"planes", std::move(planes)},
          {"point_plane", truth.point_plane},
          {"boundary_counts", truth.boundary_counts},
          {"leaked", truth.leaked},
          {"unlabeled", truth.unlabeled}};
}

json to_json(const EvalReport& report, bool with_timings) {
  json models = json::array();
  for (const auto& m : report.models) {
    json entry = {{"model", m.model}, {"truth", m.truth ? json(*m.truth) : json(nullptr)}};
    if (m.truth) {
      entry["angle_deg"] = m.angle_deg;
      entry["offset_error"] = m.offset_error;
      entry["precision"] = m.precision;
      entry["recall"] = m.recall;
    }
    models.push_back(std::move(entry));
  }
  json out = {{"models", std::move(models)},
              {"missed_truth", report.missed_truth},
              {"false_positives", report.false_positives},
              {"mean_angle_deg", report.mean_angle_deg},
              {"misclassification_rate", report.misclassification_rate}};
  if (with_timings) out["timings"] = timings_json(report.timings);
  return out;
}

json to_json(const RefineReport& report) {
  return {{"initial_cost", report.initial_cost},
          {"final_cost", report.final_cost},
          {"cost_history", report.cost_history},
          {"iterations", report.iterations},
          {"converged", report.converged},
          {"rms_reprojection", report.rms_reprojection},
          {"rms_point_plane", report.rms_point_plane}};
}

std::vector<PlaneModel> models_from_json(const json& result) {
  std::vector<PlaneModel> out;
  for (const auto& m : result.at("models")) {
    PlaneModel model;
    model.plane = plane_from_json(m);
    model.point_ids = m.at("point_ids").get<std::vector<std::size_t>>();
    out.push_back(std::move(model));
  }
  return out;
}

GroundTruth truth_from_json(const json& truth) {
  GroundTruth out;
  for (const auto& p : truth.at("planes")) out.planes.push_back(plane_from_json(p));
  out.point_plane = truth.at("point_plane").get<std::vector<int>>();
  if (truth.contains("boundary_counts")) {
    out.boundary_counts = truth["boundary_counts"].get<std::vector<std::size_t>>();
  }
  if (truth.contains("leaked")) out.leaked = truth["leaked"].get<std::vector<std::size_t>>();
  if (truth.contains("unlabeled")) out.unlabeled = truth["unlabeled"].get<std::vector<std::size_t>>();
  return out;
}

void write_eval_table(std::ostream& out, const EvalReport& report) {
  out << "# model truth angle_deg offset_error precision recall\n" << std::setprecision(10);
  for (const auto& m : report.models) {
    out << m.model << ' ';
    if (m.truth) {
      out << *m.truth << ' ' << m.angle_deg << ' ' << m.offset_error << ' ' << m.precision << ' '
          << m.recall << '\n';
    } else {
      out << "NaN NaN NaN NaN NaN\n";
    }
  }
}

}  // namespace seqgc
