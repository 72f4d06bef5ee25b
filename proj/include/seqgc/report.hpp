#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqgc/bundle.hpp"
#include "seqgc/pipeline.hpp"
#include "seqgc/scene.hpp"
#include "seqgc/seqfit.hpp"

namespace seqgc {

nlohmann::json to_json(const Plane& plane);
Plane plane_from_json(const nlohmann::json& j);

/// Models carry the input points' own ids, not their positions.
nlohmann::json to_json(const PipelineResult& result, std::span<const MapPoint> points,
                       bool with_timings);
nlohmann::json to_json(const std::vector<HomographyFit>& fits,
                       std::span<const Correspondence> matches);
nlohmann::json to_json(const GroundTruth& truth);
nlohmann::json to_json(const EvalReport& report, bool with_timings);
nlohmann::json to_json(const RefineReport& report);

/// Planes and point ids of a fit-planes result.
std::vector<PlaneModel> models_from_json(const nlohmann::json& result);
GroundTruth truth_from_json(const nlohmann::json& truth);

/// One whitespace-separated row per model, '#' header; readable by gnuplot.
void write_eval_table(std::ostream& out, const EvalReport& report);

}  // namespace seqgc
