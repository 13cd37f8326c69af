#pragma once

#include <string>
#include <vector>

#include "dtwin/cell.hpp"

namespace dtwin {

struct PlannedStep {
  std::string part;
  std::string type_name;
  Pose target;
  Trajectory trajectory;
};

/// Sequence plus insertion paths for a whole product, computed without
/// running the cell.
struct PlanDocument {
  std::vector<PlannedStep> steps;
  std::vector<double> residuals;

  std::vector<std::string> sequence() const;
  std::string to_json() const;
};

/// Resolves the twin, walks the assembly order and plans each insertion
/// against the parts placed so far plus the station. Throws PlanningFailure.
PlanDocument make_plan(DigitalTwin twin, const CellGeometry& geometry);

}  // namespace dtwin
