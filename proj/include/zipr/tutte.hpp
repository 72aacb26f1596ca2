#pragma once

#include "zipr/charts.hpp"

#include <Eigen/Core>

namespace zipr {

// Uniform-weight Tutte embedding of every chart into a periodic strip. The
// bottom run lies on y = 0 and the top run on y = seam length; both runs are
// spaced by 3D edge length and stretched to the period (the 3D length of the
// top loop, or the mean of both loop lengths for a lone part), so transition
// edges get equal lengths on both sides. The seam copies stay free, tied by a
// fixed period translation.
Eigen::VectorXd tutte_initialize(const ChartCut& cut);

}  // namespace zipr
