#pragma once

#include <Eigen/Core>

namespace topoinc {

using Point = Eigen::Vector2d;

}  // namespace topoinc
