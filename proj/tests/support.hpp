#pragma once

#include <vector>

#include "delayrank/rank1_model.hpp"

namespace testing {

inline delayrank::ObservationMask to_mask(const std::vector<bool>& observed) {
  delayrank::ObservationMask::Flags flags(static_cast<Eigen::Index>(observed.size()));
  for (std::size_t i = 0; i < observed.size(); ++i) flags(static_cast<Eigen::Index>(i)) = observed[i];
  return delayrank::ObservationMask(flags);
}

}  // namespace testing
