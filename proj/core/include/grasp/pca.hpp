#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "grasp/types.hpp"

namespace grasp {

inline constexpr std::size_t kPcaComponents = 5;

/// Principal components of flattened binary masks.
struct PcaModel {
  int width = 0;
  int height = 0;
  std::vector<double> mean;
  /// Unit-norm components, descending eigenvalue order.
  std::array<std::vector<double>, kPcaComponents> components;
  std::array<double, kPcaComponents> eigenvalues{};
  bool fitted = false;

  std::size_t dimension() const noexcept { return mean.size(); }

  friend bool operator==(const PcaModel&, const PcaModel&) = default;
};

/// Fits the top five components of the mask covariance. Uses the Gram (snapshot)
/// formulation when there are fewer frames than pixels. Each component's sign is
/// fixed so that its largest-magnitude entry is positive.
/// Throws std::invalid_argument on fewer than five frames or mixed mask sizes.
PcaModel pca_fit(std::span<const Mask> frames);

/// Inner products of the mean-centred mask with each component.
/// Throws std::invalid_argument for an unfitted model or a size mismatch.
std::array<double, kPcaComponents> pca_project(const PcaModel& model, const Mask& mask);

}  // namespace grasp
