#pragma once

#include "capflow/grid.hpp"

namespace capflow {

/// Quantities of the interface graph y = h(x): normal, curvature, and the
/// curvature correction splitting kappa = Laplacian(h) - g_kappa(h).

/// Correction term; both summands carry gradient factors, so it vanishes
/// wherever h is locally linear.
Field1D g_kappa(const Grid& g, const Field1D& h);

/// Directional derivative of g_kappa at h in direction dh.
Field1D g_kappa_derivative(const Grid& g, const Field1D& h, const Field1D& dh);

/// kappa = Laplacian(h) - g_kappa(h); negative where the lower phase is convex.
Field1D curvature(const Grid& g, const Field1D& h);

struct InterfaceNormal {
  Field1D nx, ny;  ///< unit normal (-h', 1)/sqrt(1+h'^2), points upward
};
InterfaceNormal unit_normal(const Grid& g, const Field1D& h);

}  // namespace capflow
