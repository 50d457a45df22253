#pragma once

#include <memory>

#include "capflow/grid.hpp"
#include "capflow/rhs.hpp"

namespace capflow {

/// Linear two-phase Stokes free-boundary solver on the flat-interface strip.
///
/// Semi-discretization: implicit Euler in time with the capillary term
/// implicit, Fourier transform in x, and for every wavenumber an
/// independent 1D boundary-value solve in y for (v_k, w_k, pi_k, h_k)
/// coupled through the interface rows:
///   rho/dt v - mu (d_yy - k^2) v + ik pi = f_v + rho v^m / dt
///   rho/dt w - mu (d_yy - k^2) w + d_y pi = f_w + rho w^m / dt
///       (momentum at every node except the walls; one-sided stencils at
///        the interface rows)
///   ik v + d_y w = f_d                  (interior nodes of each side)
///   v = w = 0 at y = +-Ly
///   [v] = 0, [w] = 0
///   -[mu d_y v] - ik [mu] w(0)            = g_v
///   -2 [mu d_y w] + [pi] + sigma k^2 h    = g_w
///   h/dt - w(0+)                          = h^m/dt + g_h^m
///
/// The per-mode factorizations depend only on (grid, params, dt) and are
/// cached on construction, so repeated marches (fixed-point iterations,
/// sensitivity solves) reuse them.
class StokesSolver {
 public:
  StokesSolver(const Grid& grid, const PhysicalParams& params);
  ~StokesSolver();

  StokesSolver(const StokesSolver&) = delete;
  StokesSolver& operator=(const StokesSolver&) = delete;

  /// March the trajectory. rhs holds levels m=0..M; levels 1..M drive the
  /// steps (g_h is read one level behind, matching the h update). The
  /// returned trajectory carries (u0,h0) at level 0 with pi(0)=pi(1) and
  /// r = [pi] at every level.
  FlatTrajectory march(const RhsTrajectory& rhs, const Field2D& v0,
                       const Field2D& w0, const Field1D& h0) const;

  /// Max relative residual of the imposed interface rows (g_v, g_w, [u])
  /// over all steps of the most recent march.
  double lastJumpResidual() const;

  /// Apply the discrete operator: the right-hand sides that make `z` the
  /// exact result of march(..., z[0].v, z[0].w, z[0].h), provided z
  /// satisfies the wall and continuity constraints. Inverse of march on
  /// trajectories in the solver's range (up to the k=0 pressure gauge).
  RhsTrajectory apply_operator(const FlatTrajectory& z) const;

  const Grid& grid() const { return grid_; }
  const PhysicalParams& params() const { return params_; }

 private:
  struct Impl;
  const Grid& grid_;
  PhysicalParams params_;
  std::unique_ptr<Impl> impl_;
};

/// Periodic heat semigroup: Fourier multiplier exp(-k^2 t) per mode.
Field1D heat_smooth(const Grid& g, const Field1D& f, double t);

/// Compatibility-resolving reference solution: right-hand sides
/// (0, f_d*, g*, g_h*) built by heat-smoothing the initial interface data
/// and evolving extensions of v0 * h0_x by the 2D heat semigroup, then the
/// linear solve with that data.
struct ZStar {
  FlatTrajectory z;
  RhsTrajectory rhs;
};
ZStar construct_zstar(const StokesSolver& solver, const Field2D& v0,
                      const Field2D& w0, const Field1D& h0,
                      double compat_tol = 1e-6);

}  // namespace capflow
