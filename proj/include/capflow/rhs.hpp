#pragma once

#include <vector>

#include "capflow/grid.hpp"

namespace capflow {

/// Transformed state tuple (u=(v,w), pi, r=[pi], h) on the flat-interface
/// grid, one time level.
struct FlatState {
  Field2D v, w, pi;
  Field1D r, h;

  static FlatState zero(const Grid& g) {
    return {g.zero2D(), g.zero2D(), g.zero2D(), g.zero1D(), g.zero1D()};
  }
};

/// Time series of FlatState at t_m = m*dt, m = 0..M.
struct FlatTrajectory {
  std::vector<FlatState> levels;

  static FlatTrajectory zero(const Grid& g) {
    FlatTrajectory z;
    z.levels.assign(g.steps() + 1, FlatState::zero(g));
    return z;
  }
  int size() const { return static_cast<int>(levels.size()); }
  FlatState& operator[](int m) { return levels[m]; }
  const FlatState& operator[](int m) const { return levels[m]; }
};

/// Right-hand-side tuple (f, f_d, g_v, g_w, g_h), one time level.
struct RhsTuple {
  Field2D fv, fw, fd;
  Field1D gv, gw, gh;

  static RhsTuple zero(const Grid& g) {
    return {g.zero2D(), g.zero2D(), g.zero2D(), g.zero1D(), g.zero1D(), g.zero1D()};
  }
};

struct RhsTrajectory {
  std::vector<RhsTuple> levels;

  static RhsTrajectory zero(const Grid& g) {
    RhsTrajectory z;
    z.levels.assign(g.steps() + 1, RhsTuple::zero(g));
    return z;
  }
  int size() const { return static_cast<int>(levels.size()); }
  RhsTuple& operator[](int m) { return levels[m]; }
  const RhsTuple& operator[](int m) const { return levels[m]; }
};

// ---- state/rhs algebra and norms --------------------------------------------

void axpy(double a, const FlatState& x, FlatState& y);       // y += a*x
void axpy(double a, const FlatTrajectory& x, FlatTrajectory& y);
void scale(FlatState& x, double a);
void scale(FlatTrajectory& x, double a);
FlatTrajectory lincomb(double a, const FlatTrajectory& x, double b,
                       const FlatTrajectory& y);

/// Discrete surrogate for the solution-space norm: space-time L2 of the
/// bulk components plus the interface components.
double state_norm(const Grid& g, const FlatState& z);
double state_norm(const Grid& g, const FlatTrajectory& z);
double rhs_norm(const Grid& g, const RhsTuple& r);
double rhs_norm(const Grid& g, const RhsTrajectory& r);

/// sup_t of the spatial Lp norm, the C(J;Lp) surrogate.
double sup_lp_norm(const Grid& g, const std::vector<Field2D>& traj, double p);

// ---- nonlinear right-hand sides ----------------------------------------------

/// How the interface time derivative entering F_v, F_w is obtained.
enum class DtHMode {
  InterfaceEquation,  ///< dh/dt = trace(w) - trace(v) h_x (consistent iterate)
  TimeDifference,     ///< one-sided differencing of the h series
};

struct AssembleOpts {
  DtHMode dth = DtHMode::InterfaceEquation;
  /// Scales every term that is linear in second derivatives of (v,w,h);
  /// used by structure tests, 1.0 for production.
  double second_order_scale = 1.0;
};

/// Nonlinear right-hand side N(z) of the transformed problem, per level.
RhsTuple assemble_N(const Grid& g, const PhysicalParams& p, const FlatState& z,
                    const Field1D& dth, const AssembleOpts& opts = {});
RhsTrajectory assemble_N(const Grid& g, const PhysicalParams& p,
                         const FlatTrajectory& z, const AssembleOpts& opts = {});

/// Exact directional derivative DN(z)[dz].
RhsTuple linearize_N(const Grid& g, const PhysicalParams& p, const FlatState& z,
                     const FlatState& dz, const Field1D& dth, const Field1D& ddth,
                     const AssembleOpts& opts = {});
RhsTrajectory linearize_N(const Grid& g, const PhysicalParams& p,
                          const FlatTrajectory& z, const FlatTrajectory& dz,
                          const AssembleOpts& opts = {});

/// Interface time derivative used by the assembly, exposed for reuse.
Field1D interface_dth(const Grid& g, const FlatState& z);

/// Initial pressure jump r0 = [mu n.D(u0,h0).n] + sigma*(Lap h0 - g_kappa(h0)).
Field1D jump_pressure_r0(const Grid& g, const PhysicalParams& p,
                         const Field2D& v0, const Field2D& w0, const Field1D& h0);

/// Residuals of the transformed compatibility conditions at t=0.
struct CompatibilityReport {
  double tangential_stress = 0.0;  ///< max |[mu D nu - mu (nu.D nu) nu]|
  double divergence = 0.0;         ///< max |div u0 - F_d(u0,h0)|
  double velocity_jump = 0.0;      ///< max |[u0]|
  double tol = 1e-6;
  bool pass() const {
    return tangential_stress <= tol && divergence <= tol && velocity_jump <= tol;
  }
};
CompatibilityReport check_compatibility(const Grid& g, const PhysicalParams& p,
                                        const Field2D& v0, const Field2D& w0,
                                        const Field1D& h0, double tol = 1e-6);

/// Transformed deformation tensor D(u,h) entries at the interface rows.
struct InterfaceDeformation {
  Field1D dxx_lo, dxy_lo, dyy_lo;
  Field1D dxx_up, dxy_up, dyy_up;
};
InterfaceDeformation interface_deformation(const Grid& g, const Field2D& v,
                                           const Field2D& w, const Field1D& h);

}  // namespace capflow
