#pragma once

#include <stdexcept>
#include <vector>

#include "capflow/rhs.hpp"
#include "capflow/stokes.hpp"

namespace capflow {

/// Time series of a (v,w) body-force control, levels m = 0..M. Interpreted
/// in the flat or physical frame according to SolverOpts::frame.
struct ControlTrajectory {
  std::vector<VectorField2D> levels;

  static ControlTrajectory zero(const Grid& g) {
    ControlTrajectory c;
    c.levels.assign(g.steps() + 1, VectorField2D{g.zero2D(), g.zero2D()});
    return c;
  }
  int size() const { return static_cast<int>(levels.size()); }
  VectorField2D& operator[](int m) { return levels[m]; }
  const VectorField2D& operator[](int m) const { return levels[m]; }
};

enum class ControlFrame {
  Flat,     ///< control already lives on the flat-interface strip
  Physical  ///< control is pulled back through the current interface height
};

struct SolverOpts {
  double tol_fp = 1e-10;  ///< relative update-norm tolerance
  int k_max = 50;         ///< iteration budget
  ControlFrame frame = ControlFrame::Flat;
  AssembleOpts assemble{};
  double compat_warn_tol = 1e-6;  ///< initial-data compatibility warning level
};

/// Per-iteration record of the fixed-point solve.
struct ContractionReport {
  int iterations = 0;
  std::vector<double> update_norms;  ///< ||z^{k+1} - z^k|| (relative)
  std::vector<double> ratios;        ///< successive update-norm ratios
  bool converged = false;
  double final_residual = 0.0;  ///< ||L z - N(z) - (c,0)|| / (1 + ||z||)
};

/// Non-convergence of the fixed-point iteration, carrying the monitor.
struct FixedPointError : std::runtime_error {
  FixedPointError(const std::string& what, ContractionReport rep)
      : std::runtime_error(what), report(std::move(rep)) {}
  ContractionReport report;
};

struct ForwardSolution {
  FlatTrajectory z;
  ContractionReport report;
};

struct SensitivitySolution {
  FlatTrajectory dz;
  ContractionReport report;
};

/// Picard iteration for the nonlinear transformed problem:
///   z^{k+1} = stokes_solve(N(z^k) + (c_k, 0), v0, w0, h0),
/// with c_k = control in the flat frame, or the control pulled back through
/// h^k in the physical frame. Throws FixedPointError after k_max
/// iterations without convergence; warns (stderr) if the initial data miss
/// the compatibility conditions.
ForwardSolution solve_forward(const StokesSolver& solver, const Field2D& v0,
                              const Field2D& w0, const Field1D& h0,
                              const ControlTrajectory& control,
                              const SolverOpts& opts = {},
                              const FlatTrajectory* initial_guess = nullptr);

/// Differentiated fixed point around a converged z:
///   dz^{k+1} = stokes_solve(DN(z)[dz^k] + (dc_total, 0), dv0, dw0, 0),
/// where dc_total additionally carries the interface-shift term
/// d_y c * dh in the physical frame. Directions with dh0 != 0 are outside
/// the differentiable family and are rejected.
SensitivitySolution solve_sensitivity(
    const StokesSolver& solver, const FlatTrajectory& z,
    const Field2D& dv0, const Field2D& dw0, const Field1D& dh0,
    const ControlTrajectory& control, const ControlTrajectory& dcontrol,
    const SolverOpts& opts = {}, const FlatTrajectory* initial_guess = nullptr);

}  // namespace capflow
