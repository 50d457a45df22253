#include "capflow/picard.hpp"

#include "capflow/transform.hpp"

#include <cmath>
#include <cstdio>
#include <string>

namespace capflow {
namespace {

// control contribution to the momentum forcing, frame-resolved per level
RhsTrajectory addControl(const Grid& g, RhsTrajectory rhs,
                         const ControlTrajectory& control,
                         const FlatTrajectory& z, ControlFrame frame) {
  for (int m = 0; m < rhs.size(); ++m) {
    if (frame == ControlFrame::Flat) {
      rhs[m].fv += control[m].v;
      rhs[m].fw += control[m].w;
    } else {
      rhs[m].fv += pullback_control(g, control[m].v, z[m].h);
      rhs[m].fw += pullback_control(g, control[m].w, z[m].h);
    }
  }
  return rhs;
}

RhsTrajectory addControlDerivative(const Grid& g, RhsTrajectory rhs,
                                   const ControlTrajectory& control,
                                   const ControlTrajectory& dcontrol,
                                   const FlatTrajectory& z,
                                   const FlatTrajectory& dz,
                                   ControlFrame frame) {
  for (int m = 0; m < rhs.size(); ++m) {
    if (frame == ControlFrame::Flat) {
      rhs[m].fv += dcontrol[m].v;
      rhs[m].fw += dcontrol[m].w;
    } else {
      rhs[m].fv += pullback_control_derivative(g, control[m].v, z[m].h,
                                               dcontrol[m].v, dz[m].h);
      rhs[m].fw += pullback_control_derivative(g, control[m].w, z[m].h,
                                               dcontrol[m].w, dz[m].h);
    }
  }
  return rhs;
}

double relUpdate(const Grid& g, const FlatTrajectory& znew,
                 const FlatTrajectory& zold) {
  const FlatTrajectory diff = lincomb(1.0, znew, -1.0, zold);
  return state_norm(g, diff) / (1.0 + state_norm(g, znew));
}

void recordStep(ContractionReport& rep, double upd) {
  if (!rep.update_norms.empty())
    rep.ratios.push_back(upd / rep.update_norms.back());
  rep.update_norms.push_back(upd);
  ++rep.iterations;
}

void checkFinite(const Grid& g, const FlatTrajectory& z,
                 const ContractionReport& rep, const char* what) {
  if (!std::isfinite(state_norm(g, z)))
    throw FixedPointError(std::string("non-finite iterate in ") + what, rep);
}

}  // namespace

ForwardSolution solve_forward(const StokesSolver& solver, const Field2D& v0,
                              const Field2D& w0, const Field1D& h0,
                              const ControlTrajectory& control,
                              const SolverOpts& opts,
                              const FlatTrajectory* initial_guess) {
  const Grid& g = solver.grid();
  const PhysicalParams& p = solver.params();
  if (control.size() != g.steps() + 1)
    throw std::invalid_argument("control trajectory has wrong length");

  const CompatibilityReport compat =
      check_compatibility(g, p, v0, w0, h0, opts.compat_warn_tol);
  if (!compat.pass())
    std::fprintf(stderr,
                 "warning: initial data miss compatibility "
                 "(stress %.3e, div %.3e, jump %.3e > %.1e); proceeding\n",
                 compat.tangential_stress, compat.divergence,
                 compat.velocity_jump, compat.tol);

  ContractionReport rep;
  FlatTrajectory z = initial_guess ? *initial_guess : FlatTrajectory::zero(g);

  for (int k = 0; k < opts.k_max; ++k) {
    RhsTrajectory rhs = addControl(
        g, assemble_N(g, p, z, opts.assemble), control, z, opts.frame);
    FlatTrajectory znew = solver.march(rhs, v0, w0, h0);
    checkFinite(g, znew, rep, "solve_forward");

    recordStep(rep, relUpdate(g, znew, z));
    z = std::move(znew);
    if (rep.update_norms.back() < opts.tol_fp) {
      rep.converged = true;
      break;
    }
  }

  // fixed-point residual ||z - Phi(z)|| / (1 + ||z||) at the returned z
  {
    RhsTrajectory rhs = addControl(
        g, assemble_N(g, p, z, opts.assemble), control, z, opts.frame);
    const FlatTrajectory zr = solver.march(rhs, v0, w0, h0);
    rep.final_residual = relUpdate(g, zr, z);
  }

  if (!rep.converged)
    throw FixedPointError("forward fixed point did not converge in " +
                              std::to_string(opts.k_max) + " iterations",
                          rep);
  return {std::move(z), std::move(rep)};
}

SensitivitySolution solve_sensitivity(
    const StokesSolver& solver, const FlatTrajectory& z, const Field2D& dv0,
    const Field2D& dw0, const Field1D& dh0, const ControlTrajectory& control,
    const ControlTrajectory& dcontrol, const SolverOpts& opts,
    const FlatTrajectory* initial_guess) {
  const Grid& g = solver.grid();
  const PhysicalParams& p = solver.params();
  if (control.size() != g.steps() + 1 || dcontrol.size() != g.steps() + 1)
    throw std::invalid_argument("control trajectory has wrong length");
  if (max_norm(dh0) > 0.0)
    throw std::invalid_argument(
        "sensitivity directions must leave the initial interface fixed "
        "(dh0 = 0)");
  if (z.size() != g.steps() + 1)
    throw std::invalid_argument("base trajectory has wrong length");

  const Field1D h0zero = g.zero1D();
  ContractionReport rep;
  FlatTrajectory dz = initial_guess ? *initial_guess : FlatTrajectory::zero(g);

  for (int k = 0; k < opts.k_max; ++k) {
    RhsTrajectory rhs =
        addControlDerivative(g, linearize_N(g, p, z, dz, opts.assemble),
                             control, dcontrol, z, dz, opts.frame);
    FlatTrajectory dznew = solver.march(rhs, dv0, dw0, h0zero);
    checkFinite(g, dznew, rep, "solve_sensitivity");

    recordStep(rep, relUpdate(g, dznew, dz));
    dz = std::move(dznew);
    if (rep.update_norms.back() < opts.tol_fp) {
      rep.converged = true;
      break;
    }
  }

  {
    RhsTrajectory rhs =
        addControlDerivative(g, linearize_N(g, p, z, dz, opts.assemble),
                             control, dcontrol, z, dz, opts.frame);
    const FlatTrajectory dzr = solver.march(rhs, dv0, dw0, h0zero);
    rep.final_residual = relUpdate(g, dzr, dz);
  }

  if (!rep.converged)
    throw FixedPointError("sensitivity fixed point did not converge in " +
                              std::to_string(opts.k_max) + " iterations",
                          rep);
  return {std::move(dz), std::move(rep)};
}

}  // namespace capflow
