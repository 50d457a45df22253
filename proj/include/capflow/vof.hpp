#pragma once

#include <array>
#include <functional>
#include <random>

#include "capflow/grid.hpp"
#include "capflow/picard.hpp"
#include "capflow/rhs.hpp"

namespace capflow {

// ---- kernels -----------------------------------------------------------

/// 1D mollifier pair on (-1,1). The plateau profile is C^2, even, and
/// identically 1 on [-1+delta,1-delta] (quintic-smoothstep shoulders); the
/// mass profile is the C^2 bump (35/32)(1-s^2)^3 with unit integral. The
/// 2D kernel is phi_eps(x,y) = eps^{-1} psi_mass(x/eps) psi_plat(y/eps).
struct MollifierSpec {
  double delta = 0.25;  ///< plateau shoulder width, in (0,1/2)
  double eps = 0.1;     ///< kernel radius

  void validate() const;
};

double psi_plat(double s, double delta);
double psi_plat_deriv(double s, double delta);
double psi_plat_antideriv(double s, double delta);  ///< integral from -1 to s
double psi_mass(double s);
double psi_mass_deriv(double s);

// ---- test-function library ---------------------------------------------

/// C^2 scalar test function with analytic derivatives.
struct TestFunction2 {
  std::function<double(double, double)> f;
  std::function<std::array<double, 2>(double, double)> grad;   ///< fx, fy
  std::function<std::array<double, 3>(double, double)> hess;   ///< fxx,fxy,fyy
  std::function<double(double, double)> yint;  ///< integral of f in y up to y
  std::function<double(double, double)> dx_yint;  ///< integral of fx in y up to y
};

struct VectorTestFunction {
  TestFunction2 c[2];
};

/// Tensor product of quintic bumps (1-r^2)^3, wrapped periodically in x.
TestFunction2 quintic_bump(double xc, double yc, double wx, double wy,
                           double amp, double lx);
VectorTestFunction random_vector_bump(std::mt19937& rng, const Grid& g,
                                      double ymin, double ymax);

// ---- velocity sampling and transport ------------------------------------

/// Physical velocity u(t,x,y) = u_flat(t, x, y - h(t,x)) from a flat
/// trajectory, cubic in x (periodic), y (one-sided) and t; zero
/// continuation outside the strip.
class VelocitySampler {
 public:
  VelocitySampler(const Grid& g, const FlatTrajectory& z);

  std::array<double, 2> operator()(double t, double x, double y) const;
  double height(double t, double x) const;

 private:
  const Grid& g_;
  const FlatTrajectory& z_;
};

/// Phase indicator alpha(t,x,y) in {0,1} transported by u: evaluated by
/// integrating the characteristic backward to t=0 (RK4, step dt/4) and
/// testing the initial subgraph {y < h0(x)}.
class PhaseField {
 public:
  PhaseField(const Grid& g, const VelocitySampler& u, Field1D h0);

  double alpha(double t, double x, double y) const;
  /// Backward characteristic foot point of (t,x,y).
  std::array<double, 2> foot(double t, double x, double y) const;
  int exit_count() const { return exits_; }

 private:
  const Grid& g_;
  const VelocitySampler& u_;
  Field1D h0_;
  mutable int exits_ = 0;
};

PhaseField advect_indicator(const Grid& g, const VelocitySampler& u,
                            const Field1D& h0);

// ---- mollified normals ---------------------------------------------------

struct Vec2 {
  double x = 0.0, y = 0.0;
};

/// nu_eps(x,y) by 2D convolution of grad(phi_eps) against the subgraph
/// indicator of h; the inner y-integral is done analytically through the
/// plateau antiderivative.
Vec2 mollified_normal_volume(const Grid& g, const Field1D& h,
                             const MollifierSpec& spec, double x, double y);

/// nu_eps(x,y) by the 1D graph integral of phi_eps((xt,h(xt)) - (x,y))
/// against (-h'(xt), 1).
Vec2 mollified_normal_graph(const Grid& g, const Field1D& h,
                            const MollifierSpec& spec, double x, double y);

/// Reduced on-interface form (requires |h'| <= 1-delta on the window):
/// eps^{-1} integral of psi_mass((xt-x)/eps) (-h'(xt), 1).
Vec2 mollified_normal_interface(const Grid& g, const Field1D& h,
                                const MollifierSpec& spec, double x);

/// Variation delta nu_eps(x,y): graph integral of grad(phi_eps) against
/// the measure density dh.
Vec2 delta_mollified_normal(const Grid& g, const Field1D& h,
                            const Field1D& dh, const MollifierSpec& spec,
                            double x, double y);

/// Reduced on-interface form: eps^{-1} integral of psi_mass (-dh'(xt), 0).
Vec2 delta_mollified_normal_interface(const Grid& g, const Field1D& h,
                                      const Field1D& dh,
                                      const MollifierSpec& spec, double x);

// ---- interface measure pairings ------------------------------------------

/// Density dh over the graph of h: the first variation of the phase
/// indicator pairs as integral of phi(x,h(x)) dh(x) dx.
struct InterfaceMeasure {
  Field1D h, dh;
};

/// Pairing of a scalar test function with the measure.
double pair_measure(const Grid& g, const TestFunction2& phi,
                    const InterfaceMeasure& m);

enum class GradientForm {
  Divergence,  ///< integral of div(psi)(x,h) dh
  ByParts      ///< d_y psi . (-h',1) dh + psi . (-dh',0)
};

/// Pairing -<psi, grad d(delta alpha)> of a vector test field with the
/// distributional gradient of the measure, in either equivalent form.
double pair_measure_gradient(const Grid& g, const VectorTestFunction& psi,
                             const InterfaceMeasure& m, GradientForm form);

// ---- surface tension -----------------------------------------------------

enum class SurfaceForm {
  Curvature,  ///< sigma div_x(h'/sqrt(1+h'^2)) (-h',1).phi(x,h)
  ByParts     ///< sigma (h',-1)/sqrt(1+h'^2) (Dphi - div(phi) I) (h',-1)
};

double surface_tension_term(const Grid& g, const Field1D& h, double sigma,
                            const VectorTestFunction& phi, SurfaceForm form);

/// Mollified surface term at radius eps: the nu_eps/|nu_eps| pairing with
/// (Dphi - div(phi) I) against grad(alpha) in its exact graph form.
double surface_tension_term_mollified(const Grid& g, const Field1D& h,
                                      double sigma,
                                      const VectorTestFunction& phi,
                                      const MollifierSpec& spec);

/// First variation of the sharp-interface surface term in direction dh.
double surface_tension_variation(const Grid& g, const Field1D& h,
                                 const Field1D& dh, double sigma,
                                 const VectorTestFunction& phi);

/// The same variation at mollification radius eps (two-part form with
/// nu_eps and delta nu_eps).
double surface_tension_variation_mollified(const Grid& g, const Field1D& h,
                                           const Field1D& dh, double sigma,
                                           const VectorTestFunction& phi,
                                           const MollifierSpec& spec);

// ---- weak-form residual evaluators ----------------------------------------

struct VofResidual {
  double momentum = 0.0;    ///< |LHS - RHS| of the momentum weak form
  double divergence = 0.0;  ///< weak divergence residual
  /// accumulated magnitudes of the individual terms, for relative residuals
  double momentum_scale = 0.0;
  double divergence_scale = 0.0;

  double momentum_rel() const { return momentum / (1e-300 + momentum_scale); }
  double divergence_rel() const {
    return divergence / (1e-300 + divergence_scale);
  }
};

/// Residual of the phase-indicator weak momentum formulation for a
/// converged trajectory, tested against theta(t) phi(x,y) with a C^2 time
/// window vanishing at both ends; the time-derivative term is integrated
/// by parts in time.
VofResidual vof_forward_residual(const Grid& g, const PhysicalParams& p,
                                 const FlatTrajectory& z,
                                 const ControlTrajectory& control,
                                 const VectorTestFunction& phi,
                                 const MollifierSpec& spec);

/// Residual of the linearized formulation for (z, dz): bulk linearized
/// terms, the density- and stress-jump pairings with the interface
/// measure, and the two-part mollified surface variation.
VofResidual vof_sensitivity_residual(const Grid& g, const PhysicalParams& p,
                                     const FlatTrajectory& z,
                                     const FlatTrajectory& dz,
                                     const ControlTrajectory& dcontrol,
                                     const VectorTestFunction& phi,
                                     const MollifierSpec& spec);

}  // namespace capflow
