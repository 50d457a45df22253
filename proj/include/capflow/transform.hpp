#pragma once

#include "capflow/grid.hpp"

namespace capflow {

/// Maps between physical coordinates (interface at y=h(x)) and flat
/// coordinates (interface at y=0). Both representations live on the same
/// strip grid; interpolation in y is cubic with stencils that never
/// straddle the interface location of the source field.

/// u_flat(x,yh) = u(x, h(x)+yh). Out-of-strip evaluation points extrapolate
/// the edge cubic; *clip_count (if given) reports how many.
Field2D to_flat(const Grid& g, const Field2D& u, const Field1D& h,
                int* clip_count = nullptr);

/// u(x,y) = u_flat(x, y-h(x)).
Field2D to_physical(const Grid& g, const Field2D& u_flat, const Field1D& h,
                    int* clip_count = nullptr);

/// Whole-strip extensions of the lower/upper half fields by a three-term
/// reflection that reproduces polynomials in y up to degree 2. Source-side
/// values are unchanged.
struct HalfExtensions {
  Field2D lower;  ///< extension of the y<0 data
  Field2D upper;  ///< extension of the y>0 data
};
HalfExtensions extend_half_fields(const Grid& g, const Field2D& u_flat);

/// Sensitivity of the physical field under (du_flat, dh):
/// du = du_flat(x,y-h) - d_y u_flat(x,y-h) * dh(x), assembled per side.
Field2D physical_sensitivity(const Grid& g, const Field2D& u_flat,
                             const Field2D& du_flat, const Field1D& h,
                             const Field1D& dh);

/// Control pullback c_flat(x,y) = c(x, y+h(x)).
Field2D pullback_control(const Grid& g, const Field2D& c, const Field1D& h,
                         int* clip_count = nullptr);

/// Its derivative: dc(x,y+h) + d_y c(x,y+h) * dh.
Field2D pullback_control_derivative(const Grid& g, const Field2D& c,
                                    const Field1D& h, const Field2D& dc,
                                    const Field1D& dh);

/// Cubic Lagrange interpolation on strictly increasing nodes with the
/// 4-point stencil clamped to the available range (exact for cubics).
double cubic_interp(const double* ys, const double* vals, int n, double ye);

/// Derivative of the same interpolant at the evaluation point.
double cubic_interp_deriv(const double* ys, const double* vals, int n,
                          double ye);

}  // namespace capflow
