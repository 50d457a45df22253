#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "capflow/fft.hpp"

namespace capflow {

/// Discretization parameters for the periodic strip [0,Lx) x [-Ly,Ly]
/// with a two-sided interface line at y=0.
struct GridSpec {
  int nx = 64;        ///< x nodes, power of two
  double lx = 2.0 * M_PI;
  int ny = 64;        ///< y nodes per half-strip (ny+1 nodes incl. ends)
  double ly = 3.0;
  double dt = 0.01;
  double t0 = 0.5;
  double p_diag = 5.0;    ///< exponent of the diagnostic Lp norm (>4)
  double y_stretch = 0.0; ///< sinh clustering strength near y=0; 0 = uniform

  void validate() const;
  int steps() const { return static_cast<int>(std::lround(t0 / dt)); }
};

struct PhysicalParams {
  double rho1 = 1.0, rho2 = 1.0;
  double mu1 = 1.0, mu2 = 1.0;
  double sigma = 1.0;

  void validate() const;
};

/// Nodal scalar field on the strip. Row r, column i. Rows 0..ny are the
/// lower half (y=-Ly..0^-), rows ny+1..2ny+1 the upper half (y=0^+..Ly);
/// y=0 is duplicated so one-sided traces exist.
using Field2D = Eigen::ArrayXXd;
/// Periodic field on the interface line (nx values).
using Field1D = Eigen::ArrayXd;

struct VectorField2D {
  Field2D v, w;  ///< x- and y-components
};

class Grid {
 public:
  explicit Grid(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  int nx() const { return spec_.nx; }
  int nyHalf() const { return spec_.ny; }
  int rows() const { return 2 * spec_.ny + 2; }
  double lx() const { return spec_.lx; }
  double ly() const { return spec_.ly; }
  double dx() const { return spec_.lx / spec_.nx; }

  double x(int i) const { return x_[i]; }
  double y(int r) const { return y_[r]; }
  const std::vector<double>& ys() const { return y_; }
  int rowLo0() const { return spec_.ny; }      ///< y=0^- row
  int rowUp0() const { return spec_.ny + 1; }  ///< y=0^+ row
  bool upper(int r) const { return r >= rowUp0(); }

  int steps() const { return spec_.steps(); }
  double time(int m) const { return m * spec_.dt; }

  /// 3-point finite-difference stencil in y confined to one side.
  struct YStencil {
    int idx[3];
    double d1[3];  ///< first-derivative weights
    double d2[3];  ///< second-derivative weights
  };
  const YStencil& ystencil(int r) const { return stencils_[r]; }

  Field2D zero2D() const { return Field2D::Zero(rows(), nx()); }
  Field1D zero1D() const { return Field1D::Zero(nx()); }

  /// Piecewise-constant material field (value1 below, value2 above y=0).
  Field2D phaseConstant(double value1, double value2) const;

 private:
  GridSpec spec_;
  std::vector<double> x_, y_;
  std::vector<YStencil> stencils_;
};

// ---- differential operators -------------------------------------------------

/// Spectral x-derivative of the requested order (1 or 2).
Field2D ddx(const Grid& g, const Field2D& f, int order = 1);
Field1D ddx(const Grid& g, const Field1D& f, int order = 1);

/// Side-aware y-derivative; never differences across y=0.
Field2D ddy(const Grid& g, const Field2D& f, int order = 1);

struct TraceJump {
  Field1D trace;  ///< upper-side value at y=0
  Field1D lower;  ///< lower-side value at y=0
  Field1D jump;   ///< upper - lower
};
TraceJump trace_jump(const Grid& g, const Field2D& f);

enum class Region { Full, HalfLower, HalfUpper };

/// Trapezoid-in-y, exact-in-x quadrature over the strip.
double integrate(const Grid& g, const Field2D& f, Region region = Region::Full);
/// Quadrature over the interface graph; with h the metric factor
/// sqrt(1+|h'|^2) is included, otherwise plain periodic quadrature in x.
double integrate_interface(const Grid& g, const Field1D& f,
                           const Field1D* h = nullptr);

// ---- norms ------------------------------------------------------------------

double lp_norm(const Grid& g, const Field2D& f, double p);
double lp_norm(const Grid& g, const Field1D& f, double p);
double max_norm(const Field2D& f);
double max_norm(const Field1D& f);
inline double l2_norm(const Grid& g, const Field2D& f) { return lp_norm(g, f, 2.0); }
inline double l2_norm(const Grid& g, const Field1D& f) { return lp_norm(g, f, 2.0); }

}  // namespace capflow
