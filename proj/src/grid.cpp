#include "capflow/grid.hpp"

#include <algorithm>

namespace capflow {

void GridSpec::validate() const {
  if (nx < 8 || nx % 2 != 0) throw std::invalid_argument("GridSpec: nx must be >= 8 and even");
  if ((nx & (nx - 1)) != 0) throw std::invalid_argument("GridSpec: nx must be a power of two");
  if (ny < 8) throw std::invalid_argument("GridSpec: ny must be >= 8");
  if (!(lx > 0) || !(ly > 0)) throw std::invalid_argument("GridSpec: lx, ly must be positive");
  if (!(dt > 0)) throw std::invalid_argument("GridSpec: dt must be positive");
  if (!(t0 >= dt)) throw std::invalid_argument("GridSpec: t0 must be >= dt");
  if (!(p_diag > 4)) throw std::invalid_argument("GridSpec: p_diag must be > 4");
  if (std::abs(steps() * dt - t0) > 1e-9 * t0)
    throw std::invalid_argument("GridSpec: t0 must be an integer multiple of dt");
}

void PhysicalParams::validate() const {
  if (!(rho1 > 0 && rho2 > 0 && mu1 > 0 && mu2 > 0 && sigma > 0))
    throw std::invalid_argument("PhysicalParams: all parameters must be strictly positive");
}

namespace {

// First/second derivative weights of the Lagrange polynomial through
// (y0,y1,y2), evaluated at ye.
void fd3(const double yn[3], double ye, double d1[3], double d2[3]) {
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3, k = (i + 2) % 3;
    const double denom = (yn[i] - yn[j]) * (yn[i] - yn[k]);
    d1[i] = ((ye - yn[j]) + (ye - yn[k])) / denom;
    d2[i] = 2.0 / denom;
  }
}

}  // namespace

Grid::Grid(const GridSpec& spec) : spec_(spec) {
  spec_.validate();
  const int nx = spec_.nx, ny = spec_.ny;
  x_.resize(nx);
  for (int i = 0; i < nx; ++i) x_[i] = spec_.lx * i / nx;

  // Upper-half node positions in [0,Ly], optionally clustered near y=0.
  std::vector<double> yup(ny + 1);
  const double a = spec_.y_stretch;
  for (int j = 0; j <= ny; ++j) {
    const double xi = static_cast<double>(j) / ny;
    yup[j] = a > 0 ? spec_.ly * std::sinh(a * xi) / std::sinh(a) : spec_.ly * xi;
  }
  y_.resize(rows());
  for (int j = 0; j <= ny; ++j) y_[j] = -yup[ny - j];      // lower: -Ly..0
  for (int j = 0; j <= ny; ++j) y_[ny + 1 + j] = yup[j];   // upper: 0..Ly

  stencils_.resize(rows());
  auto sideRange = [&](int r, int& lo, int& hi) {
    if (r <= rowLo0()) { lo = 0; hi = rowLo0(); }
    else { lo = rowUp0(); hi = rows() - 1; }
  };
  for (int r = 0; r < rows(); ++r) {
    int lo, hi;
    sideRange(r, lo, hi);
    int c = std::clamp(r, lo + 1, hi - 1);  // stencil center
    YStencil s;
    s.idx[0] = c - 1; s.idx[1] = c; s.idx[2] = c + 1;
    double yn[3] = {y_[c - 1], y_[c], y_[c + 1]};
    fd3(yn, y_[r], s.d1, s.d2);
    stencils_[r] = s;
  }
}

Field2D Grid::phaseConstant(double value1, double value2) const {
  Field2D f(rows(), nx());
  for (int r = 0; r < rows(); ++r)
    f.row(r).setConstant(upper(r) ? value2 : value1);
  return f;
}

namespace {

void spectralDerivRow(Eigen::VectorXd& row, double lx, int order) {
  const int n = static_cast<int>(row.size());
  Eigen::VectorXcd c = fft_forward(row);
  for (int k = 0; k <= n / 2; ++k) {
    const double kk = wavenumber(k, lx);
    if (order == 1) {
      c[k] *= Complex(0.0, kk);
      if (k == n / 2) c[k] = 0.0;  // Nyquist has no well-defined odd derivative
    } else {
      c[k] *= -kk * kk;
    }
  }
  row = fft_inverse(c, n);
}

}  // namespace

Field2D ddx(const Grid& g, const Field2D& f, int order) {
  if (order != 1 && order != 2) throw std::invalid_argument("ddx: order must be 1 or 2");
  if (!f.isFinite().all()) throw std::invalid_argument("ddx: non-finite input");
  Field2D out(f.rows(), f.cols());
  Eigen::VectorXd row(f.cols());
  for (int r = 0; r < f.rows(); ++r) {
    row = f.row(r).matrix().transpose();
    spectralDerivRow(row, g.lx(), order);
    out.row(r) = row.transpose().array();
  }
  return out;
}

Field1D ddx(const Grid& g, const Field1D& f, int order) {
  if (order != 1 && order != 2) throw std::invalid_argument("ddx: order must be 1 or 2");
  if (!f.isFinite().all()) throw std::invalid_argument("ddx: non-finite input");
  Eigen::VectorXd row = f.matrix();
  spectralDerivRow(row, g.lx(), order);
  return row.array();
}

Field2D ddy(const Grid& g, const Field2D& f, int order) {
  if (order != 1 && order != 2) throw std::invalid_argument("ddy: order must be 1 or 2");
  if (g.nyHalf() < 2) throw std::invalid_argument("ddy: need at least 3 nodes per half-strip");
  Field2D out(f.rows(), f.cols());
  for (int r = 0; r < f.rows(); ++r) {
    const auto& s = g.ystencil(r);
    const double* wgt = (order == 1) ? s.d1 : s.d2;
    out.row(r) = wgt[0] * f.row(s.idx[0]) + wgt[1] * f.row(s.idx[1]) +
                 wgt[2] * f.row(s.idx[2]);
  }
  return out;
}

TraceJump trace_jump(const Grid& g, const Field2D& f) {
  TraceJump tj;
  tj.lower = f.row(g.rowLo0()).transpose();
  tj.trace = f.row(g.rowUp0()).transpose();
  tj.jump = tj.trace - tj.lower;
  return tj;
}

namespace {

double yQuadrature(const Grid& g, const Field2D& f, int colBegin, int colEnd,
                   int rLo, int rHi, double dx) {
  // trapezoid in y, uniform weight dx in x (periodic)
  double total = 0.0;
  for (int r = rLo; r < rHi; ++r) {
    const double wy = 0.5 * (g.y(r + 1) - g.y(r));
    for (int i = colBegin; i < colEnd; ++i)
      total += wy * (f(r, i) + f(r + 1, i)) * dx;
  }
  return total;
}

}  // namespace

double integrate(const Grid& g, const Field2D& f, Region region) {
  if (!f.isFinite().all()) throw std::invalid_argument("integrate: non-finite input");
  const double dx = g.dx();
  double total = 0.0;
  if (region == Region::Full || region == Region::HalfLower)
    total += yQuadrature(g, f, 0, g.nx(), 0, g.rowLo0(), dx);
  if (region == Region::Full || region == Region::HalfUpper)
    total += yQuadrature(g, f, 0, g.nx(), g.rowUp0(), g.rows() - 1, dx);
  return total;
}

double integrate_interface(const Grid& g, const Field1D& f, const Field1D* h) {
  const double dx = g.dx();
  if (!h) return f.sum() * dx;
  Field1D hx = ddx(g, *h, 1);
  return (f * (1.0 + hx.square()).sqrt()).sum() * dx;
}

double lp_norm(const Grid& g, const Field2D& f, double p) {
  return std::pow(integrate(g, f.abs().pow(p)), 1.0 / p);
}

double lp_norm(const Grid& g, const Field1D& f, double p) {
  return std::pow((f.abs().pow(p)).sum() * g.dx(), 1.0 / p);
}

double max_norm(const Field2D& f) { return f.abs().maxCoeff(); }
double max_norm(const Field1D& f) { return f.abs().maxCoeff(); }

}  // namespace capflow
