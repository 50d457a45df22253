#include "capflow/vof.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "capflow/transform.hpp"

namespace capflow {

// ---- kernels -----------------------------------------------------------

void MollifierSpec::validate() const {
  if (!(delta > 0.0 && delta < 0.5))
    throw std::invalid_argument("mollifier plateau width must be in (0,1/2)");
  if (!(eps > 0.0)) throw std::invalid_argument("mollifier radius must be > 0");
}

namespace {
// descending C^2 smoothstep on [0,1]: 1 -> 0
double shoulder(double t) { return 1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t)); }
double shoulderDeriv(double t) { return -t * t * (30.0 + t * (-60.0 + 30.0 * t)); }
// integral of shoulder from 0 to t
double shoulderInt(double t) {
  const double t4 = t * t * t * t;
  return t - t4 * (2.5 + t * (-3.0 + t));
}
}  // namespace

double psi_plat(double s, double delta) {
  const double a = 1.0 - delta, as = std::fabs(s);
  if (as >= 1.0) return 0.0;
  if (as <= a) return 1.0;
  return shoulder((as - a) / delta);
}

double psi_plat_deriv(double s, double delta) {
  const double a = 1.0 - delta, as = std::fabs(s);
  if (as >= 1.0 || as <= a) return 0.0;
  const double d = shoulderDeriv((as - a) / delta) / delta;
  return s > 0.0 ? d : -d;
}

double psi_plat_antideriv(double s, double delta) {
  const double a = 1.0 - delta;
  const double half = 0.5 * delta;  // mass of one shoulder
  if (s <= -1.0) return 0.0;
  if (s <= -a) {
    const double t = (-s - a) / delta;
    return delta * (0.5 - shoulderInt(t));
  }
  if (s <= a) return half + (s + a);
  if (s <= 1.0) return half + 2.0 * a + delta * shoulderInt((s - a) / delta);
  return 2.0 * a + delta;
}

double psi_mass(double s) {
  if (std::fabs(s) >= 1.0) return 0.0;
  const double q = 1.0 - s * s;
  return (35.0 / 32.0) * q * q * q;
}

double psi_mass_deriv(double s) {
  if (std::fabs(s) >= 1.0) return 0.0;
  const double q = 1.0 - s * s;
  return (35.0 / 32.0) * 3.0 * q * q * (-2.0 * s);
}

// ---- test-function library ---------------------------------------------

namespace {
double bq(double r) {
  const double q = 1.0 - r * r;
  return q > 0.0 ? q * q * q : 0.0;
}
double bqd(double r) {
  const double q = 1.0 - r * r;
  return q > 0.0 ? -6.0 * r * q * q : 0.0;
}
double bqdd(double r) {
  const double q = 1.0 - r * r;
  return q > 0.0 ? -6.0 * q * q + 24.0 * r * r * q : 0.0;
}
double wrap(double d, double lx) {
  d = std::fmod(d, lx);
  if (d > 0.5 * lx) d -= lx;
  if (d < -0.5 * lx) d += lx;
  return d;
}
}  // namespace

TestFunction2 quintic_bump(double xc, double yc, double wx, double wy,
                           double amp, double lx) {
  TestFunction2 tf;
  tf.f = [=](double x, double y) {
    return amp * bq(wrap(x - xc, lx) / wx) * bq((y - yc) / wy);
  };
  tf.grad = [=](double x, double y) -> std::array<double, 2> {
    const double rx = wrap(x - xc, lx) / wx, ry = (y - yc) / wy;
    return {amp * bqd(rx) / wx * bq(ry), amp * bq(rx) * bqd(ry) / wy};
  };
  tf.hess = [=](double x, double y) -> std::array<double, 3> {
    const double rx = wrap(x - xc, lx) / wx, ry = (y - yc) / wy;
    return {amp * bqdd(rx) / (wx * wx) * bq(ry),
            amp * bqd(rx) / wx * bqd(ry) / wy,
            amp * bq(rx) * bqdd(ry) / (wy * wy)};
  };
  // antiderivative of (1-s^2)^3 on [-1,1], zero at s=-1
  auto bqint = [](double s) {
    s = std::clamp(s, -1.0, 1.0);
    const double p = s - s * s * s + 0.6 * std::pow(s, 5) - std::pow(s, 7) / 7.0;
    return p + 16.0 / 35.0;
  };
  tf.yint = [=](double x, double y) {
    return amp * bq(wrap(x - xc, lx) / wx) * wy * bqint((y - yc) / wy);
  };
  tf.dx_yint = [=](double x, double y) {
    return amp * bqd(wrap(x - xc, lx) / wx) / wx * wy * bqint((y - yc) / wy);
  };
  return tf;
}

VectorTestFunction random_vector_bump(std::mt19937& rng, const Grid& g,
                                      double ymin, double ymax) {
  std::uniform_real_distribution<double> ux(0.0, g.lx());
  std::uniform_real_distribution<double> uy(ymin, ymax);
  std::uniform_real_distribution<double> uw(0.6, 1.4);
  std::uniform_real_distribution<double> ua(0.5, 1.5);
  VectorTestFunction v;
  for (int c = 0; c < 2; ++c)
    v.c[c] = quintic_bump(ux(rng), uy(rng), uw(rng), uw(rng), ua(rng), g.lx());
  return v;
}

// ---- periodic / strip interpolation --------------------------------------

namespace {

// 4-point periodic Lagrange interpolation on the uniform x grid
double interpX(const Grid& g, const Field1D& f, double x) {
  const int nx = g.nx();
  const double dx = g.dx();
  double xx = std::fmod(x, g.lx());
  if (xx < 0.0) xx += g.lx();
  const int i0 = static_cast<int>(std::floor(xx / dx));
  double ys[4], vs[4];
  for (int q = 0; q < 4; ++q) {
    const int i = i0 - 1 + q;
    ys[q] = i * dx;
    vs[q] = f[((i % nx) + nx) % nx];
  }
  return cubic_interp(ys, vs, 4, xx);
}

// interpolate one side of a flat field at (x, yh); yh is clamped into the side
double interpSide(const Grid& g, const Field2D& f, double x, double yh,
                  bool upperSide) {
  const int ny = g.nyHalf();
  const int r0 = upperSide ? g.rowUp0() : 0;
  // local rows r0..r0+ny span [0,Ly] or [-Ly,0]
  const double lo = g.y(r0), hi = g.y(r0 + ny);
  const double ye = std::clamp(yh, lo, hi);
  // bracketing local index
  int j = 0;
  while (j < ny - 1 && g.y(r0 + j + 1) < ye) ++j;
  const int js = std::clamp(j - 1, 0, ny - 3);
  double ys[4], vs[4];
  const int nx = g.nx();
  const double dx = g.dx();
  double xx = std::fmod(x, g.lx());
  if (xx < 0.0) xx += g.lx();
  const int i0 = static_cast<int>(std::floor(xx / dx));
  double xs[4], xv[4];
  for (int q = 0; q < 4; ++q) {
    const int i = ((i0 - 1 + q) % nx + nx) % nx;
    xs[q] = (i0 - 1 + q) * dx;
    for (int p = 0; p < 4; ++p) {
      ys[p] = g.y(r0 + js + p);
      vs[p] = f(r0 + js + p, i);
    }
    xv[q] = cubic_interp(ys, vs, 4, ye);
  }
  return cubic_interp(xs, xv, 4, xx);
}

double simpson(double a, double b, int panels,
               const std::function<double(double)>& f) {
  const int n = 2 * panels;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

void checkSlopeBound(const Grid& g, const Field1D& hx,
                     const MollifierSpec& spec, double x) {
  for (int q = 0; q <= 32; ++q) {
    const double xt = x - spec.eps + 2.0 * spec.eps * q / 32.0;
    if (std::fabs(interpX(g, hx, xt)) > 1.0 - spec.delta)
      throw std::domain_error(
          "interface slope exceeds the mollifier plateau bound on the "
          "kernel window");
  }
}

constexpr int kNormalPanels = 192;

}  // namespace

// ---- velocity sampling and transport --------------------------------------

VelocitySampler::VelocitySampler(const Grid& g, const FlatTrajectory& z)
    : g_(g), z_(z) {
  if (z.size() != g.steps() + 1)
    throw std::invalid_argument("trajectory has wrong length");
}

double VelocitySampler::height(double t, double x) const {
  const int M = g_.steps();
  const double dt = g_.spec().dt;
  const int m0 = std::clamp(static_cast<int>(std::floor(t / dt)) - 1, 0,
                            std::max(0, M - 3));
  double ts[4], vs[4];
  const int nlev = std::min(4, M + 1);
  for (int q = 0; q < nlev; ++q) {
    ts[q] = (m0 + q) * dt;
    vs[q] = interpX(g_, z_[m0 + q].h, x);
  }
  if (nlev == 1) return vs[0];
  return cubic_interp(ts, vs, nlev, t);
}

std::array<double, 2> VelocitySampler::operator()(double t, double x,
                                                  double y) const {
  const int M = g_.steps();
  const double dt = g_.spec().dt;
  const double tc = std::clamp(t, 0.0, M * dt);
  const int m0 = std::clamp(static_cast<int>(std::floor(tc / dt)) - 1, 0,
                            std::max(0, M - 3));
  const int nlev = std::min(4, M + 1);
  double ts[4], vv[4], wv[4];
  for (int q = 0; q < nlev; ++q) {
    const int m = m0 + q;
    ts[q] = m * dt;
    const double hm = interpX(g_, z_[m].h, x);
    const double yh = y - hm;
    if (yh < -g_.ly() || yh > g_.ly()) {
      vv[q] = 0.0;
      wv[q] = 0.0;
      continue;
    }
    const bool up = yh >= 0.0;
    vv[q] = interpSide(g_, z_[m].v, x, yh, up);
    wv[q] = interpSide(g_, z_[m].w, x, yh, up);
  }
  if (nlev == 1) return {vv[0], wv[0]};
  return {cubic_interp(ts, vv, nlev, tc), cubic_interp(ts, wv, nlev, tc)};
}

PhaseField::PhaseField(const Grid& g, const VelocitySampler& u, Field1D h0)
    : g_(g), u_(u), h0_(std::move(h0)) {}

std::array<double, 2> PhaseField::foot(double t, double x, double y) const {
  const double hstep = g_.spec().dt / 4.0;
  double tau = t, px = x, py = y;
  bool exited = false;
  while (tau > 1e-14) {
    const double dstep = std::min(hstep, tau);
    auto rhs = [&](double tt, double ax, double ay) {
      return u_(tt, ax, ay);  // integrated with negative step below
    };
    const auto k1 = rhs(tau, px, py);
    const auto k2 = rhs(tau - 0.5 * dstep, px - 0.5 * dstep * k1[0],
                        py - 0.5 * dstep * k1[1]);
    const auto k3 = rhs(tau - 0.5 * dstep, px - 0.5 * dstep * k2[0],
                        py - 0.5 * dstep * k2[1]);
    const auto k4 = rhs(tau - dstep, px - dstep * k3[0], py - dstep * k3[1]);
    px -= dstep / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
    py -= dstep / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
    tau -= dstep;
    if (std::fabs(py) > g_.ly()) exited = true;
  }
  if (exited) ++exits_;
  return {px, py};
}

double PhaseField::alpha(double t, double x, double y) const {
  const auto p = foot(t, x, y);
  return p[1] < interpX(g_, h0_, p[0]) ? 1.0 : 0.0;
}

PhaseField advect_indicator(const Grid& g, const VelocitySampler& u,
                            const Field1D& h0) {
  return PhaseField(g, u, h0);
}

// ---- mollified normals -----------------------------------------------------

Vec2 mollified_normal_volume(const Grid& g, const Field1D& h,
                             const MollifierSpec& spec, double x, double y) {
  spec.validate();
  const Field1D hx = ddx(g, h);
  checkSlopeBound(g, hx, spec, x);
  const double e = spec.eps;
  // inner y-integrals of the subgraph indicator are analytic:
  //   x-part: eps^{-2} psi_mass'((xt-x)/e) * e * Psi_plat(clamp((h-y)/e))
  //   y-part: eps^{-1} psi_mass((xt-x)/e) * psi_plat(clamp((h-y)/e))
  auto fx = [&](double xt) {
    const double s = std::clamp((interpX(g, h, xt) - y) / e, -1.0, 1.0);
    return psi_mass_deriv((xt - x) / e) / e * psi_plat_antideriv(s, spec.delta);
  };
  auto fy = [&](double xt) {
    const double s = std::clamp((interpX(g, h, xt) - y) / e, -1.0, 1.0);
    return psi_mass((xt - x) / e) / e * psi_plat(s, spec.delta);
  };
  return {simpson(x - e, x + e, kNormalPanels, fx),
          simpson(x - e, x + e, kNormalPanels, fy)};
}

Vec2 mollified_normal_graph(const Grid& g, const Field1D& h,
                            const MollifierSpec& spec, double x, double y) {
  spec.validate();
  const Field1D hx = ddx(g, h);
  checkSlopeBound(g, hx, spec, x);
  const double e = spec.eps;
  auto kern = [&](double xt) {
    return psi_mass((xt - x) / e) / e *
           psi_plat((interpX(g, h, xt) - y) / e, spec.delta);
  };
  auto fx = [&](double xt) { return -kern(xt) * interpX(g, hx, xt); };
  auto fy = [&](double xt) { return kern(xt); };
  return {simpson(x - e, x + e, kNormalPanels, fx),
          simpson(x - e, x + e, kNormalPanels, fy)};
}

Vec2 mollified_normal_interface(const Grid& g, const Field1D& h,
                                const MollifierSpec& spec, double x) {
  spec.validate();
  const Field1D hx = ddx(g, h);
  checkSlopeBound(g, hx, spec, x);
  const double e = spec.eps;
  auto fx = [&](double xt) {
    return -psi_mass((xt - x) / e) / e * interpX(g, hx, xt);
  };
  auto fy = [&](double xt) { return psi_mass((xt - x) / e) / e; };
  return {simpson(x - e, x + e, kNormalPanels, fx),
          simpson(x - e, x + e, kNormalPanels, fy)};
}

Vec2 delta_mollified_normal(const Grid& g, const Field1D& h,
                            const Field1D& dh, const MollifierSpec& spec,
                            double x, double y) {
  spec.validate();
  const Field1D hx = ddx(g, h);
  checkSlopeBound(g, hx, spec, x);
  const double e = spec.eps;
  auto fx = [&](double xt) {
    return psi_mass_deriv((xt - x) / e) / (e * e) *
           psi_plat((interpX(g, h, xt) - y) / e, spec.delta) *
           interpX(g, dh, xt);
  };
  auto fy = [&](double xt) {
    return psi_mass((xt - x) / e) / (e * e) *
           psi_plat_deriv((interpX(g, h, xt) - y) / e, spec.delta) *
           interpX(g, dh, xt);
  };
  return {simpson(x - e, x + e, kNormalPanels, fx),
          simpson(x - e, x + e, kNormalPanels, fy)};
}

Vec2 delta_mollified_normal_interface(const Grid& g, const Field1D& h,
                                      const Field1D& dh,
                                      const MollifierSpec& spec, double x) {
  spec.validate();
  const Field1D hx = ddx(g, h);
  checkSlopeBound(g, hx, spec, x);
  const Field1D dhx = ddx(g, dh);
  const double e = spec.eps;
  auto fx = [&](double xt) {
    return -psi_mass((xt - x) / e) / e * interpX(g, dhx, xt);
  };
  return {simpson(x - e, x + e, kNormalPanels, fx), 0.0};
}


namespace {

constexpr int kQuadRefine = 16;  ///< oversampling factor for 1D quadratures

// trigonometric interpolation onto a grid refined by `factor`
Field1D upsampleX(const Field1D& f, int factor) {
  const int n = static_cast<int>(f.size()), N = n * factor;
  Eigen::VectorXcd c = fft_forward(f.matrix());
  Eigen::VectorXcd C = Eigen::VectorXcd::Zero(N / 2 + 1);
  C.head(n / 2 + 1) = c;
  return fft_inverse(C, N).array();
}

}  // namespace

// ---- interface measure pairings --------------------------------------------

double pair_measure(const Grid& g, const TestFunction2& phi,
                    const InterfaceMeasure& m) {
  const Field1D hf = upsampleX(m.h, kQuadRefine);
  const Field1D df = upsampleX(m.dh, kQuadRefine);
  const int N = static_cast<int>(hf.size());
  const double dx = g.lx() / N;
  double s = 0.0;
  for (int i = 0; i < N; ++i) s += phi.f(i * dx, hf[i]) * df[i];
  return s * dx;
}

double pair_measure_gradient(const Grid& g, const VectorTestFunction& psi,
                             const InterfaceMeasure& m, GradientForm form) {
  const Field1D hf = upsampleX(m.h, kQuadRefine);
  const Field1D df = upsampleX(m.dh, kQuadRefine);
  const Field1D hxf = upsampleX(ddx(g, m.h), kQuadRefine);
  const Field1D dxf = upsampleX(ddx(g, m.dh), kQuadRefine);
  const int N = static_cast<int>(hf.size());
  const double dx = g.lx() / N;
  double s = 0.0;
  for (int i = 0; i < N; ++i) {
    const double x = i * dx, y = hf[i];
    const auto g0 = psi.c[0].grad(x, y), g1 = psi.c[1].grad(x, y);
    if (form == GradientForm::Divergence) {
      s += (g0[0] + g1[1]) * df[i];
    } else {
      // d_y psi . (-h',1) dh + psi . (-dh',0)
      s += (g0[1] * (-hxf[i]) + g1[1]) * df[i] - psi.c[0].f(x, y) * dxf[i];
    }
  }
  return s * dx;
}

// ---- surface tension ---------------------------------------------------------

namespace {

// the traceless pairing matrix M = Dphi - div(phi) I at a point:
// M = [[-p1y, p0y], [p1x, -p0x]]
struct PairMat {
  double a11, a12, a21, a22;
};
PairMat pairMat(const VectorTestFunction& phi, double x, double y) {
  const auto g0 = phi.c[0].grad(x, y), g1 = phi.c[1].grad(x, y);
  return {-g1[1], g0[1], g1[0], -g0[0]};
}
PairMat pairMatDy(const VectorTestFunction& phi, double x, double y) {
  const auto h0 = phi.c[0].hess(x, y), h1 = phi.c[1].hess(x, y);
  // d/dy of [[-p1y, p0y],[p1x, -p0x]]
  return {-h1[2], h0[2], h1[1], -h0[1]};
}
double quad(const PairMat& M, double ax, double ay, double bx, double by) {
  return ax * (M.a11 * bx + M.a12 * by) + ay * (M.a21 * bx + M.a22 * by);
}

}  // namespace

double surface_tension_term(const Grid& g, const Field1D& h, double sigma,
                            const VectorTestFunction& phi, SurfaceForm form) {
  const Field1D hx = ddx(g, h);
  const Field1D hf = upsampleX(h, kQuadRefine);
  const Field1D hxf = upsampleX(hx, kQuadRefine);
  const int N = static_cast<int>(hf.size());
  const double dx = g.lx() / N;
  double s = 0.0;
  if (form == SurfaceForm::Curvature) {
    Field1D slope = hx / (1.0 + hx.square()).sqrt();
    const Field1D kf = upsampleX(ddx(g, slope), kQuadRefine);
    for (int i = 0; i < N; ++i) {
      const double x = i * dx, y = hf[i];
      s += kf[i] * (-hxf[i] * phi.c[0].f(x, y) + phi.c[1].f(x, y));
    }
  } else {
    for (int i = 0; i < N; ++i) {
      const double x = i * dx, y = hf[i];
      const PairMat M = pairMat(phi, x, y);
      const double n = std::sqrt(1.0 + hxf[i] * hxf[i]);
      s += quad(M, hxf[i] / n, -1.0 / n, hxf[i], -1.0);
    }
  }
  return sigma * s * dx;
}

double surface_tension_term_mollified(const Grid& g, const Field1D& h,
                                      double sigma,
                                      const VectorTestFunction& phi,
                                      const MollifierSpec& spec) {
  spec.validate();
  const Field1D hx = ddx(g, h);
  const Field1D hf = upsampleX(h, kQuadRefine);
  const Field1D hxf = upsampleX(hx, kQuadRefine);
  const int N = static_cast<int>(hf.size());
  const double dx = g.lx() / N;
  const double e = spec.eps;
  double s = 0.0;
  for (int i = 0; i < N; ++i) {
    const double x = i * dx, y = hf[i];
    checkSlopeBound(g, hx, spec, x);
    auto fnx = [&](double xt) {
      return -psi_mass((xt - x) / e) / e * interpX(g, hx, xt);
    };
    auto fny = [&](double xt) { return psi_mass((xt - x) / e) / e; };
    const Vec2 nu = {simpson(x - e, x + e, kNormalPanels, fnx),
                     simpson(x - e, x + e, kNormalPanels, fny)};
    const double n = std::hypot(nu.x, nu.y);
    const PairMat M = pairMat(phi, x, y);
    s += quad(M, nu.x / n, nu.y / n, -hxf[i], 1.0);
  }
  return sigma * s * dx;
}

double surface_tension_variation(const Grid& g, const Field1D& h,
                                 const Field1D& dh, double sigma,
                                 const VectorTestFunction& phi) {
  const Field1D hf = upsampleX(h, kQuadRefine);
  const Field1D hxf = upsampleX(ddx(g, h), kQuadRefine);
  const Field1D df = upsampleX(dh, kQuadRefine);
  const Field1D dxf = upsampleX(ddx(g, dh), kQuadRefine);
  const int N = static_cast<int>(hf.size());
  const double dx = g.lx() / N;
  double s = 0.0;
  for (int i = 0; i < N; ++i) {
    const double x = i * dx, y = hf[i];
    const double nx = -hxf[i], ny = 1.0, dnx = -dxf[i];
    const double n2 = nx * nx + ny * ny, n = std::sqrt(n2);
    const PairMat M = pairMat(phi, x, y);
    const PairMat My = pairMatDy(phi, x, y);
    const double dot = dnx * nx;  // delta(nu).nu (y-component is 0)
    // (delta nu / |nu| - (delta nu.nu) nu / |nu|^3) M nu
    s += quad(M, dnx / n - dot * nx / (n2 * n), -dot * ny / (n2 * n), nx, ny);
    // nu/|nu| . (d_y M dh nu + M delta nu)
    s += quad(My, nx / n, ny / n, nx, ny) * df[i];
    s += quad(M, nx / n, ny / n, dnx, 0.0);
  }
  return sigma * s * dx;
}

double surface_tension_variation_mollified(const Grid& g, const Field1D& h,
                                           const Field1D& dh, double sigma,
                                           const VectorTestFunction& phi,
                                           const MollifierSpec& spec) {
  spec.validate();
  const Field1D hx = ddx(g, h);
  const Field1D dhx = ddx(g, dh);
  const Field1D hf = upsampleX(h, kQuadRefine);
  const Field1D hxf = upsampleX(hx, kQuadRefine);
  const Field1D df = upsampleX(dh, kQuadRefine);
  const Field1D dxf = upsampleX(dhx, kQuadRefine);
  const int N = static_cast<int>(hf.size());
  const double dx = g.lx() / N;
  const double e = spec.eps;
  double s = 0.0;
  for (int i = 0; i < N; ++i) {
    const double x = i * dx, y = hf[i];
    checkSlopeBound(g, hx, spec, x);
    auto fnx = [&](double xt) {
      return -psi_mass((xt - x) / e) / e * interpX(g, hx, xt);
    };
    auto fny = [&](double xt) { return psi_mass((xt - x) / e) / e; };
    const Vec2 nu = {simpson(x - e, x + e, kNormalPanels, fnx),
                     simpson(x - e, x + e, kNormalPanels, fny)};
    auto fdx = [&](double xt) {
      return -psi_mass((xt - x) / e) / e * interpX(g, dhx, xt);
    };
    const Vec2 dnu = {simpson(x - e, x + e, kNormalPanels, fdx), 0.0};
    const double n2 = nu.x * nu.x + nu.y * nu.y, n = std::sqrt(n2);
    const double nx = -hxf[i], ny = 1.0;  // exact grad(alpha) direction
    const PairMat M = pairMat(phi, x, y);
    const PairMat My = pairMatDy(phi, x, y);
    const double dot = dnu.x * nu.x + dnu.y * nu.y;
    s += quad(M, dnu.x / n - dot * nu.x / (n2 * n),
              dnu.y / n - dot * nu.y / (n2 * n), nx, ny);
    // measure pairing of psi = sigma nu_eps/|nu_eps| M(x,.) with grad(d da):
    // d_y psi.(-h',1) dh + psi.(-dh',0); nu_eps depends on x only
    s += quad(My, nu.x / n, nu.y / n, nx, ny) * df[i];
    s += quad(M, nu.x / n, nu.y / n, -dxf[i], 0.0);
  }
  return sigma * s * dx;
}

// ---- weak-form residual evaluators -------------------------------------------

namespace {

// C^2 time window vanishing with two derivatives at t=0 and t=t0
struct TimeWindow {
  double t0;
  double value(double t) const { return bq(2.0 * t / t0 - 1.0); }
  double deriv(double t) const { return bqd(2.0 * t / t0 - 1.0) * 2.0 / t0; }
};

Field2D colMulF(const Field2D& f, const Field1D& a) {
  Field2D out = f;
  for (int i = 0; i < f.cols(); ++i) out.col(i) *= a[i];
  return out;
}

}  // namespace

VofResidual vof_forward_residual(const Grid& g, const PhysicalParams& p,
                                 const FlatTrajectory& z,
                                 const ControlTrajectory& control,
                                 const VectorTestFunction& phi,
                                 const MollifierSpec& spec) {
  const int M = g.steps();
  const double dt = g.spec().dt;
  const TimeWindow th{g.spec().t0};
  const Field2D rho = g.phaseConstant(p.rho1, p.rho2);
  const Field2D mu = g.phaseConstant(p.mu1, p.mu2);

  double mom = 0.0, divr = 0.0, momSc = 0.0, divSc = 0.0;
  for (int m = 0; m <= M; ++m) {
    const double t = g.time(m);
    const double wt = (m == 0 || m == M) ? 0.5 * dt : dt;
    const double tv = th.value(t), td = th.deriv(t);

    const FlatState& s = z[m];
    const Field1D hx = ddx(g, s.h);
    const Field2D vx = ddx(g, s.v), vy = ddy(g, s.v);
    const Field2D wx = ddx(g, s.w), wy = ddy(g, s.w);
    // physical gradients in flat coordinates
    const Field2D ux = vx - colMulF(vy, hx);
    const Field2D wxp = wx - colMulF(wy, hx);
    const Field2D cv = pullback_control(g, control[m].v, s.h);
    const Field2D cw = pullback_control(g, control[m].w, s.h);

    Field2D bulk = g.zero2D();
    Field2D divf = g.zero2D();
    Field2D divsc = g.zero2D();
    for (int r = 0; r < g.rows(); ++r)
      for (int i = 0; i < g.nx(); ++i) {
        const double x = g.x(i), y = s.h[i] + g.y(r);
        const double f0 = phi.c[0].f(x, y), f1 = phi.c[1].f(x, y);
        const auto g0 = phi.c[0].grad(x, y), g1 = phi.c[1].grad(x, y);
        const double v = s.v(r, i), w = s.w(r, i), q = s.pi(r, i);
        const double d11 = 2.0 * ux(r, i), d12 = vy(r, i) + wxp(r, i),
                     d22 = 2.0 * wy(r, i);
        // - rho u.phi th' - th rho u.(u.grad phi) + th S:grad phi - th c.phi
        double a = -rho(r, i) * (v * f0 + w * f1) * td;
        a -= tv * rho(r, i) *
             (v * (v * g0[0] + w * g0[1]) + w * (v * g1[0] + w * g1[1]));
        a += tv * (-q * (g0[0] + g1[1]) +
                   mu(r, i) * (d11 * g0[0] + d12 * (g0[1] + g1[0]) +
                               d22 * g1[1]));
        a -= tv * (cv(r, i) * f0 + cw(r, i) * f1);
        bulk(r, i) = a;
        divf(r, i) = (ux(r, i) + wy(r, i)) * f0;
        divsc(r, i) = (std::fabs(ux(r, i)) + std::fabs(wy(r, i))) *
                      std::fabs(f0);
      }
    const double bulkInt = integrate(g, bulk);
    const double surf =
        surface_tension_term_mollified(g, s.h, p.sigma, phi, spec);
    mom += wt * (bulkInt - tv * surf);
    momSc += wt * (integrate(g, Field2D(bulk.abs())) + std::fabs(tv * surf));
    divr += wt * tv * integrate(g, divf);
    divSc += wt * tv * integrate(g, divsc);
  }
  return {std::fabs(mom), std::fabs(divr), momSc, divSc};
}

VofResidual vof_sensitivity_residual(const Grid& g, const PhysicalParams& p,
                                     const FlatTrajectory& z,
                                     const FlatTrajectory& dz,
                                     const ControlTrajectory& dcontrol,
                                     const VectorTestFunction& phi,
                                     const MollifierSpec& spec) {
  const int M = g.steps();
  const double dt = g.spec().dt;
  const TimeWindow th{g.spec().t0};
  const Field2D rho = g.phaseConstant(p.rho1, p.rho2);
  const Field2D mu = g.phaseConstant(p.mu1, p.mu2);

  double mom = 0.0, divr = 0.0, momSc = 0.0, divSc = 0.0;
  for (int m = 0; m <= M; ++m) {
    const double t = g.time(m);
    const double wt = (m == 0 || m == M) ? 0.5 * dt : dt;
    const double tv = th.value(t), td = th.deriv(t);

    const FlatState& s = z[m];
    const FlatState& d = dz[m];
    const Field1D hx = ddx(g, s.h);

    // flat representations of the physical sensitivities:
    // delta u = du_flat - d_y u_flat * dh, same for w and q
    const Field2D Av = d.v - colMulF(ddy(g, s.v), d.h);
    const Field2D Aw = d.w - colMulF(ddy(g, s.w), d.h);
    const Field2D Aq = d.pi - colMulF(ddy(g, s.pi), d.h);
    const Field2D Avy = ddy(g, Av), Awy = ddy(g, Aw);
    const Field2D Avx = ddx(g, Av) - colMulF(Avy, hx);
    const Field2D Awx = ddx(g, Aw) - colMulF(Awy, hx);
    const Field2D vy = ddy(g, s.v), wy = ddy(g, s.w);
    const Field2D uxp = ddx(g, s.v) - colMulF(vy, hx);
    const Field2D wxp = ddx(g, s.w) - colMulF(wy, hx);

    const Field2D dcv = pullback_control(g, dcontrol[m].v, s.h);
    const Field2D dcw = pullback_control(g, dcontrol[m].w, s.h);

    Field2D bulk = g.zero2D();
    Field2D divf = g.zero2D();
    Field2D divsc = g.zero2D();
    for (int r = 0; r < g.rows(); ++r)
      for (int i = 0; i < g.nx(); ++i) {
        const double x = g.x(i), y = s.h[i] + g.y(r);
        const double f0 = phi.c[0].f(x, y), f1 = phi.c[1].f(x, y);
        const auto g0 = phi.c[0].grad(x, y), g1 = phi.c[1].grad(x, y);
        const double v = s.v(r, i), w = s.w(r, i);
        const double du = Av(r, i), dw = Aw(r, i), dq = Aq(r, i);
        const double d11 = 2.0 * Avx(r, i), d12 = Avy(r, i) + Awx(r, i),
                     d22 = 2.0 * Awy(r, i);
        double a = -rho(r, i) * (du * f0 + dw * f1) * td;
        a -= tv * rho(r, i) *
             (du * (v * g0[0] + w * g0[1]) + dw * (v * g1[0] + w * g1[1]) +
              v * (du * g0[0] + dw * g0[1]) + w * (du * g1[0] + dw * g1[1]));
        a += tv * (-dq * (g0[0] + g1[1]) +
                   mu(r, i) * (d11 * g0[0] + d12 * (g0[1] + g1[0]) +
                               d22 * g1[1]));
        a -= tv * (dcv(r, i) * f0 + dcw(r, i) * f1);
        bulk(r, i) = a;
        divf(r, i) = (Avx(r, i) + Awy(r, i)) * f0;
        divsc(r, i) = (std::fabs(Avx(r, i)) + std::fabs(Awy(r, i))) *
                      std::fabs(f0);
      }
    mom += wt * integrate(g, bulk);
    momSc += wt * integrate(g, Field2D(bulk.abs()));
    divr += wt * tv * integrate(g, divf);
    divSc += wt * tv * integrate(g, divsc);

    // density-jump transport pairing with the measure
    const TraceJump tv_ = trace_jump(g, s.v), tw_ = trace_jump(g, s.w);
    const TraceJump tq = trace_jump(g, s.pi);
    const InterfaceDeformation D = interface_deformation(g, s.v, s.w, s.h);
    double iface = 0.0;
    for (int i = 0; i < g.nx(); ++i) {
      const double x = g.x(i), y = s.h[i];
      const double f0 = phi.c[0].f(x, y), f1 = phi.c[1].f(x, y);
      const auto g0 = phi.c[0].grad(x, y), g1 = phi.c[1].grad(x, y);
      const double v = tv_.trace[i], w = tw_.trace[i];  // [u]=0
      // (rho2-rho1) u.(th' phi + th u.grad phi)
      iface += (p.rho2 - p.rho1) *
               ((v * f0 + w * f1) * td +
                tv * (v * (v * g0[0] + w * g0[1]) +
                      w * (v * g1[0] + w * g1[1]))) *
               d.h[i];
      // -[S(u,q;mu)] : grad phi
      const double jxx = -tq.jump[i] + p.mu2 * D.dxx_up[i] - p.mu1 * D.dxx_lo[i];
      const double jxy = p.mu2 * D.dxy_up[i] - p.mu1 * D.dxy_lo[i];
      const double jyy = -tq.jump[i] + p.mu2 * D.dyy_up[i] - p.mu1 * D.dyy_lo[i];
      iface -= tv * (jxx * g0[0] + jxy * (g0[1] + g1[0]) + jyy * g1[1]) *
               d.h[i];
    }
    mom += wt * iface * g.dx();
    momSc += wt * std::fabs(iface) * g.dx();

    const double surf = surface_tension_variation_mollified(g, s.h, d.h,
                                                            p.sigma, phi,
                                                            spec);
    mom -= wt * tv * surf;
    momSc += wt * std::fabs(tv * surf);
  }
  return {std::fabs(mom), std::fabs(divr), momSc, divSc};
}

}  // namespace capflow
