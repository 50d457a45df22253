#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "capflow/grid.hpp"
#include "capflow/interface_geometry.hpp"
#include "capflow/rhs.hpp"
#include "capflow/stokes.hpp"
#include "capflow/transform.hpp"

using namespace capflow;

namespace {

Grid makeGrid(int nx, int ny, double dt, double t0) {
  GridSpec s;
  s.nx = nx;
  s.ny = ny;
  s.dt = dt;
  s.t0 = t0;
  return Grid(s);
}

PhysicalParams makeParams() {
  PhysicalParams p;
  p.rho1 = 1.0;
  p.rho2 = 0.8;
  p.mu1 = 2.0;
  p.mu2 = 3.0;
  p.sigma = 1.0;
  return p;
}

/// Smooth two-phase trajectory compatible with the wall and continuity
/// rows ([u]=0, u=0 at the walls) and with no k=0 pressure content.
FlatTrajectory manufactured(const Grid& g) {
  FlatTrajectory z = FlatTrajectory::zero(g);
  for (int m = 0; m < z.size(); ++m) {
    double T = 1.0 + 0.5 * g.time(m);
    for (int r = 0; r < g.rows(); ++r) {
      double y = g.y(r);
      double phi = std::cos(0.5 * M_PI * y / g.ly());
      double plin = g.upper(r) ? (2.0 - 0.3 * y) : (1.0 + 0.2 * y);
      for (int i = 0; i < g.nx(); ++i) {
        double x = g.x(i);
        z[m].v(r, i) = T * std::sin(x) * phi;
        z[m].w(r, i) = T * std::cos(x) * phi * phi;
        z[m].pi(r, i) = T * std::cos(x) * plin;
      }
    }
    for (int i = 0; i < g.nx(); ++i)
      z[m].h[i] = 0.01 * T * std::cos(g.x(i));
    z[m].r = trace_jump(g, z[m].pi).jump;
  }
  return z;
}

Field2D shiftX(const Field2D& f) {
  Field2D out(f.rows(), f.cols());
  out.rightCols(f.cols() - 1) = f.leftCols(f.cols() - 1);
  out.col(0) = f.col(f.cols() - 1);
  return out;
}

Field1D shiftX(const Field1D& f) {
  Field1D out(f.size());
  out.tail(f.size() - 1) = f.head(f.size() - 1);
  out[0] = f[f.size() - 1];
  return out;
}

double modeAmp(const Grid& g, const Field1D& h, int k) {
  return std::abs(fft_forward(Eigen::VectorXd(h.matrix()))[k]);
}

/// Continuous-time per-mode relaxation rate: slowest decaying eigenmode of
/// the spatial two-phase Stokes pencil with surface tension, assembled
/// independently of the solver on the same node set (after v = i*a the
/// pencil is real).
double relaxationRateOracle(const Grid& g, const PhysicalParams& p, int kmode) {
  const int ny = g.nyHalf();
  const double k = wavenumber(kmode, g.lx());
  const double dy = g.ly() / ny;
  const int J = ny + 1;
  const int nU = 6 * J + 1;
  auto ia = [&](int s, int j) { return s * 3 * J + 3 * j + 0; };
  auto iw = [&](int s, int j) { return s * 3 * J + 3 * j + 1; };
  auto ip = [&](int s, int j) { return s * 3 * J + 3 * j + 2; };
  const int ih = 6 * J;

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nU, nU);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nU, nU);
  int row = 0;

  // walls
  K(row++, ia(0, 0)) = 1.0;
  K(row++, iw(0, 0)) = 1.0;
  K(row++, ia(1, ny)) = 1.0;
  K(row++, iw(1, ny)) = 1.0;

  const double mu[2] = {p.mu1, p.mu2};
  const double rho[2] = {p.rho1, p.rho2};

  // one-sided uniform-grid stencils at the interface nodes
  auto addD2 = [&](int r, int s, int j, auto comp, double coef) {
    if (j > 0 && j < ny) {
      K(r, comp(s, j - 1)) += coef / (dy * dy);
      K(r, comp(s, j)) += -2.0 * coef / (dy * dy);
      K(r, comp(s, j + 1)) += coef / (dy * dy);
    } else if (j == ny) {  // lower interface node
      K(r, comp(s, ny)) += 2.0 * coef / (dy * dy);
      K(r, comp(s, ny - 1)) += -5.0 * coef / (dy * dy);
      K(r, comp(s, ny - 2)) += 4.0 * coef / (dy * dy);
      K(r, comp(s, ny - 3)) += -1.0 * coef / (dy * dy);
    } else {  // upper interface node
      K(r, comp(s, 0)) += 2.0 * coef / (dy * dy);
      K(r, comp(s, 1)) += -5.0 * coef / (dy * dy);
      K(r, comp(s, 2)) += 4.0 * coef / (dy * dy);
      K(r, comp(s, 3)) += -1.0 * coef / (dy * dy);
    }
  };
  auto addD1 = [&](int r, int s, int j, auto comp, double coef) {
    if (j > 0 && j < ny) {
      K(r, comp(s, j + 1)) += coef / (2.0 * dy);
      K(r, comp(s, j - 1)) += -coef / (2.0 * dy);
    } else if (j == ny) {
      K(r, comp(s, ny)) += 3.0 * coef / (2.0 * dy);
      K(r, comp(s, ny - 1)) += -4.0 * coef / (2.0 * dy);
      K(r, comp(s, ny - 2)) += coef / (2.0 * dy);
    } else {
      K(r, comp(s, 0)) += -3.0 * coef / (2.0 * dy);
      K(r, comp(s, 1)) += 4.0 * coef / (2.0 * dy);
      K(r, comp(s, 2)) += -coef / (2.0 * dy);
    }
  };

  // momentum (v = i a): rho s a = mu (D2 - k^2) a - k p
  //                     rho s w = mu (D2 - k^2) w - D1 p
  for (int s = 0; s < 2; ++s) {
    int jF = (s == 0) ? 1 : 0, jL = (s == 0) ? ny : ny - 1;
    for (int j = jF; j <= jL; ++j) {
      M(row, ia(s, j)) = rho[s];
      addD2(row, s, j, ia, mu[s]);
      K(row, ia(s, j)) += -mu[s] * k * k;
      K(row, ip(s, j)) += -k;
      ++row;
      M(row, iw(s, j)) = rho[s];
      addD2(row, s, j, iw, mu[s]);
      K(row, iw(s, j)) += -mu[s] * k * k;
      addD1(row, s, j, ip, -1.0);
      ++row;
    }
  }

  // divergence: 0 = -k a + D1 w at interior nodes
  for (int s = 0; s < 2; ++s)
    for (int j = 1; j <= ny - 1; ++j) {
      K(row, ia(s, j)) = -k;
      addD1(row, s, j, iw, 1.0);
      ++row;
    }

  // interface conditions
  K(row, ia(1, 0)) = 1.0;
  K(row, ia(0, ny)) = -1.0;
  ++row;
  K(row, iw(1, 0)) = 1.0;
  K(row, iw(0, ny)) = -1.0;
  ++row;
  // 0 = -[mu d_y a] - k [mu w]
  addD1(row, 1, 0, ia, -mu[1]);
  addD1(row, 0, ny, ia, mu[0]);
  K(row, iw(1, 0)) += -k * mu[1];
  K(row, iw(0, ny)) += k * mu[0];
  ++row;
  // 0 = -2[mu d_y w] + [p] + sigma k^2 h
  addD1(row, 1, 0, iw, -2.0 * mu[1]);
  addD1(row, 0, ny, iw, 2.0 * mu[0]);
  K(row, ip(1, 0)) += 1.0;
  K(row, ip(0, ny)) += -1.0;
  K(row, ih) += p.sigma * k * k;
  ++row;
  // s h = w(0+)
  M(row, ih) = 1.0;
  K(row, iw(1, 0)) = 1.0;
  ++row;
  REQUIRE(row == nU);

  Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> ges;
  ges.compute(K, M, true);
  double best = -1e30;
  bool found = false;
  for (int i = 0; i < nU; ++i) {
    std::complex<double> beta = ges.betas()[i];
    if (std::abs(beta) < 1e-10) continue;
    std::complex<double> lam = ges.alphas()[i] / beta;
    if (lam.real() >= 0.0 || lam.real() < -1e4) continue;
    Eigen::VectorXcd vec = ges.eigenvectors().col(i);
    double hw = std::abs(vec[ih]) / vec.cwiseAbs().maxCoeff();
    if (hw < 1e-4) continue;
    if (lam.real() > best) {
      best = lam.real();
      found = true;
    }
  }
  REQUIRE(found);
  return best;
}

}  // namespace

TEST_CASE("zero data gives the zero trajectory") {
  Grid g = makeGrid(16, 16, 0.01, 0.05);
  StokesSolver solver(g, makeParams());
  FlatTrajectory out = solver.march(RhsTrajectory::zero(g), g.zero2D(),
                                    g.zero2D(), g.zero1D());
  CHECK(state_norm(g, out) < 1e-13);
  CHECK(solver.lastJumpResidual() < 1e-12);
}

TEST_CASE("heat_smooth: multiplier on modes, mean preserved") {
  Grid g = makeGrid(64, 8, 0.01, 0.03);
  Field1D c = Field1D::Constant(g.nx(), 1.7);
  CHECK(max_norm(Field1D(heat_smooth(g, c, 2.0) - c)) < 1e-13);

  Field1D f = g.zero1D();
  for (int i = 0; i < g.nx(); ++i) f[i] = std::cos(3.0 * g.x(i)) + 0.4;
  Field1D sm = heat_smooth(g, f, 0.2);
  for (int i = 0; i < g.nx(); ++i) {
    double want = std::exp(-9.0 * 0.2) * std::cos(3.0 * g.x(i)) + 0.4;
    CHECK(sm[i] == doctest::Approx(want).epsilon(1e-12));
  }
  CHECK_THROWS(heat_smooth(g, f, -1.0));
}

TEST_CASE("manufactured trajectory is recovered exactly") {
  Grid g = makeGrid(32, 24, 0.01, 0.05);
  StokesSolver solver(g, makeParams());
  FlatTrajectory z = manufactured(g);
  RhsTrajectory rhs = solver.apply_operator(z);
  FlatTrajectory out = solver.march(rhs, z[0].v, z[0].w, z[0].h);

  double num = 0.0, den = 0.0;
  for (int m = 1; m < z.size(); ++m) {
    num = std::max(num, max_norm(Field2D(out[m].v - z[m].v)));
    num = std::max(num, max_norm(Field2D(out[m].w - z[m].w)));
    num = std::max(num, max_norm(Field2D(out[m].pi - z[m].pi)));
    num = std::max(num, max_norm(Field1D(out[m].h - z[m].h)));
    den = std::max(den, max_norm(z[m].v));
    den = std::max(den, max_norm(z[m].pi));
  }
  CHECK(num / den < 1e-6);
  CHECK(solver.lastJumpResidual() < 1e-8);
}

TEST_CASE("x-shift equivariance") {
  Grid g = makeGrid(32, 16, 0.01, 0.03);
  StokesSolver solver(g, makeParams());
  FlatTrajectory z = manufactured(g);
  RhsTrajectory rhs = solver.apply_operator(z);
  FlatTrajectory out = solver.march(rhs, z[0].v, z[0].w, z[0].h);

  RhsTrajectory rs = rhs;
  for (int m = 0; m < rs.size(); ++m) {
    rs[m].fv = shiftX(rhs[m].fv);
    rs[m].fw = shiftX(rhs[m].fw);
    rs[m].fd = shiftX(rhs[m].fd);
    rs[m].gv = shiftX(rhs[m].gv);
    rs[m].gw = shiftX(rhs[m].gw);
    rs[m].gh = shiftX(rhs[m].gh);
  }
  FlatTrajectory outs = solver.march(rs, shiftX(z[0].v), shiftX(z[0].w),
                                     shiftX(z[0].h));
  double err = 0.0;
  for (int m = 1; m < z.size(); ++m) {
    err = std::max(err, max_norm(Field2D(outs[m].v - shiftX(out[m].v))));
    err = std::max(err, max_norm(Field2D(outs[m].pi - shiftX(out[m].pi))));
    err = std::max(err, max_norm(Field1D(outs[m].h - shiftX(out[m].h))));
  }
  CHECK(err < 1e-10);
}

TEST_CASE("capillary relaxation decays at the oracle rate") {
  GridSpec s;
  s.nx = 16;
  s.ny = 40;
  s.dt = 0.005;
  s.t0 = 1.0;
  Grid g(s);
  PhysicalParams p = makeParams();
  StokesSolver solver(g, p);

  Field1D h0 = g.zero1D();
  for (int i = 0; i < g.nx(); ++i) h0[i] = 0.01 * std::cos(g.x(i));
  FlatTrajectory out =
      solver.march(RhsTrajectory::zero(g), g.zero2D(), g.zero2D(), h0);

  const int M = g.steps();
  std::vector<double> amp(M + 1);
  for (int m = 0; m <= M; ++m) amp[m] = modeAmp(g, out[m].h, 1);

  for (int m = 1; m <= M; ++m) CHECK(amp[m] < amp[m - 1] * (1.0 + 1e-12));

  // least-squares rate over the second half (transients gone)
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int m = M / 2; m <= M; ++m) {
    double t = g.time(m), l = std::log(amp[m]);
    sx += t; sy += l; sxx += t * t; sxy += t * l;
    ++n;
  }
  double fitted = (n * sxy - sx * sy) / (n * sxx - sx * sx);

  double oracle = relaxationRateOracle(g, p, 1);
  CHECK(fitted < 0.0);
  CHECK(std::abs(fitted - oracle) / std::abs(oracle) < 0.05);
}

TEST_CASE("solution bound stable under time-step halving") {
  PhysicalParams p = makeParams();
  double prevC = 0.0;
  for (int lvl = 0; lvl < 2; ++lvl) {
    double dt = 0.02 / (1 << lvl);
    Grid g = makeGrid(16, 16, dt, 0.2);
    StokesSolver solver(g, p);
    RhsTrajectory rhs = RhsTrajectory::zero(g);
    for (int m = 0; m < rhs.size(); ++m)
      for (int r = 0; r < g.rows(); ++r)
        for (int i = 0; i < g.nx(); ++i)
          rhs[m].fw(r, i) = std::cos(g.x(i)) *
                            std::exp(-2.0 * g.y(r) * g.y(r)) *
                            (1.0 + 0.5 * g.time(m));
    FlatTrajectory out =
        solver.march(rhs, g.zero2D(), g.zero2D(), g.zero1D());
    double C = state_norm(g, out) / rhs_norm(g, rhs);
    if (lvl > 0) CHECK(C < 2.0 * prevC);
    prevC = C;
  }
}

TEST_CASE("reference solution z*: zero data and compatible data") {
  Grid g = makeGrid(32, 32, 0.01, 0.05);
  PhysicalParams p = makeParams();
  StokesSolver solver(g, p);

  ZStar triv = construct_zstar(solver, g.zero2D(), g.zero2D(), g.zero1D());
  CHECK(state_norm(g, triv.z) < 1e-13);
  CHECK(rhs_norm(g, triv.rhs) < 1e-13);

  // physical divergence-free initial velocity from a stream function
  // supported away from the interface and the walls, sampled in flat
  // coordinates; h0 a small cosine.
  Field1D h0 = g.zero1D();
  for (int i = 0; i < g.nx(); ++i) h0[i] = 0.05 * std::cos(g.x(i));
  Field2D v0 = g.zero2D(), w0 = g.zero2D();
  auto bump = [](double r) { return std::abs(r) < 1.0 ? std::pow(1.0 - r * r, 3) : 0.0; };
  auto dbump = [](double r) {
    return std::abs(r) < 1.0 ? -6.0 * r * std::pow(1.0 - r * r, 2) : 0.0;
  };
  const double yc = 1.5, wd = 0.7, A = 1e-2;
  for (int r = 0; r < g.rows(); ++r)
    for (int i = 0; i < g.nx(); ++i) {
      double x = g.x(i), yphys = h0[i] + g.y(r);
      double rr = (yphys - yc) / wd;
      v0(r, i) = A * std::sin(x) * dbump(rr) / wd;       // d_y psi
      w0(r, i) = -A * std::cos(x) * bump(rr);            // -d_x psi
    }
  CompatibilityReport rep = check_compatibility(g, p, v0, w0, h0, 1e-2);
  CHECK(rep.pass());

  ZStar zs = construct_zstar(solver, v0, w0, h0, 1e-2);

  // the initial trace is the given data
  CHECK(max_norm(Field2D(zs.z[0].v - v0)) == 0.0);
  CHECK(max_norm(Field1D(zs.z[0].h - h0)) == 0.0);

  // f_d*(0) equals the nonlinear divergence datum h0_x d_y v0
  FlatState z0 = FlatState::zero(g);
  z0.v = v0;
  z0.w = w0;
  z0.h = h0;
  z0.r = jump_pressure_r0(g, p, v0, w0, h0);
  RhsTuple n0 = assemble_N(g, p, z0, interface_dth(g, z0));
  CHECK(max_norm(Field2D(zs.rhs[0].fd - n0.fd)) < 1e-11);
  CHECK(max_norm(Field1D(zs.rhs[0].gv - n0.gv)) < 1e-11);
  CHECK(max_norm(Field1D(zs.rhs[0].gw - n0.gw)) < 1e-11);
  CHECK(max_norm(Field1D(zs.rhs[0].gh - n0.gh)) < 1e-11);

  // the marched z* stays finite and keeps its interface rows tight
  CHECK(std::isfinite(state_norm(g, zs.z)));
  CHECK(solver.lastJumpResidual() < 1e-8);

  // incompatible data is a hard error
  Field2D wbad = g.zero2D();
  for (int r = 0; r < g.rows(); ++r)
    wbad.row(r).setConstant(g.y(r) * std::exp(-4.0 * g.y(r) * g.y(r)));
  CHECK_THROWS(construct_zstar(solver, g.zero2D(), wbad, g.zero1D()));
}
