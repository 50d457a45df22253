#include <cmath>
#include <vector>

#include "capflow/picard.hpp"
#include "doctest.h"

using namespace capflow;

namespace {

Field1D shiftX(const Grid& g, const Field1D& f, int i0) {
  Field1D out = g.zero1D();
  for (int i = 0; i < g.nx(); ++i) out[(i + i0) % g.nx()] = f[i];
  return out;
}

Field2D shiftX(const Grid& g, const Field2D& f, int i0) {
  Field2D out = g.zero2D();
  for (int i = 0; i < g.nx(); ++i) out.col((i + i0) % g.nx()) = f.col(i);
  return out;
}

double fitSlope(const std::vector<double>& s, const std::vector<double>& e) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = static_cast<int>(s.size());
  for (int i = 0; i < n; ++i) {
    const double x = std::log(s[i]), y = std::log(e[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Grid smallGrid() {
  GridSpec spec;
  spec.nx = 16;
  spec.ny = 16;
  spec.ly = 3.0;
  spec.dt = 0.01;
  spec.t0 = 0.05;
  return Grid(spec);
}

PhysicalParams twoPhase() {
  PhysicalParams p;
  p.rho1 = 1.0;
  p.rho2 = 0.8;
  p.mu1 = 2.0;
  p.mu2 = 3.0;
  p.sigma = 1.0;
  return p;
}

// smooth in-strip profile vanishing at the walls
double bump(double y, double yc, double wd) {
  const double r = (y - yc) / wd;
  return std::exp(-r * r);
}

ControlTrajectory makeControl(const Grid& g, double amp, double phase,
                              double yc) {
  ControlTrajectory c = ControlTrajectory::zero(g);
  for (int m = 0; m < c.size(); ++m) {
    const double ta = 1.0 + 0.3 * g.time(m);
    for (int r = 0; r < g.rows(); ++r)
      for (int i = 0; i < g.nx(); ++i) {
        const double b = bump(g.y(r), yc, 0.8);
        c[m].v(r, i) = amp * ta * std::sin(g.x(i) + phase) * b;
        c[m].w(r, i) = 0.7 * amp * ta * std::cos(g.x(i) + phase) * b;
      }
  }
  return c;
}

double trajDiff(const Grid& g, const FlatTrajectory& a,
                const FlatTrajectory& b) {
  return state_norm(g, lincomb(1.0, a, -1.0, b));
}

}  // namespace

TEST_CASE("forward solve: zero data gives zero in one iteration") {
  Grid g = smallGrid();
  StokesSolver solver(g, twoPhase());
  auto sol = solve_forward(solver, g.zero2D(), g.zero2D(), g.zero1D(),
                           ControlTrajectory::zero(g));
  CHECK(sol.report.converged);
  CHECK(sol.report.iterations == 1);
  CHECK(state_norm(g, sol.z) == 0.0);
  CHECK(sol.report.final_residual < 1e-14);
}

TEST_CASE("forward solve: small data contracts with decreasing ratios") {
  Grid g = smallGrid();
  StokesSolver solver(g, twoPhase());
  Field1D h0 = g.zero1D();
  for (int i = 0; i < g.nx(); ++i) h0[i] = 1e-2 * std::cos(g.x(i));

  auto sol = solve_forward(solver, g.zero2D(), g.zero2D(), h0,
                           ControlTrajectory::zero(g));
  CHECK(sol.report.converged);
  CHECK(sol.report.final_residual <
        10.0 * SolverOpts{}.tol_fp * (1.0 + state_norm(g, sol.z)));

  // updates strictly decreasing, all contraction ratios well below one
  const auto& upd = sol.report.update_norms;
  REQUIRE(upd.size() >= 2);
  for (size_t i = 1; i < upd.size(); ++i) CHECK(upd[i] < upd[i - 1]);
  for (double r : sol.report.ratios) CHECK(r < 0.5);
}

TEST_CASE("forward solve: x-shift equivariance") {
  Grid g = smallGrid();
  StokesSolver solver(g, twoPhase());
  Field1D h0 = g.zero1D();
  for (int i = 0; i < g.nx(); ++i)
    h0[i] = 1e-2 * std::cos(g.x(i)) + 4e-3 * std::sin(2.0 * g.x(i));
  ControlTrajectory c = makeControl(g, 5e-2, 0.4, -1.2);

  auto base = solve_forward(solver, g.zero2D(), g.zero2D(), h0, c);

  const int i0 = 5;
  const double xs = i0 * g.dx();
  ControlTrajectory cs = makeControl(g, 5e-2, 0.4 - xs, -1.2);
  // phase-shifted control equals index-shifted control on the grid
  for (int m = 0; m < c.size(); ++m) {
    CHECK(max_norm(Field2D(cs[m].v - shiftX(g, c[m].v, i0))) < 1e-13);
  }
  auto shifted = solve_forward(solver, g.zero2D(), g.zero2D(), shiftX(g, h0, i0),
                               cs);

  FlatTrajectory expect = base.z;
  for (int m = 0; m < expect.size(); ++m) {
    expect[m].v = shiftX(g, base.z[m].v, i0);
    expect[m].w = shiftX(g, base.z[m].w, i0);
    expect[m].pi = shiftX(g, base.z[m].pi, i0);
    expect[m].r = shiftX(g, base.z[m].r, i0);
    expect[m].h = shiftX(g, base.z[m].h, i0);
  }
  CHECK(trajDiff(g, shifted.z, expect) / (1.0 + state_norm(g, base.z)) <
        1e-9);
}

TEST_CASE("sensitivity: trivial, linear, guess-independent, dh0 rejected") {
  Grid g = smallGrid();
  StokesSolver solver(g, twoPhase());
  Field1D h0 = g.zero1D();
  for (int i = 0; i < g.nx(); ++i) h0[i] = 1e-2 * std::cos(g.x(i));
  ControlTrajectory c = makeControl(g, 4e-2, 0.0, 1.0);
  auto base = solve_forward(solver, g.zero2D(), g.zero2D(), h0, c);

  const ControlTrajectory zc = ControlTrajectory::zero(g);

  SUBCASE("zero direction gives zero") {
    auto ds = solve_sensitivity(solver, base.z, g.zero2D(), g.zero2D(),
                                g.zero1D(), c, zc);
    CHECK(state_norm(g, ds.dz) == 0.0);
  }

  SUBCASE("linearity and initial-guess independence") {
    ControlTrajectory d1 = makeControl(g, 3e-2, 1.1, 0.7);
    ControlTrajectory d2 = makeControl(g, 2e-2, -0.6, -0.9);
    auto s1 = solve_sensitivity(solver, base.z, g.zero2D(), g.zero2D(),
                                g.zero1D(), c, d1);
    auto s2 = solve_sensitivity(solver, base.z, g.zero2D(), g.zero2D(),
                                g.zero1D(), c, d2);

    const double a = 1.7, b = -0.4;
    ControlTrajectory dc = ControlTrajectory::zero(g);
    for (int m = 0; m < dc.size(); ++m) {
      dc[m].v = a * d1[m].v + b * d2[m].v;
      dc[m].w = a * d1[m].w + b * d2[m].w;
    }
    auto sc = solve_sensitivity(solver, base.z, g.zero2D(), g.zero2D(),
                                g.zero1D(), c, dc);
    FlatTrajectory expect = lincomb(a, s1.dz, b, s2.dz);
    CHECK(trajDiff(g, sc.dz, expect) / (1.0 + state_norm(g, expect)) < 1e-8);

    // restart from a perturbed guess; the limit must not move
    FlatTrajectory guess = s2.dz;
    scale(guess, 3.0);
    auto s1b = solve_sensitivity(solver, base.z, g.zero2D(), g.zero2D(),
                                 g.zero1D(), c, d1, SolverOpts{}, &guess);
    CHECK(trajDiff(g, s1.dz, s1b.dz) / (1.0 + state_norm(g, s1.dz)) < 1e-8);
  }

  SUBCASE("nonzero dh0 direction is rejected") {
    Field1D dh0 = g.zero1D();
    dh0[0] = 1e-3;
    CHECK_THROWS_AS(solve_sensitivity(solver, base.z, g.zero2D(), g.zero2D(),
                                      dh0, c, zc),
                    std::invalid_argument);
  }
}

TEST_CASE("sensitivity Taylor test: flat-frame control direction") {
  Grid g = smallGrid();
  StokesSolver solver(g, twoPhase());
  Field1D h0 = g.zero1D();
  for (int i = 0; i < g.nx(); ++i) h0[i] = 1.5e-2 * std::cos(g.x(i));
  ControlTrajectory c = makeControl(g, 6e-2, 0.3, 0.8);
  ControlTrajectory d = makeControl(g, 8e-2, -0.9, -0.6);

  auto base = solve_forward(solver, g.zero2D(), g.zero2D(), h0, c);
  auto sens = solve_sensitivity(solver, base.z, g.zero2D(), g.zero2D(),
                                g.zero1D(), c, d);

  std::vector<double> ss = {0.2, 0.1, 0.05, 0.025};
  std::vector<double> err;
  for (double s : ss) {
    ControlTrajectory cp = ControlTrajectory::zero(g);
    for (int m = 0; m < cp.size(); ++m) {
      cp[m].v = c[m].v + s * d[m].v;
      cp[m].w = c[m].w + s * d[m].w;
    }
    auto pert = solve_forward(solver, g.zero2D(), g.zero2D(), h0, cp);
    FlatTrajectory lin = lincomb(1.0, base.z, s, sens.dz);
    err.push_back(trajDiff(g, pert.z, lin));
  }
  const double slope = fitSlope(ss, err);
  CHECK(slope == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("physical-frame control: y-independent control matches flat frame") {
  Grid g = smallGrid();
  StokesSolver solver(g, twoPhase());
  Field1D h0 = g.zero1D();
  for (int i = 0; i < g.nx(); ++i) h0[i] = 1e-2 * std::cos(g.x(i));

  ControlTrajectory c = ControlTrajectory::zero(g);
  for (int m = 0; m < c.size(); ++m)
    for (int r = 0; r < g.rows(); ++r)
      for (int i = 0; i < g.nx(); ++i) {
        c[m].v(r, i) = 4e-2 * std::sin(g.x(i)) * (1.0 + 0.2 * g.time(m));
        c[m].w(r, i) = 3e-2 * std::cos(2.0 * g.x(i));
      }

  SolverOpts flatOpts;
  auto zf = solve_forward(solver, g.zero2D(), g.zero2D(), h0, c, flatOpts);
  SolverOpts physOpts;
  physOpts.frame = ControlFrame::Physical;
  auto zp = solve_forward(solver, g.zero2D(), g.zero2D(), h0, c, physOpts);
  CHECK(trajDiff(g, zf.z, zp.z) / (1.0 + state_norm(g, zf.z)) < 1e-9);
}

TEST_CASE("sensitivity Taylor test: physical-frame control direction") {
  Grid g = smallGrid();
  StokesSolver solver(g, twoPhase());
  Field1D h0 = g.zero1D();
  for (int i = 0; i < g.nx(); ++i) h0[i] = 1.5e-2 * std::cos(g.x(i));
  ControlTrajectory c = makeControl(g, 6e-2, 0.3, 0.8);
  ControlTrajectory d = makeControl(g, 8e-2, -0.9, -0.6);

  SolverOpts opts;
  opts.frame = ControlFrame::Physical;
  auto base = solve_forward(solver, g.zero2D(), g.zero2D(), h0, c, opts);
  auto sens = solve_sensitivity(solver, base.z, g.zero2D(), g.zero2D(),
                                g.zero1D(), c, d, opts);

  std::vector<double> ss = {0.2, 0.1, 0.05, 0.025};
  std::vector<double> err;
  for (double s : ss) {
    ControlTrajectory cp = ControlTrajectory::zero(g);
    for (int m = 0; m < cp.size(); ++m) {
      cp[m].v = c[m].v + s * d[m].v;
      cp[m].w = c[m].w + s * d[m].w;
    }
    auto pert = solve_forward(solver, g.zero2D(), g.zero2D(), h0, cp, opts);
    FlatTrajectory lin = lincomb(1.0, base.z, s, sens.dz);
    err.push_back(trajDiff(g, pert.z, lin));
  }
  const double slope = fitSlope(ss, err);
  CHECK(slope == doctest::Approx(2.0).epsilon(0.05));
}
