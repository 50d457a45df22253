#include "capflow/rhs.hpp"

#include "capflow/interface_geometry.hpp"

namespace capflow {

namespace {

// multiply every column i by a[i]
Field2D colMul(const Field2D& f, const Field1D& a) {
  Field2D out = f;
  for (int i = 0; i < f.cols(); ++i) out.col(i) *= a[i];
  return out;
}

struct JumpSet {
  Field1D mu_vx, mu_vy, mu_wx, mu_wy;  ///< jumps of mu * derivative
  Field1D gv, gw;                      ///< traces of v, w (upper side)
};

JumpSet interfaceJumps(const Grid& g, const PhysicalParams& p, const Field2D& v,
                       const Field2D& w) {
  Field2D vx = ddx(g, v), vy = ddy(g, v), wx = ddx(g, w), wy = ddy(g, w);
  const int lo = g.rowLo0(), up = g.rowUp0();
  JumpSet j;
  auto jump = [&](const Field2D& d) -> Field1D {
    return p.mu2 * d.row(up).transpose().array() - p.mu1 * d.row(lo).transpose().array();
  };
  j.mu_vx = jump(vx);
  j.mu_vy = jump(vy);
  j.mu_wx = jump(wx);
  j.mu_wy = jump(wy);
  j.gv = v.row(up).transpose();
  j.gw = w.row(up).transpose();
  return j;
}

}  // namespace

void axpy(double a, const FlatState& x, FlatState& y) {
  y.v += a * x.v; y.w += a * x.w; y.pi += a * x.pi;
  y.r += a * x.r; y.h += a * x.h;
}

void axpy(double a, const FlatTrajectory& x, FlatTrajectory& y) {
  for (int m = 0; m < y.size(); ++m) axpy(a, x[m], y[m]);
}

void scale(FlatState& x, double a) {
  x.v *= a; x.w *= a; x.pi *= a; x.r *= a; x.h *= a;
}

void scale(FlatTrajectory& x, double a) {
  for (auto& lvl : x.levels) scale(lvl, a);
}

FlatTrajectory lincomb(double a, const FlatTrajectory& x, double b,
                       const FlatTrajectory& y) {
  FlatTrajectory out = x;
  scale(out, a);
  axpy(b, y, out);
  return out;
}

double state_norm(const Grid& g, const FlatState& z) {
  auto sq = [](double v) { return v * v; };
  return std::sqrt(sq(l2_norm(g, z.v)) + sq(l2_norm(g, z.w)) +
                   sq(l2_norm(g, z.pi)) + sq(l2_norm(g, z.r)) +
                   sq(l2_norm(g, z.h)));
}

double state_norm(const Grid& g, const FlatTrajectory& z) {
  double acc = 0.0;
  const double dt = g.spec().dt;
  for (int m = 0; m < z.size(); ++m) {
    const double wt = (m == 0 || m == z.size() - 1) ? 0.5 : 1.0;
    const double nm = state_norm(g, z[m]);
    acc += wt * dt * nm * nm;
  }
  return std::sqrt(acc);
}

double rhs_norm(const Grid& g, const RhsTuple& r) {
  auto sq = [](double v) { return v * v; };
  return std::sqrt(sq(l2_norm(g, r.fv)) + sq(l2_norm(g, r.fw)) +
                   sq(l2_norm(g, r.fd)) + sq(l2_norm(g, r.gv)) +
                   sq(l2_norm(g, r.gw)) + sq(l2_norm(g, r.gh)));
}

double rhs_norm(const Grid& g, const RhsTrajectory& r) {
  double acc = 0.0;
  const double dt = g.spec().dt;
  for (int m = 0; m < r.size(); ++m) {
    const double wt = (m == 0 || m == r.size() - 1) ? 0.5 : 1.0;
    const double nm = rhs_norm(g, r[m]);
    acc += wt * dt * nm * nm;
  }
  return std::sqrt(acc);
}

double sup_lp_norm(const Grid& g, const std::vector<Field2D>& traj, double p) {
  double best = 0.0;
  for (const auto& f : traj) best = std::max(best, lp_norm(g, f, p));
  return best;
}

Field1D interface_dth(const Grid& g, const FlatState& z) {
  Field1D hx = ddx(g, z.h, 1);
  Field1D gv = z.v.row(g.rowUp0()).transpose();
  Field1D gw = z.w.row(g.rowUp0()).transpose();
  return gw - gv * hx;
}

RhsTuple assemble_N(const Grid& g, const PhysicalParams& p, const FlatState& z,
                    const Field1D& dth, const AssembleOpts& opts) {
  const double lam = opts.second_order_scale;
  Field2D mu = g.phaseConstant(p.mu1, p.mu2);
  Field2D rho = g.phaseConstant(p.rho1, p.rho2);

  Field1D hx = ddx(g, z.h, 1), hxx = ddx(g, z.h, 2);
  Field1D gk = g_kappa(g, z.h);

  Field2D vx = ddx(g, z.v), vy = ddy(g, z.v), vyy = ddy(g, z.v, 2);
  Field2D vxy = ddx(g, vy);
  Field2D wx = ddx(g, z.w), wy = ddy(g, z.w), wyy = ddy(g, z.w, 2);
  Field2D wxy = ddx(g, wy);
  Field2D piy = ddy(g, z.pi);

  JumpSet J = interfaceJumps(g, p, z.v, z.w);

  RhsTuple out = RhsTuple::zero(g);

  out.fv = mu * lam * (-2.0 * colMul(vxy, hx) + colMul(vyy, hx.square()) -
                       colMul(vy, hxx)) +
           colMul(piy, hx) +
           rho * (-z.v * vx + colMul(z.v * vy, hx) - z.w * vy) +
           rho * colMul(vy, dth);

  out.fw = mu * lam * (-2.0 * colMul(wxy, hx) + colMul(wyy, hx.square()) -
                       colMul(wy, hxx)) +
           rho * (-z.v * wx + colMul(z.v * wy, hx) - z.w * wy) +
           rho * colMul(wy, dth);

  out.fd = colMul(vy, hx);

  out.gv = -2.0 * J.mu_vx * hx + 2.0 * hx.square() * J.mu_vy - J.mu_wy * hx +
           (z.r - p.sigma * lam * (hxx - gk)) * hx;

  out.gw = -hx * J.mu_vy - hx * J.mu_wx + hx.square() * J.mu_wy -
           p.sigma * lam * gk;

  out.gh = -J.gv * hx;
  return out;
}

RhsTrajectory assemble_N(const Grid& g, const PhysicalParams& p,
                         const FlatTrajectory& z, const AssembleOpts& opts) {
  RhsTrajectory out;
  out.levels.reserve(z.size());
  const double dt = g.spec().dt;
  for (int m = 0; m < z.size(); ++m) {
    Field1D dth;
    if (opts.dth == DtHMode::InterfaceEquation) {
      dth = interface_dth(g, z[m]);
    } else {
      if (m == 0)
        dth = (z[1].h - z[0].h) / dt;
      else if (m == z.size() - 1)
        dth = (z[m].h - z[m - 1].h) / dt;
      else
        dth = (z[m + 1].h - z[m - 1].h) / (2.0 * dt);
    }
    out.levels.push_back(assemble_N(g, p, z[m], dth, opts));
  }
  return out;
}

RhsTuple linearize_N(const Grid& g, const PhysicalParams& p, const FlatState& z,
                     const FlatState& dz, const Field1D& dth, const Field1D& ddth,
                     const AssembleOpts& opts) {
  const double lam = opts.second_order_scale;
  Field2D mu = g.phaseConstant(p.mu1, p.mu2);
  Field2D rho = g.phaseConstant(p.rho1, p.rho2);

  Field1D hx = ddx(g, z.h, 1), hxx = ddx(g, z.h, 2);
  Field1D dhx = ddx(g, dz.h, 1), dhxx = ddx(g, dz.h, 2);
  Field1D gk = g_kappa(g, z.h);
  Field1D dgk = g_kappa_derivative(g, z.h, dz.h);

  Field2D vx = ddx(g, z.v), vy = ddy(g, z.v), vyy = ddy(g, z.v, 2);
  Field2D vxy = ddx(g, vy);
  Field2D wx = ddx(g, z.w), wy = ddy(g, z.w), wyy = ddy(g, z.w, 2);
  Field2D wxy = ddx(g, wy);
  Field2D piy = ddy(g, z.pi);

  Field2D dvx = ddx(g, dz.v), dvy = ddy(g, dz.v), dvyy = ddy(g, dz.v, 2);
  Field2D dvxy = ddx(g, dvy);
  Field2D dwx = ddx(g, dz.w), dwy = ddy(g, dz.w), dwyy = ddy(g, dz.w, 2);
  Field2D dwxy = ddx(g, dwy);
  Field2D dpiy = ddy(g, dz.pi);

  JumpSet J = interfaceJumps(g, p, z.v, z.w);
  JumpSet dJ = interfaceJumps(g, p, dz.v, dz.w);

  RhsTuple out = RhsTuple::zero(g);

  out.fv = mu * lam *
               (-2.0 * (colMul(vxy, dhx) + colMul(dvxy, hx)) +
                colMul(vyy, 2.0 * hx * dhx) + colMul(dvyy, hx.square()) -
                colMul(vy, dhxx) - colMul(dvy, hxx)) +
           colMul(piy, dhx) + colMul(dpiy, hx) +
           rho * (-(dz.v * vx + z.v * dvx) +
                  colMul(z.v * vy, dhx) + colMul(dz.v * vy + z.v * dvy, hx) -
                  (dz.w * vy + z.w * dvy)) +
           rho * (colMul(vy, ddth) + colMul(dvy, dth));

  out.fw = mu * lam *
               (-2.0 * (colMul(wxy, dhx) + colMul(dwxy, hx)) +
                colMul(wyy, 2.0 * hx * dhx) + colMul(dwyy, hx.square()) -
                colMul(wy, dhxx) - colMul(dwy, hxx)) +
           rho * (-(dz.v * wx + z.v * dwx) +
                  colMul(z.v * wy, dhx) + colMul(dz.v * wy + z.v * dwy, hx) -
                  (dz.w * wy + z.w * dwy)) +
           rho * (colMul(wy, ddth) + colMul(dwy, dth));

  out.fd = colMul(vy, dhx) + colMul(dvy, hx);

  out.gv = -2.0 * (dJ.mu_vx * hx + J.mu_vx * dhx) +
           2.0 * (2.0 * hx * dhx * J.mu_vy + hx.square() * dJ.mu_vy) -
           (dJ.mu_wy * hx + J.mu_wy * dhx) +
           (dz.r - p.sigma * lam * (dhxx - dgk)) * hx +
           (z.r - p.sigma * lam * (hxx - gk)) * dhx;

  out.gw = -(dhx * J.mu_vy + hx * dJ.mu_vy) - (dhx * J.mu_wx + hx * dJ.mu_wx) +
           (2.0 * hx * dhx * J.mu_wy + hx.square() * dJ.mu_wy) -
           p.sigma * lam * dgk;

  out.gh = -(dJ.gv * hx + J.gv * dhx);
  return out;
}

RhsTrajectory linearize_N(const Grid& g, const PhysicalParams& p,
                          const FlatTrajectory& z, const FlatTrajectory& dz,
                          const AssembleOpts& opts) {
  RhsTrajectory out;
  out.levels.reserve(z.size());
  const double dt = g.spec().dt;
  for (int m = 0; m < z.size(); ++m) {
    Field1D dth, ddth;
    if (opts.dth == DtHMode::InterfaceEquation) {
      dth = interface_dth(g, z[m]);
      // derivative of dth = gw - gv*hx in direction dz
      Field1D hx = ddx(g, z[m].h, 1);
      Field1D dhx = ddx(g, dz[m].h, 1);
      Field1D gv = z[m].v.row(g.rowUp0()).transpose();
      Field1D dgv = dz[m].v.row(g.rowUp0()).transpose();
      Field1D dgw = dz[m].w.row(g.rowUp0()).transpose();
      ddth = dgw - dgv * hx - gv * dhx;
    } else {
      auto diff = [&](const FlatTrajectory& t) -> Field1D {
        if (m == 0) return (t[1].h - t[0].h) / dt;
        if (m == t.size() - 1) return (t[m].h - t[m - 1].h) / dt;
        return (t[m + 1].h - t[m - 1].h) / (2.0 * dt);
      };
      dth = diff(z);
      ddth = diff(dz);
    }
    out.levels.push_back(linearize_N(g, p, z[m], dz[m], dth, ddth, opts));
  }
  return out;
}

InterfaceDeformation interface_deformation(const Grid& g, const Field2D& v,
                                           const Field2D& w, const Field1D& h) {
  Field2D vx = ddx(g, v), vy = ddy(g, v), wx = ddx(g, w), wy = ddy(g, w);
  Field1D hx = ddx(g, h, 1);
  const int lo = g.rowLo0(), up = g.rowUp0();
  auto rowv = [](const Field2D& f, int r) -> Field1D { return f.row(r).transpose(); };
  InterfaceDeformation d;
  d.dxx_lo = 2.0 * rowv(vx, lo) - 2.0 * hx * rowv(vy, lo);
  d.dxy_lo = rowv(vy, lo) + rowv(wx, lo) - hx * rowv(wy, lo);
  d.dyy_lo = 2.0 * rowv(wy, lo);
  d.dxx_up = 2.0 * rowv(vx, up) - 2.0 * hx * rowv(vy, up);
  d.dxy_up = rowv(vy, up) + rowv(wx, up) - hx * rowv(wy, up);
  d.dyy_up = 2.0 * rowv(wy, up);
  return d;
}

Field1D jump_pressure_r0(const Grid& g, const PhysicalParams& p,
                         const Field2D& v0, const Field2D& w0, const Field1D& h0) {
  InterfaceDeformation d = interface_deformation(g, v0, w0, h0);
  Field1D hx = ddx(g, h0, 1);
  Field1D s2 = 1.0 + hx.square();
  Field1D nDn_lo = (hx.square() * d.dxx_lo - 2.0 * hx * d.dxy_lo + d.dyy_lo) / s2;
  Field1D nDn_up = (hx.square() * d.dxx_up - 2.0 * hx * d.dxy_up + d.dyy_up) / s2;
  return p.mu2 * nDn_up - p.mu1 * nDn_lo + p.sigma * curvature(g, h0);
}

CompatibilityReport check_compatibility(const Grid& g, const PhysicalParams& p,
                                        const Field2D& v0, const Field2D& w0,
                                        const Field1D& h0, double tol) {
  CompatibilityReport rep;
  rep.tol = tol;

  InterfaceDeformation d = interface_deformation(g, v0, w0, h0);
  Field1D hx = ddx(g, h0, 1);
  Field1D s = (1.0 + hx.square()).sqrt();
  Field1D nx = -hx / s, ny = 1.0 / s;

  auto tangential = [&](const Field1D& dxx, const Field1D& dxy,
                        const Field1D& dyy, double mu, Field1D& tx, Field1D& ty) {
    Field1D Dn_x = dxx * nx + dxy * ny;
    Field1D Dn_y = dxy * nx + dyy * ny;
    Field1D nDn = nx * Dn_x + ny * Dn_y;
    tx = mu * (Dn_x - nDn * nx);
    ty = mu * (Dn_y - nDn * ny);
  };
  Field1D tx_lo, ty_lo, tx_up, ty_up;
  tangential(d.dxx_lo, d.dxy_lo, d.dyy_lo, p.mu1, tx_lo, ty_lo);
  tangential(d.dxx_up, d.dxy_up, d.dyy_up, p.mu2, tx_up, ty_up);
  rep.tangential_stress =
      std::max(max_norm(Field1D(tx_up - tx_lo)), max_norm(Field1D(ty_up - ty_lo)));

  Field2D divres = ddx(g, v0) + ddy(g, w0) - colMul(ddy(g, v0), hx);
  rep.divergence = max_norm(divres);

  TraceJump jv = trace_jump(g, v0), jw = trace_jump(g, w0);
  rep.velocity_jump = std::max(max_norm(jv.jump), max_norm(jw.jump));
  return rep;
}

}  // namespace capflow
