#include "capflow/transform.hpp"

#include <algorithm>

namespace capflow {

double cubic_interp(const double* ys, const double* vals, int n, double ye) {
  int m = std::min(n, 4);
  int start = 0;
  if (n > 4) {
    int j = static_cast<int>(std::lower_bound(ys, ys + n, ye) - ys);
    start = std::clamp(j - 2, 0, n - 4);
  }
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    double li = 1.0;
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      li *= (ye - ys[start + j]) / (ys[start + i] - ys[start + j]);
    }
    acc += li * vals[start + i];
  }
  return acc;
}

double cubic_interp_deriv(const double* ys, const double* vals, int n,
                          double ye) {
  int m = std::min(n, 4);
  int start = 0;
  if (n > 4) {
    int j = static_cast<int>(std::lower_bound(ys, ys + n, ye) - ys);
    start = std::clamp(j - 2, 0, n - 4);
  }
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    double denom = 1.0, dnum = 0.0;
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      denom *= ys[start + i] - ys[start + j];
    }
    for (int k = 0; k < m; ++k) {
      if (k == i) continue;
      double prod = 1.0;
      for (int j = 0; j < m; ++j) {
        if (j == i || j == k) continue;
        prod *= ye - ys[start + j];
      }
      dnum += prod;
    }
    acc += vals[start + i] * dnum / denom;
  }
  return acc;
}

namespace {

// Column of nodes on one side of a dividing height hdiv, built from a
// physical field stored on the strip grid. The duplicated y=0 rows count
// once; nodes exactly at hdiv are assigned to the lower side.
struct SideColumn {
  std::vector<double> ys;
  std::vector<double> vals;
};

void gatherSide(const Grid& g, const Field2D& f, int col, double hdiv,
                bool above, SideColumn& out) {
  out.ys.clear();
  out.vals.clear();
  for (int r = 0; r < g.rows(); ++r) {
    const double yr = g.y(r);
    if (yr == 0.0 && hdiv != 0.0) {
      // duplicated rows hold the same value away from the interface
      if (r == g.rowUp0()) continue;
    }
    const bool isAbove = (hdiv == 0.0) ? g.upper(r) : (yr > hdiv);
    if (isAbove == above) {
      out.ys.push_back(yr);
      out.vals.push_back(f(r, col));
    }
  }
}

// Evaluation points just beyond the strip (by at most max|h|, well under a
// cell) are handled by extrapolating the edge cubic rather than clamping, so
// the map stays differentiable in h. *clip_count still reports how many
// points fell outside.
double clampEval(const std::vector<double>& ys, const std::vector<double>& vals,
                 double ye, double lo, double hi, int* clip_count) {
  if ((ye < lo || ye > hi) && clip_count) ++*clip_count;
  return cubic_interp(ys.data(), vals.data(), static_cast<int>(ys.size()), ye);
}

// derivative of clampEval in the evaluation point
double clampEvalDeriv(const std::vector<double>& ys,
                      const std::vector<double>& vals, double ye, double lo,
                      double hi) {
  (void)lo;
  (void)hi;
  return cubic_interp_deriv(ys.data(), vals.data(),
                            static_cast<int>(ys.size()), ye);
}

}  // namespace

Field2D to_flat(const Grid& g, const Field2D& u, const Field1D& h,
                int* clip_count) {
  Field2D out(g.rows(), g.nx());
  SideColumn below, above;
  for (int i = 0; i < g.nx(); ++i) {
    const double hi = h[i];
    gatherSide(g, u, i, hi, false, below);
    gatherSide(g, u, i, hi, true, above);
    for (int r = 0; r < g.rows(); ++r) {
      const double yp = hi + g.y(r);
      const SideColumn& side = g.upper(r) ? above : below;
      out(r, i) = clampEval(side.ys, side.vals, yp, -g.ly(), g.ly(), clip_count);
    }
  }
  return out;
}

Field2D to_physical(const Grid& g, const Field2D& u_flat, const Field1D& h,
                    int* clip_count) {
  const int ny = g.nyHalf();
  Field2D out(g.rows(), g.nx());
  std::vector<double> ylo(ny + 1), yup(ny + 1);
  for (int j = 0; j <= ny; ++j) { ylo[j] = g.y(j); yup[j] = g.y(ny + 1 + j); }
  std::vector<double> vlo(ny + 1), vup(ny + 1);
  for (int i = 0; i < g.nx(); ++i) {
    for (int j = 0; j <= ny; ++j) {
      vlo[j] = u_flat(j, i);
      vup[j] = u_flat(ny + 1 + j, i);
    }
    for (int r = 0; r < g.rows(); ++r) {
      const double yh = g.y(r) - h[i];
      bool up = yh > 0.0 || (yh == 0.0 && g.upper(r));
      double v;
      if (up) {
        if (yh > g.ly() && clip_count) ++*clip_count;
        v = cubic_interp(yup.data(), vup.data(), ny + 1, yh);
      } else {
        if (yh < -g.ly() && clip_count) ++*clip_count;
        v = cubic_interp(ylo.data(), vlo.data(), ny + 1, yh);
      }
      out(r, i) = v;
    }
  }
  return out;
}

HalfExtensions extend_half_fields(const Grid& g, const Field2D& u_flat) {
  // f_ext(y) = sum_i c_i f(-b_i y); coefficients match value and first two
  // y-derivatives at 0, and all reflection arguments stay inside the strip.
  static constexpr double kB[3] = {1.0 / 3.0, 2.0 / 3.0, 1.0};
  static constexpr double kC[3] = {15.0, -24.0, 10.0};
  const int ny = g.nyHalf();
  HalfExtensions ext{u_flat, u_flat};
  std::vector<double> ylo(ny + 1), yup(ny + 1), vlo(ny + 1), vup(ny + 1);
  for (int j = 0; j <= ny; ++j) { ylo[j] = g.y(j); yup[j] = g.y(ny + 1 + j); }
  for (int i = 0; i < g.nx(); ++i) {
    for (int j = 0; j <= ny; ++j) {
      vlo[j] = u_flat(j, i);
      vup[j] = u_flat(ny + 1 + j, i);
    }
    for (int j = 0; j <= ny; ++j) {
      // lower extension fills the upper rows and vice versa
      double accLo = 0.0, accUp = 0.0;
      const double yU = yup[j], yL = ylo[j];
      for (int t = 0; t < 3; ++t) {
        accLo += kC[t] * cubic_interp(ylo.data(), vlo.data(), ny + 1, -kB[t] * yU);
        accUp += kC[t] * cubic_interp(yup.data(), vup.data(), ny + 1, -kB[t] * yL);
      }
      ext.lower(ny + 1 + j, i) = accLo;
      ext.upper(j, i) = accUp;
    }
  }
  return ext;
}

Field2D physical_sensitivity(const Grid& g, const Field2D& u_flat,
                             const Field2D& du_flat, const Field1D& h,
                             const Field1D& dh) {
  // exact derivative of the discrete flat-to-physical map: the transport
  // term differentiates the same cubic interpolant that to_physical
  // evaluates, so difference quotients of to_physical converge to this
  const int ny = g.nyHalf();
  Field2D out(g.rows(), g.nx());
  std::vector<double> ylo(ny + 1), yup(ny + 1);
  for (int j = 0; j <= ny; ++j) {
    ylo[j] = g.y(j);
    yup[j] = g.y(ny + 1 + j);
  }
  std::vector<double> vlo(ny + 1), vup(ny + 1), dlo(ny + 1), dup(ny + 1);
  for (int i = 0; i < g.nx(); ++i) {
    for (int j = 0; j <= ny; ++j) {
      vlo[j] = u_flat(j, i);
      vup[j] = u_flat(ny + 1 + j, i);
      dlo[j] = du_flat(j, i);
      dup[j] = du_flat(ny + 1 + j, i);
    }
    for (int r = 0; r < g.rows(); ++r) {
      const double yh = g.y(r) - h[i];
      const bool up = yh > 0.0 || (yh == 0.0 && g.upper(r));
      const auto& yy = up ? yup : ylo;
      const auto& vv = up ? vup : vlo;
      const auto& dd = up ? dup : dlo;
      out(r, i) = clampEval(yy, dd, yh, -g.ly(), g.ly(), nullptr) -
                  clampEvalDeriv(yy, vv, yh, -g.ly(), g.ly()) * dh[i];
    }
  }
  return out;
}

Field2D pullback_control(const Grid& g, const Field2D& c, const Field1D& h,
                         int* clip_count) {
  return to_flat(g, c, h, clip_count);
}

Field2D pullback_control_derivative(const Grid& g, const Field2D& c,
                                    const Field1D& h, const Field2D& dc,
                                    const Field1D& dh) {
  // exact derivative of the discrete pullback: evaluation points move with
  // h, so differentiate the interpolant rather than interpolating a
  // stencil derivative
  Field2D out(g.rows(), g.nx());
  SideColumn below, above, dbelow, dabove;
  for (int i = 0; i < g.nx(); ++i) {
    const double hi = h[i];
    gatherSide(g, c, i, hi, false, below);
    gatherSide(g, c, i, hi, true, above);
    gatherSide(g, dc, i, hi, false, dbelow);
    gatherSide(g, dc, i, hi, true, dabove);
    for (int r = 0; r < g.rows(); ++r) {
      const double yp = hi + g.y(r);
      const SideColumn& side = g.upper(r) ? above : below;
      const SideColumn& dside = g.upper(r) ? dabove : dbelow;
      out(r, i) =
          clampEval(dside.ys, dside.vals, yp, -g.ly(), g.ly(), nullptr) +
          clampEvalDeriv(side.ys, side.vals, yp, -g.ly(), g.ly()) * dh[i];
    }
  }
  return out;
}

}  // namespace capflow
