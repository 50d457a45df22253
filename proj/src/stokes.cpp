#include "capflow/stokes.hpp"

#include <Eigen/Sparse>

#include "capflow/interface_geometry.hpp"
#include "capflow/transform.hpp"

namespace capflow {

namespace {

using SpMat = Eigen::SparseMatrix<Complex>;
using Triplet = Eigen::Triplet<Complex>;

/// Fornberg finite-difference weights for derivative `m` at `x0` on the
/// given nodes; returns one weight per node.
Eigen::VectorXd fdWeights(const std::vector<double>& xs, double x0, int m) {
  const int n = static_cast<int>(xs.size());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, m + 1);
  double c1 = 1.0, c4 = xs[0] - x0;
  c(0, 0) = 1.0;
  for (int i = 1; i < n; ++i) {
    int mn = std::min(i, m);
    double c2 = 1.0, c5 = c4;
    c4 = xs[i] - x0;
    for (int j = 0; j < i; ++j) {
      double c3 = xs[i] - xs[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int s = mn; s >= 1; --s)
          c(i, s) = c1 * (s * c(i - 1, s - 1) - c5 * c(i - 1, s)) / c2;
        c(i, 0) = -c1 * c5 * c(i - 1, 0) / c2;
      }
      for (int s = mn; s >= 1; --s)
        c(j, s) = (c4 * c(j, s) - s * c(j, s - 1)) / c3;
      c(j, 0) = c4 * c(j, 0) / c3;
    }
    c1 = c2;
  }
  return c.col(m);
}

struct StencilRow {
  std::vector<int> nodes;    ///< local node indices within one side
  Eigen::VectorXd weights;
};

/// Sparse row kept around for after-the-fact residual evaluation.
struct SavedRow {
  std::vector<std::pair<int, Complex>> entries;
};

}  // namespace

struct StokesSolver::Impl {
  int ny, nU, nModes;
  double dt, sigma;
  double rho[2], mu[2];
  std::vector<double> ylo, yup;  ///< local y nodes per side, ascending

  // y-derivative stencils per local node (shared by both sides up to the
  // node coordinates; sides can differ under stretching, so keep both)
  std::vector<StencilRow> d1lo, d2lo, d1up, d2up;
  StencilRow traceD1lo, traceD1up;  ///< one-sided d_y at y=0

  std::vector<SpMat> mats;  ///< per-mode matrices (k=1..)
  std::vector<std::unique_ptr<Eigen::SparseLU<SpMat>>> lus;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod0;  ///< k=0
  std::vector<std::array<SavedRow, 4>> jumpRows;  ///< [v],[w],g_v,g_w rows
  std::vector<std::array<int, 4>> jumpRowIdx;

  /// rows weighted up in the k=0 least-squares solve, so that data
  /// inconsistent at k=0 (possible on the truncated strip) degrades the
  /// bulk divergence rather than the imposed wall/interface rows
  std::vector<int> k0Priority;
  static constexpr double kK0RowWeight = 1e6;

  mutable double lastResidual = 0.0;

  int idx(int side, int j, int comp) const {
    return side * 3 * (ny + 1) + j * 3 + comp;
  }
  int idxH() const { return 6 * (ny + 1); }
};

namespace {

StencilRow makeStencil(const std::vector<double>& ys, int j, int lo, int hi,
                       int order) {
  StencilRow row;
  std::vector<double> xs;
  for (int n = lo; n <= hi; ++n) {
    row.nodes.push_back(n);
    xs.push_back(ys[n]);
  }
  row.weights = fdWeights(xs, ys[j], order);
  return row;
}

/// d1/d2 stencils for momentum and divergence rows on one side.
/// interface==true means the high end (local j=ny) is the interface for
/// the lower side; for the upper side the low end (j=0) is.
void buildStencils(const std::vector<double>& ys, bool upperSide,
                   std::vector<StencilRow>& d1, std::vector<StencilRow>& d2) {
  const int n = static_cast<int>(ys.size()) - 1;
  d1.resize(n + 1);
  d2.resize(n + 1);
  for (int j = 0; j <= n; ++j) {
    int lo = std::max(0, j - 1), hi = std::min(n, j + 1);
    d1[j] = makeStencil(ys, j, lo, hi, 1);
    // second derivative: widen one-sided stencils to 4 points for
    // second-order accuracy at the interface/wall rows
    int lo2 = lo, hi2 = hi;
    if (j == 0) hi2 = std::min(n, 3);
    if (j == n) lo2 = std::max(0, n - 3);
    d2[j] = makeStencil(ys, j, lo2, hi2, 2);
  }
  (void)upperSide;
}

}  // namespace

StokesSolver::StokesSolver(const Grid& grid, const PhysicalParams& params)
    : grid_(grid), params_(params), impl_(std::make_unique<Impl>()) {
  params_.validate();
  Impl& im = *impl_;
  const int ny = grid.nyHalf();
  im.ny = ny;
  im.nU = 6 * (ny + 1) + 1;
  im.nModes = grid.nx() / 2 + 1;
  im.dt = grid.spec().dt;
  im.sigma = params.sigma;
  im.rho[0] = params.rho1;
  im.rho[1] = params.rho2;
  im.mu[0] = params.mu1;
  im.mu[1] = params.mu2;

  for (int j = 0; j <= ny; ++j) im.ylo.push_back(grid.y(j));
  for (int j = 0; j <= ny; ++j) im.yup.push_back(grid.y(ny + 1 + j));

  buildStencils(im.ylo, false, im.d1lo, im.d2lo);
  buildStencils(im.yup, true, im.d1up, im.d2up);
  im.traceD1lo = makeStencil(im.ylo, ny, std::max(0, ny - 3), ny, 1);
  im.traceD1up = makeStencil(im.yup, 0, 0, std::min(ny, 3), 1);

  im.mats.resize(im.nModes);
  im.lus.resize(im.nModes);
  im.jumpRows.resize(im.nModes);
  im.jumpRowIdx.resize(im.nModes);

  const Complex I(0.0, 1.0);
  for (int k = 0; k < im.nModes; ++k) {
    const double kap = wavenumber(k, grid.lx());
    std::vector<Triplet> trips;
    int row = 0;
    auto add = [&](int r, int c, Complex val) { trips.emplace_back(r, c, val); };

    auto wMomentum = [&](int s, int j) {
      const auto& d1 = (s == 0) ? im.d1lo : im.d1up;
      const auto& d2 = (s == 0) ? im.d2lo : im.d2up;
      add(row, im.idx(s, j, 1), im.rho[s] / im.dt + im.mu[s] * kap * kap);
      for (size_t q = 0; q < d2[j].nodes.size(); ++q)
        add(row, im.idx(s, d2[j].nodes[q], 1), -im.mu[s] * d2[j].weights[q]);
      for (size_t q = 0; q < d1[j].nodes.size(); ++q)
        add(row, im.idx(s, d1[j].nodes[q], 2), d1[j].weights[q]);
      ++row;
    };

    // walls: v = w = 0 at y = -Ly (lower j=0) and y = +Ly (upper j=ny),
    // plus the one-sided normal momentum equation, which acts as the
    // pressure boundary condition (without it a discrete pressure mode
    // decaying from the wall like exp(-k y) goes unpinned and the system
    // conditioning blows up exponentially in k)
    add(row++, im.idx(0, 0, 0), 1.0);
    add(row++, im.idx(0, 0, 1), 1.0);
    add(row++, im.idx(1, ny, 0), 1.0);
    add(row++, im.idx(1, ny, 1), 1.0);
    wMomentum(0, 0);
    wMomentum(1, ny);

    // interior nodes: both momentum components
    for (int s = 0; s < 2; ++s) {
      const auto& d2 = (s == 0) ? im.d2lo : im.d2up;
      for (int j = 1; j <= ny - 1; ++j) {
        // v-momentum (at the interface nodes v is pinned by the jump rows)
        add(row, im.idx(s, j, 0), im.rho[s] / im.dt + im.mu[s] * kap * kap);
        for (size_t q = 0; q < d2[j].nodes.size(); ++q)
          add(row, im.idx(s, d2[j].nodes[q], 0), -im.mu[s] * d2[j].weights[q]);
        add(row, im.idx(s, j, 2), I * kap);
        ++row;
        wMomentum(s, j);
      }
    }

    // interface nodes: one-sided normal momentum (pins the pressure trace)
    wMomentum(0, ny);
    wMomentum(1, 0);

    // divergence at interior nodes of each side
    for (int s = 0; s < 2; ++s) {
      const auto& d1 = (s == 0) ? im.d1lo : im.d1up;
      for (int j = 1; j <= ny - 1; ++j) {
        add(row, im.idx(s, j, 0), I * kap);
        for (size_t q = 0; q < d1[j].nodes.size(); ++q)
          add(row, im.idx(s, d1[j].nodes[q], 1), d1[j].weights[q]);
        ++row;
      }
    }

    // interface rows
    const int rVjump = row, rWjump = row + 1, rGv = row + 2, rGw = row + 3;
    add(rVjump, im.idx(1, 0, 0), 1.0);
    add(rVjump, im.idx(0, ny, 0), -1.0);
    add(rWjump, im.idx(1, 0, 1), 1.0);
    add(rWjump, im.idx(0, ny, 1), -1.0);

    // -[mu d_y v] - ik [mu w] = g_v
    for (size_t q = 0; q < im.traceD1up.nodes.size(); ++q)
      add(rGv, im.idx(1, im.traceD1up.nodes[q], 0),
          -im.mu[1] * im.traceD1up.weights[q]);
    for (size_t q = 0; q < im.traceD1lo.nodes.size(); ++q)
      add(rGv, im.idx(0, im.traceD1lo.nodes[q], 0),
          im.mu[0] * im.traceD1lo.weights[q]);
    add(rGv, im.idx(1, 0, 1), -I * kap * im.mu[1]);
    add(rGv, im.idx(0, ny, 1), I * kap * im.mu[0]);

    // -2[mu d_y w] + [pi] + sigma k^2 h = g_w
    for (size_t q = 0; q < im.traceD1up.nodes.size(); ++q)
      add(rGw, im.idx(1, im.traceD1up.nodes[q], 1),
          -2.0 * im.mu[1] * im.traceD1up.weights[q]);
    for (size_t q = 0; q < im.traceD1lo.nodes.size(); ++q)
      add(rGw, im.idx(0, im.traceD1lo.nodes[q], 1),
          2.0 * im.mu[0] * im.traceD1lo.weights[q]);
    add(rGw, im.idx(1, 0, 2), 1.0);
    add(rGw, im.idx(0, ny, 2), -1.0);
    add(rGw, im.idxH(), im.sigma * kap * kap);
    row += 4;

    // interface motion: h/dt - w(0+) = h^m/dt + g_h^m
    add(row, im.idxH(), 1.0 / im.dt);
    add(row, im.idx(1, 0, 1), -1.0);
    ++row;

    if (row != im.nU) throw std::logic_error("per-mode system is not square");

    SpMat A(im.nU, im.nU);
    A.setFromTriplets(trips.begin(), trips.end());
    im.mats[k] = A;
    im.jumpRowIdx[k] = {rVjump, rWjump, rGv, rGw};
    for (int s4 = 0; s4 < 4; ++s4) {
      SavedRow& saved = im.jumpRows[k][s4];
      for (const auto& t : trips)
        if (t.row() == im.jumpRowIdx[k][s4])
          saved.entries.emplace_back(t.col(), t.value());
    }

    if (k == 0) {
      // the k=0 system carries the constant-pressure nullvector: solve it
      // in the least-squares (minimum-norm) sense and gauge afterwards.
      // Data whose mean divergence violates the global mass balance of the
      // truncated strip makes the system inconsistent; weight the imposed
      // rows (wall values, interface conditions, interface update) so the
      // defect lands on the bulk divergence instead.
      im.k0Priority = {0, 1, 2, 3, rVjump, rWjump, rGv, rGw, im.nU - 1};
      Eigen::MatrixXcd A0(A);
      for (int r : im.k0Priority) A0.row(r) *= Impl::kK0RowWeight;
      im.cod0.compute(A0);
    } else {
      im.lus[k] = std::make_unique<Eigen::SparseLU<SpMat>>();
      im.lus[k]->compute(A);
      if (im.lus[k]->info() != Eigen::Success)
        throw std::runtime_error("singular per-mode system at k=" +
                                 std::to_string(k));
    }
  }
}

StokesSolver::~StokesSolver() = default;

double StokesSolver::lastJumpResidual() const { return impl_->lastResidual; }

namespace {

/// Row-wise forward transform of a nodal field: rows x (nx/2+1) spectrum.
Eigen::MatrixXcd rowSpectra(const Grid& g, const Field2D& f) {
  const int nm = g.nx() / 2 + 1;
  Eigen::MatrixXcd out(f.rows(), nm);
  Eigen::VectorXd buf(g.nx());
  for (int r = 0; r < f.rows(); ++r) {
    buf = f.row(r).matrix().transpose();
    out.row(r) = fft_forward(buf).transpose();
  }
  return out;
}

Field2D rowInverse(const Grid& g, const Eigen::MatrixXcd& spec) {
  Field2D out(spec.rows(), g.nx());
  for (int r = 0; r < spec.rows(); ++r) {
    Eigen::VectorXcd c = spec.row(r).transpose();
    out.row(r) = fft_inverse(c, g.nx()).transpose().array();
  }
  return out;
}

}  // namespace

FlatTrajectory StokesSolver::march(const RhsTrajectory& rhs, const Field2D& v0,
                                   const Field2D& w0, const Field1D& h0) const {
  const Grid& g = grid_;
  Impl& im = *impl_;
  const int M = g.steps();
  if (rhs.size() != M + 1)
    throw std::invalid_argument("rhs trajectory has wrong number of levels");

  const int nm = im.nModes;
  const int rows = g.rows();
  const int ny = im.ny;

  FlatTrajectory out = FlatTrajectory::zero(g);
  out[0].v = v0;
  out[0].w = w0;
  out[0].h = h0;

  Eigen::MatrixXcd Vh = rowSpectra(g, v0);
  Eigen::MatrixXcd Wh = rowSpectra(g, w0);
  Eigen::VectorXcd Hh = fft_forward(Eigen::VectorXd(h0.matrix()));

  double worst = 0.0;
  Eigen::VectorXcd b(im.nU), x(im.nU);
  Eigen::MatrixXcd Vn(rows, nm), Wn(rows, nm), Pn(rows, nm);
  Eigen::VectorXcd Hn(nm);

  for (int m = 0; m < M; ++m) {
    Eigen::MatrixXcd Fv = rowSpectra(g, rhs[m + 1].fv);
    Eigen::MatrixXcd Fw = rowSpectra(g, rhs[m + 1].fw);
    Eigen::MatrixXcd Fd = rowSpectra(g, rhs[m + 1].fd);
    Eigen::VectorXcd Gv = fft_forward(Eigen::VectorXd(rhs[m + 1].gv.matrix()));
    Eigen::VectorXcd Gw = fft_forward(Eigen::VectorXd(rhs[m + 1].gw.matrix()));
    Eigen::VectorXcd Gh = fft_forward(Eigen::VectorXd(rhs[m].gh.matrix()));

    for (int k = 0; k < nm; ++k) {
      b.setZero();
      int row = 4;  // wall velocity rows stay homogeneous
      b[row++] = Fw(0, k) + (im.rho[0] / im.dt) * Wh(0, k);
      b[row++] = Fw(rows - 1, k) + (im.rho[1] / im.dt) * Wh(rows - 1, k);
      for (int s = 0; s < 2; ++s) {
        const int rowOff = (s == 0) ? 0 : (ny + 1);
        for (int j = 1; j <= ny - 1; ++j) {
          const int gr = rowOff + j;
          b[row++] = Fv(gr, k) + (im.rho[s] / im.dt) * Vh(gr, k);
          b[row++] = Fw(gr, k) + (im.rho[s] / im.dt) * Wh(gr, k);
        }
      }
      b[row++] = Fw(ny, k) + (im.rho[0] / im.dt) * Wh(ny, k);
      b[row++] = Fw(ny + 1, k) + (im.rho[1] / im.dt) * Wh(ny + 1, k);
      for (int s = 0; s < 2; ++s) {
        const int rowOff = (s == 0) ? 0 : (ny + 1);
        for (int j = 1; j <= ny - 1; ++j) b[row++] = Fd(rowOff + j, k);
      }
      b[row++] = 0.0;  // [v]
      b[row++] = 0.0;  // [w]
      b[row++] = Gv[k];
      b[row++] = Gw[k];
      b[row++] = Hh[k] / im.dt + Gh[k];

      if (k == 0) {
        Eigen::VectorXcd b0 = b;
        for (int r : im.k0Priority) b0[r] *= Impl::kK0RowWeight;
        x = im.cod0.solve(b0);
      } else
        x = im.lus[k]->solve(b);

      if (!x.allFinite())
        throw std::runtime_error("non-finite per-mode solution at k=" +
                                 std::to_string(k));

      for (int s = 0; s < 2; ++s) {
        const int rowOff = (s == 0) ? 0 : (ny + 1);
        for (int j = 0; j <= ny; ++j) {
          Vn(rowOff + j, k) = x[im.idx(s, j, 0)];
          Wn(rowOff + j, k) = x[im.idx(s, j, 1)];
          Pn(rowOff + j, k) = x[im.idx(s, j, 2)];
        }
      }
      Hn[k] = x[im.idxH()];

      // residuals of the imposed interface rows, relative to the data scale
      double scale = 1.0 + b.cwiseAbs().maxCoeff() + x.cwiseAbs().maxCoeff();
      for (int s4 = 0; s4 < 4; ++s4) {
        Complex acc = -b[im.jumpRowIdx[k][s4]];
        for (const auto& [col, val] : im.jumpRows[k][s4].entries)
          acc += val * x[col];
        worst = std::max(worst, std::abs(acc) / scale);
      }
    }

    // pressure gauge: zero mean of the k=0 mode over the wall rows
    Complex gauge = 0.5 * (Pn(0, 0) + Pn(rows - 1, 0));
    Pn.col(0).array() -= gauge;

    Vh = Vn;
    Wh = Wn;
    Hh = Hn;
    out[m + 1].v = rowInverse(g, Vn);
    out[m + 1].w = rowInverse(g, Wn);
    out[m + 1].pi = rowInverse(g, Pn);
    out[m + 1].h = fft_inverse(Hn, g.nx()).array();
    out[m + 1].r = trace_jump(g, out[m + 1].pi).jump;
  }

  if (M > 0) {
    out[0].pi = out[1].pi;
    out[0].r = out[1].r;
  }
  im.lastResidual = worst;
  return out;
}

RhsTrajectory StokesSolver::apply_operator(const FlatTrajectory& z) const {
  const Grid& g = grid_;
  Impl& im = *impl_;
  const int M = g.steps();
  if (z.size() != M + 1)
    throw std::invalid_argument("trajectory has wrong number of levels");
  const int nm = im.nModes;
  const int ny = im.ny;

  RhsTrajectory rhs = RhsTrajectory::zero(g);
  Eigen::VectorXcd x(im.nU), y(im.nU);

  Eigen::MatrixXcd Vprev = rowSpectra(g, z[0].v);
  Eigen::MatrixXcd Wprev = rowSpectra(g, z[0].w);
  Eigen::VectorXcd Hprev = fft_forward(Eigen::VectorXd(z[0].h.matrix()));

  for (int m = 0; m < M; ++m) {
    Eigen::MatrixXcd Vc = rowSpectra(g, z[m + 1].v);
    Eigen::MatrixXcd Wc = rowSpectra(g, z[m + 1].w);
    Eigen::MatrixXcd Pc = rowSpectra(g, z[m + 1].pi);
    Eigen::VectorXcd Hc = fft_forward(Eigen::VectorXd(z[m + 1].h.matrix()));

    Eigen::MatrixXcd Fv = Eigen::MatrixXcd::Zero(g.rows(), nm);
    Eigen::MatrixXcd Fw = Eigen::MatrixXcd::Zero(g.rows(), nm);
    Eigen::MatrixXcd Fd = Eigen::MatrixXcd::Zero(g.rows(), nm);
    Eigen::VectorXcd Gv(nm), Gw(nm), Gh(nm);

    for (int k = 0; k < nm; ++k) {
      for (int s = 0; s < 2; ++s) {
        const int rowOff = (s == 0) ? 0 : (ny + 1);
        for (int j = 0; j <= ny; ++j) {
          x[im.idx(s, j, 0)] = Vc(rowOff + j, k);
          x[im.idx(s, j, 1)] = Wc(rowOff + j, k);
          x[im.idx(s, j, 2)] = Pc(rowOff + j, k);
        }
      }
      x[im.idxH()] = Hc[k];
      y = im.mats[k] * x;

      int row = 4;
      const int last = g.rows() - 1;
      Fw(0, k) = y[row++] - (im.rho[0] / im.dt) * Wprev(0, k);
      Fw(last, k) = y[row++] - (im.rho[1] / im.dt) * Wprev(last, k);
      for (int s = 0; s < 2; ++s) {
        const int rowOff = (s == 0) ? 0 : (ny + 1);
        for (int j = 1; j <= ny - 1; ++j) {
          const int gr = rowOff + j;
          Fv(gr, k) = y[row++] - (im.rho[s] / im.dt) * Vprev(gr, k);
          Fw(gr, k) = y[row++] - (im.rho[s] / im.dt) * Wprev(gr, k);
        }
      }
      Fw(ny, k) = y[row++] - (im.rho[0] / im.dt) * Wprev(ny, k);
      Fw(ny + 1, k) = y[row++] - (im.rho[1] / im.dt) * Wprev(ny + 1, k);
      for (int s = 0; s < 2; ++s) {
        const int rowOff = (s == 0) ? 0 : (ny + 1);
        for (int j = 1; j <= ny - 1; ++j) Fd(rowOff + j, k) = y[row++];
      }
      row += 2;  // [v], [w] rows carry no data
      Gv[k] = y[row++];
      Gw[k] = y[row++];
      Gh[k] = y[row] - Hprev[k] / im.dt;
    }

    rhs[m + 1].fv = rowInverse(g, Fv);
    rhs[m + 1].fw = rowInverse(g, Fw);
    rhs[m + 1].fd = rowInverse(g, Fd);
    rhs[m + 1].gv = fft_inverse(Gv, g.nx()).array();
    rhs[m + 1].gw = fft_inverse(Gw, g.nx()).array();
    rhs[m].gh = fft_inverse(Gh, g.nx()).array();

    Vprev = Vc;
    Wprev = Wc;
    Hprev = Hc;
  }
  return rhs;
}

Field1D heat_smooth(const Grid& g, const Field1D& f, double t) {
  if (t < 0.0) throw std::invalid_argument("heat_smooth requires t >= 0");
  Eigen::VectorXcd c = fft_forward(Eigen::VectorXd(f.matrix()));
  for (int k = 0; k < c.size(); ++k) {
    double kap = wavenumber(k, g.lx());
    c[k] *= std::exp(-kap * kap * t);
  }
  return fft_inverse(c, g.nx()).array();
}

namespace {

/// 2D heat semigroup (implicit Euler per step) on the de-duplicated strip
/// with homogeneous Neumann walls, applied to a whole-strip extension.
class StripHeat {
 public:
  StripHeat(const Grid& g) : g_(g) {
    const int ny = g.nyHalf();
    n_ = 2 * ny + 1;
    for (int j = 0; j <= ny; ++j) ys_.push_back(g.y(j));
    for (int j = 1; j <= ny; ++j) ys_.push_back(g.y(ny + 1 + j));

    const int nm = g.nx() / 2 + 1;
    lus_.resize(nm);
    for (int k = 0; k < nm; ++k) {
      const double kap = wavenumber(k, g.lx());
      std::vector<Triplet> trips;
      for (int j = 1; j < n_ - 1; ++j) {
        std::vector<double> xs = {ys_[j - 1], ys_[j], ys_[j + 1]};
        Eigen::VectorXd w2 = fdWeights(xs, ys_[j], 2);
        trips.emplace_back(j, j, 1.0 / g.spec().dt + kap * kap);
        for (int q = 0; q < 3; ++q)
          trips.emplace_back(j, j - 1 + q, Complex(-w2[q]));
      }
      for (int end : {0, n_ - 1}) {
        int lo = (end == 0) ? 0 : n_ - 3;
        std::vector<double> xs = {ys_[lo], ys_[lo + 1], ys_[lo + 2]};
        Eigen::VectorXd w1 = fdWeights(xs, ys_[end], 1);
        for (int q = 0; q < 3; ++q) trips.emplace_back(end, lo + q, Complex(w1[q]));
      }
      SpMat A(n_, n_);
      A.setFromTriplets(trips.begin(), trips.end());
      lus_[k] = std::make_unique<Eigen::SparseLU<SpMat>>();
      lus_[k]->compute(A);
      if (lus_[k]->info() != Eigen::Success)
        throw std::runtime_error("strip heat factorization failed");
    }
  }

  /// One implicit Euler step of d_t c = Lap c, in place (spectral in x).
  void step(Eigen::MatrixXcd& c) const {
    Eigen::VectorXcd b(n_), x(n_);
    for (int k = 0; k < c.cols(); ++k) {
      b = c.col(k) / g_.spec().dt;
      b[0] = 0.0;
      b[n_ - 1] = 0.0;
      x = lus_[k]->solve(b);
      c.col(k) = x;
    }
  }

  /// de-duplicated samples of a whole-strip field (interface rows averaged)
  Eigen::MatrixXcd gather(const Field2D& f) const {
    const int ny = g_.nyHalf();
    Field2D dedup(n_, g_.nx());
    for (int j = 0; j < ny; ++j) dedup.row(j) = f.row(j);
    dedup.row(ny) = 0.5 * (f.row(ny) + f.row(ny + 1));
    for (int j = 1; j <= ny; ++j) dedup.row(ny + j) = f.row(ny + 1 + j);
    return rowSpectra(g_, dedup);
  }

  /// back to the duplicated grid
  Field2D scatter(const Eigen::MatrixXcd& c) const {
    const int ny = g_.nyHalf();
    Field2D dedup = rowInverse(g_, c);
    Field2D out = g_.zero2D();
    for (int j = 0; j <= ny; ++j) out.row(j) = dedup.row(j);
    for (int j = 0; j <= ny; ++j) out.row(ny + 1 + j) = dedup.row(ny + j);
    return out;
  }

 private:
  const Grid& g_;
  int n_;
  std::vector<double> ys_;
  std::vector<std::unique_ptr<Eigen::SparseLU<SpMat>>> lus_;
};

}  // namespace

ZStar construct_zstar(const StokesSolver& solver, const Field2D& v0,
                      const Field2D& w0, const Field1D& h0, double compat_tol) {
  const Grid& g = solver.grid();
  const PhysicalParams& p = solver.params();

  CompatibilityReport rep = check_compatibility(g, p, v0, w0, h0, compat_tol);
  if (!rep.pass())
    throw std::invalid_argument("incompatible initial data for z*");

  FlatState z0 = FlatState::zero(g);
  z0.v = v0;
  z0.w = w0;
  z0.h = h0;
  z0.r = jump_pressure_r0(g, p, v0, w0, h0);
  RhsTuple n0 = assemble_N(g, p, z0, interface_dth(g, z0));

  // two-sided heat evolution of the extensions of v0 * h0_x
  Field1D h0x = ddx(g, h0, 1);
  Field2D vh = v0;
  for (int i = 0; i < g.nx(); ++i) vh.col(i) *= h0x[i];
  HalfExtensions ext = extend_half_fields(g, vh);

  StripHeat heat(g);
  Eigen::MatrixXcd cLo = heat.gather(ext.lower);
  Eigen::MatrixXcd cUp = heat.gather(ext.upper);

  const int M = g.steps();
  const int ny = g.nyHalf();
  ZStar zs;
  zs.rhs = RhsTrajectory::zero(g);
  for (int m = 0; m <= M; ++m) {
    double t = g.time(m);
    if (m > 0) {
      heat.step(cLo);
      heat.step(cUp);
    }
    Field2D lo = heat.scatter(cLo), up = heat.scatter(cUp);
    Field2D cd = g.zero2D();
    for (int r = 0; r <= ny; ++r) cd.row(r) = lo.row(r);
    for (int r = ny + 1; r < g.rows(); ++r) cd.row(r) = up.row(r);
    zs.rhs[m].fd = ddy(g, cd);
    zs.rhs[m].gv = heat_smooth(g, n0.gv, t);
    zs.rhs[m].gw = heat_smooth(g, n0.gw, t);
    zs.rhs[m].gh = heat_smooth(g, n0.gh, t);
  }

  zs.z = solver.march(zs.rhs, v0, w0, h0);
  return zs;
}

}  // namespace capflow
