#include "capflow/interface_geometry.hpp"

namespace capflow {

namespace {

// g_kappa(h) = A(g) * h'^2 h''  with g = h'^2, s = sqrt(1+g),
// A(g) = 1/((1+s)s) + 1/s^3.
Field1D coefA(const Field1D& g) {
  Field1D s = (1.0 + g).sqrt();
  return 1.0 / ((1.0 + s) * s) + s.pow(-3);
}

// dA/dg
Field1D coefAprime(const Field1D& g) {
  Field1D s = (1.0 + g).sqrt();
  Field1D dsdg = 0.5 / s;
  Field1D t = (1.0 + s) * s;               // s + s^2
  return -(1.0 + 2.0 * s) / (t * t) * dsdg - 3.0 * s.pow(-4) * dsdg;
}

}  // namespace

Field1D g_kappa(const Grid& gr, const Field1D& h) {
  Field1D hx = ddx(gr, h, 1);
  Field1D hxx = ddx(gr, h, 2);
  Field1D g = hx.square();
  return coefA(g) * g * hxx;
}

Field1D g_kappa_derivative(const Grid& gr, const Field1D& h, const Field1D& dh) {
  Field1D hx = ddx(gr, h, 1);
  Field1D hxx = ddx(gr, h, 2);
  Field1D dhx = ddx(gr, dh, 1);
  Field1D dhxx = ddx(gr, dh, 2);
  Field1D g = hx.square();
  Field1D dg = 2.0 * hx * dhx;
  return coefA(g) * (dg * hxx + g * dhxx) + coefAprime(g) * dg * g * hxx;
}

Field1D curvature(const Grid& gr, const Field1D& h) {
  return ddx(gr, h, 2) - g_kappa(gr, h);
}

InterfaceNormal unit_normal(const Grid& gr, const Field1D& h) {
  Field1D hx = ddx(gr, h, 1);
  Field1D s = (1.0 + hx.square()).sqrt();
  return {-hx / s, 1.0 / s};
}

}  // namespace capflow
