#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace capflow {

using Complex = std::complex<double>;

/// Real-to-complex FFT of a periodic sample vector (length n, n even).
/// Returns n/2+1 coefficients c_k = sum_j f_j exp(-2*pi*i*j*k/n) / n,
/// so c_0 is the mean and |k| <= n/2.
Eigen::VectorXcd fft_forward(const Eigen::Ref<const Eigen::VectorXd>& f);

/// Inverse of fft_forward.
Eigen::VectorXd fft_inverse(const Eigen::Ref<const Eigen::VectorXcd>& c, int n);

/// Wavenumber of mode index k on a period of length lx (k = 0..n/2).
inline double wavenumber(int k, double lx) { return 2.0 * M_PI * k / lx; }

}  // namespace capflow
