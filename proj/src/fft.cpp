#include "capflow/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace capflow {
namespace {

// Plans are created once per transform size with FFTW_UNALIGNED so they can
// be executed on arbitrary caller buffers via the new-array interface.
// Plan creation is serialized; execution is thread-safe.
struct PlanCache {
  std::mutex mtx;
  std::map<int, fftw_plan> fwd, inv;

  fftw_plan forward(int n) {
    std::scoped_lock lock(mtx);
    auto it = fwd.find(n);
    if (it != fwd.end()) return it->second;
    std::vector<double> in(n);
    std::vector<fftw_complex> out(n / 2 + 1);
    fftw_plan p = fftw_plan_dft_r2c_1d(n, in.data(), out.data(),
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
    fwd[n] = p;
    return p;
  }
  fftw_plan inverse(int n) {
    std::scoped_lock lock(mtx);
    auto it = inv.find(n);
    if (it != inv.end()) return it->second;
    std::vector<fftw_complex> in(n / 2 + 1);
    std::vector<double> out(n);
    fftw_plan p = fftw_plan_dft_c2r_1d(n, in.data(), out.data(),
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
    inv[n] = p;
    return p;
  }
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

}  // namespace

Eigen::VectorXcd fft_forward(const Eigen::Ref<const Eigen::VectorXd>& f) {
  const int n = static_cast<int>(f.size());
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("fft: size must be even");
  std::vector<double> in(f.data(), f.data() + n);
  Eigen::VectorXcd out(n / 2 + 1);
  fftw_execute_dft_r2c(cache().forward(n), in.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
  out /= static_cast<double>(n);
  return out;
}

Eigen::VectorXd fft_inverse(const Eigen::Ref<const Eigen::VectorXcd>& c, int n) {
  if (static_cast<int>(c.size()) != n / 2 + 1)
    throw std::invalid_argument("fft_inverse: coefficient count mismatch");
  std::vector<Complex> in(c.data(), c.data() + c.size());
  Eigen::VectorXd out(n);
  fftw_execute_dft_c2r(cache().inverse(n),
                       reinterpret_cast<fftw_complex*>(in.data()), out.data());
  return out;
}

}  // namespace capflow
