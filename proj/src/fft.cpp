#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace pulse::detail {

namespace {

// Plans are created once per length. Planning is serialized; execution on
// new arrays is thread-safe. FFTW_ESTIMATE keeps the chosen algorithm, and
// therefore the rounding, identical from run to run.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [n, p] : forward_) fftw_destroy_plan(p);
    for (auto& [n, p] : inverse_) fftw_destroy_plan(p);
  }

  fftw_plan forward(int n) {
    std::lock_guard lock(mutex_);
    auto it = forward_.find(n);
    if (it != forward_.end()) return it->second;
    std::vector<double> in(static_cast<std::size_t>(n));
    std::vector<fftw_complex> out(static_cast<std::size_t>(n / 2 + 1));
    auto plan = fftw_plan_dft_r2c_1d(n, in.data(), out.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
    forward_.emplace(n, plan);
    return plan;
  }

  fftw_plan inverse(int n) {
    std::lock_guard lock(mutex_);
    auto it = inverse_.find(n);
    if (it != inverse_.end()) return it->second;
    std::vector<fftw_complex> buf(static_cast<std::size_t>(n));
    auto plan = fftw_plan_dft_1d(n, buf.data(), buf.data(), FFTW_BACKWARD,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
    inverse_.emplace(n, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<int, fftw_plan> forward_;
  std::map<int, fftw_plan> inverse_;
};

PlanCache& plans() {
  static PlanCache cache;
  return cache;
}

}  // namespace

std::vector<std::complex<double>> rfft(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  std::vector<double> in(x.begin(), x.end());
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n / 2 + 1));
  fftw_execute_dft_r2c(plans().forward(n), in.data(), reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

void inverse_fft(std::span<std::complex<double>> data) {
  const int n = static_cast<int>(data.size());
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plans().inverse(n), p, p);
}

}  // namespace pulse::detail
