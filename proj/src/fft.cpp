#include "savflow/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <vector>

namespace savflow {
namespace {

// One pair of c2c plans per grid extent, executed under a lock on a
// dedicated aligned buffer. FFTW_ESTIMATE keeps planning deterministic.
class Transformer {
public:
  explicit Transformer(std::vector<int> dims) : dims_(std::move(dims)) {
    total_ = 1;
    for (int n : dims_) total_ *= n;
    buf_ = static_cast<fftw_complex*>(
        fftw_malloc(sizeof(fftw_complex) * total_));
    fwd_ = fftw_plan_dft(static_cast<int>(dims_.size()), dims_.data(), buf_,
                         buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft(static_cast<int>(dims_.size()), dims_.data(), buf_,
                         buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Transformer() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }

  Eigen::ArrayXcd forward(const Eigen::ArrayXd& in) {
    std::lock_guard<std::mutex> lock(mu_);
    for (std::int64_t i = 0; i < total_; ++i) {
      buf_[i][0] = in[i];
      buf_[i][1] = 0.0;
    }
    fftw_execute(fwd_);
    Eigen::ArrayXcd out(total_);
    const double scale = 1.0 / static_cast<double>(total_);
    for (std::int64_t i = 0; i < total_; ++i)
      out[i] = std::complex<double>(buf_[i][0] * scale, buf_[i][1] * scale);
    return out;
  }

  Eigen::ArrayXd backward(const Eigen::ArrayXcd& in) {
    std::lock_guard<std::mutex> lock(mu_);
    for (std::int64_t i = 0; i < total_; ++i) {
      buf_[i][0] = in[i].real();
      buf_[i][1] = in[i].imag();
    }
    fftw_execute(bwd_);
    Eigen::ArrayXd out(total_);
    for (std::int64_t i = 0; i < total_; ++i) out[i] = buf_[i][0];
    return out;
  }

private:
  std::vector<int> dims_;
  std::int64_t total_ = 0;
  fftw_complex* buf_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
  std::mutex mu_;
};

Transformer& transformer_for(const Grid& g) {
  static std::mutex registry_mu;
  static std::map<std::vector<int>, std::unique_ptr<Transformer>> registry;
  std::vector<int> dims(g.dim());
  for (int d = 0; d < g.dim(); ++d) dims[d] = g.points(d);
  std::lock_guard<std::mutex> lock(registry_mu);
  auto it = registry.find(dims);
  if (it == registry.end())
    it = registry.emplace(dims, std::make_unique<Transformer>(dims)).first;
  return *it->second;
}

}  // namespace

SpectralField transform_forward(const Field& f) {
  if (!f.all_finite())
    throw std::invalid_argument("transform_forward: non-finite input");
  return SpectralField(f.grid_ptr(), transformer_for(f.grid()).forward(f.values()));
}

Field transform_backward(const SpectralField& fh) {
  return Field(fh.grid_ptr(), transformer_for(fh.grid()).backward(fh.coeffs()));
}

}  // namespace savflow
