#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scwt/image.hpp"
#include "scwt/signal.hpp"
#include "scwt/tensor_io.hpp"

namespace scwt {

inline constexpr int kImageSize = 128;
inline constexpr int kImageChannels = 3;

/// Morlet analysis settings. Scales are in seconds; a scale s corresponds to
/// the pseudo-frequency omega0 / (2 pi s).
struct WaveletParams {
  double omega0 = 6.0;
  std::vector<double> scales;
  double sampling_rate = kEpochSamplingRate;

  /// Requires 128 strictly increasing positive scales and omega0 >= 5.
  void validate() const;

  /// 128 log-spaced scales whose pseudo-frequencies run from fmax down to fmin.
  static WaveletParams standard(double omega0 = 6.0, double sampling_rate = kEpochSamplingRate,
                                double fmin_hz = 0.5, double fmax_hz = 40.0);

  double pseudo_frequency(std::size_t scale_index) const;
};

/// pi^(-1/4) exp(i omega0 u) exp(-u^2 / 2).
std::complex<double> morlet_mother(double omega0, double u);

/// (1 / sqrt(sigma)) psi((t - tau) / sigma) sampled on `t`.
std::vector<std::complex<double>> morlet_basis(const WaveletParams& params, double sigma, double tau,
                                               std::span<const double> t);

/// Complex coefficients W[i][j] = dt / sqrt(sigma_i) * sum_n x[n] conj(psi((t_n - tau_j) / sigma_i)),
/// with t_n = n dt and tau_j = j dt; the signal is zero outside the window.
Eigen::MatrixXcd cwt_coefficients(std::span<const double> x, const WaveletParams& params);

/// |W| for a 128-sample input (rows = scales, columns = shifts).
Eigen::MatrixXd cwt_scalogram(std::span<const double> x, const WaveletParams& params);

/// Min-max normalization to [0, 1]; a constant map becomes all zeros.
Eigen::MatrixXd normalize_unit_range(const Eigen::MatrixXd& map);

struct ScalogramPair {
  Image left;   // ThalamusL, HippocampusL, AmygdalaL
  Image right;  // ThalamusR, HippocampusR, AmygdalaR
  ClassLabel label = ClassLabel::HC;
  std::string subject;
};

ScalogramPair epoch_to_images(const Epoch& epoch, const WaveletParams& params);

/// Stacks images as an (E, H, W, C) tensor in row-major order.
Tensor images_to_tensor(std::span<const Image> images, DType dtype = DType::F32);
std::vector<Image> images_from_tensor(const Tensor& tensor);

}  // namespace scwt
