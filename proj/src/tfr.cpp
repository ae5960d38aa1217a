#include "scwt/tfr.hpp"

#include <cmath>
#include <numbers>

#include "scwt/error.hpp"

namespace scwt {

void WaveletParams::validate() const {
  if (!(omega0 >= 5.0)) throw ValidationError("Morlet omega0 must be >= 5");
  if (!(sampling_rate > 0.0)) throw ValidationError("sampling rate must be positive");
  if (scales.size() != static_cast<std::size_t>(kImageSize)) {
    throw ValidationError("wavelet scale grid must have 128 entries");
  }
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 0.0)) throw ValidationError("wavelet scales must be positive");
    if (i > 0 && !(scales[i] > scales[i - 1])) throw ValidationError("wavelet scales must be strictly increasing");
  }
}

WaveletParams WaveletParams::standard(double omega0, double sampling_rate, double fmin_hz, double fmax_hz) {
  if (!(fmin_hz > 0.0 && fmin_hz < fmax_hz)) throw ValidationError("need 0 < fmin < fmax");
  WaveletParams p;
  p.omega0 = omega0;
  p.sampling_rate = sampling_rate;
  p.scales.resize(kImageSize);
  const double ratio = fmin_hz / fmax_hz;
  for (int i = 0; i < kImageSize; ++i) {
    const double f = fmax_hz * std::pow(ratio, static_cast<double>(i) / (kImageSize - 1));
    p.scales[static_cast<std::size_t>(i)] = omega0 / (2.0 * std::numbers::pi * f);
  }
  p.validate();
  return p;
}

double WaveletParams::pseudo_frequency(std::size_t scale_index) const {
  return omega0 / (2.0 * std::numbers::pi * scales.at(scale_index));
}

std::complex<double> morlet_mother(double omega0, double u) {
  static const double norm = std::pow(std::numbers::pi, -0.25);
  return norm * std::exp(-0.5 * u * u) * std::polar(1.0, omega0 * u);
}

std::vector<std::complex<double>> morlet_basis(const WaveletParams& params, double sigma, double tau,
                                               std::span<const double> t) {
  if (!(sigma > 0.0)) throw ValidationError("wavelet scale must be positive");
  const double inv_sqrt = 1.0 / std::sqrt(sigma);
  std::vector<std::complex<double>> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = inv_sqrt * morlet_mother(params.omega0, (t[i] - tau) / sigma);
  return out;
}

Eigen::MatrixXcd cwt_coefficients(std::span<const double> x, const WaveletParams& params) {
  params.validate();
  const auto n = static_cast<Eigen::Index>(x.size());
  const double dt = 1.0 / params.sampling_rate;
  const auto n_scales = static_cast<Eigen::Index>(params.scales.size());
  Eigen::MatrixXcd w(n_scales, n);
  if (n == 0) return w;

  // The kernel depends only on the lag n - j, so tabulate 2N - 1 lags per scale.
  std::vector<std::complex<double>> lag(static_cast<std::size_t>(2 * n - 1));
  for (Eigen::Index i = 0; i < n_scales; ++i) {
    const double sigma = params.scales[static_cast<std::size_t>(i)];
    const double weight = dt / std::sqrt(sigma);
    for (Eigen::Index l = -(n - 1); l <= n - 1; ++l) {
      lag[static_cast<std::size_t>(l + n - 1)] =
          weight * std::conj(morlet_mother(params.omega0, static_cast<double>(l) * dt / sigma));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      std::complex<double> acc = 0.0;
      const std::complex<double>* k = lag.data() + (n - 1 - j);
      for (Eigen::Index s = 0; s < n; ++s) acc += x[static_cast<std::size_t>(s)] * k[s];
      w(i, j) = acc;
    }
  }
  return w;
}

Eigen::MatrixXd cwt_scalogram(std::span<const double> x, const WaveletParams& params) {
  if (x.size() != static_cast<std::size_t>(kImageSize)) {
    throw ShapeError("scalogram input must have 128 samples, got " + std::to_string(x.size()));
  }
  return cwt_coefficients(x, params).cwiseAbs();
}

Eigen::MatrixXd normalize_unit_range(const Eigen::MatrixXd& map) {
  const double lo = map.minCoeff();
  const double hi = map.maxCoeff();
  if (!(hi > lo)) return Eigen::MatrixXd::Zero(map.rows(), map.cols());
  Eigen::MatrixXd out = (map.array() - lo) / (hi - lo);
  return out.cwiseMax(0.0).cwiseMin(1.0);
}

ScalogramPair epoch_to_images(const Epoch& epoch, const WaveletParams& params) {
  if (epoch.samples.rows() != kImageSize || epoch.samples.cols() != kNumRegions) {
    throw ShapeError("epoch must be 128 x 6");
  }
  if (!epoch.samples.allFinite()) throw NumericError("epoch contains non-finite samples");
  ScalogramPair pair;
  pair.left = Image::zeros(kImageSize, kImageSize, kImageChannels);
  pair.right = Image::zeros(kImageSize, kImageSize, kImageChannels);
  pair.label = epoch.label;
  pair.subject = epoch.subject;

  std::vector<double> channel(kImageSize);
  for (int c = 0; c < kNumRegions; ++c) {
    for (int t = 0; t < kImageSize; ++t) channel[static_cast<std::size_t>(t)] = epoch.samples(t, c);
    const Eigen::MatrixXd map = normalize_unit_range(cwt_scalogram(channel, params));
    Image& target = c < kNumStructures ? pair.left : pair.right;
    const int plane = c % kNumStructures;
    for (int h = 0; h < kImageSize; ++h) {
      for (int w = 0; w < kImageSize; ++w) target.at(h, w, plane) = map(h, w);
    }
  }
  return pair;
}

Tensor images_to_tensor(std::span<const Image> images, DType dtype) {
  if (images.empty()) throw ShapeError("cannot stack an empty image list");
  const Image& first = images.front();
  const std::size_t per = first.size();
  std::vector<std::uint32_t> dims{static_cast<std::uint32_t>(images.size()), static_cast<std::uint32_t>(first.height),
                                  static_cast<std::uint32_t>(first.width), static_cast<std::uint32_t>(first.channels)};
  std::vector<double> values;
  values.reserve(per * images.size());
  for (const auto& img : images) {
    if (img.height != first.height || img.width != first.width || img.channels != first.channels) {
      throw ShapeError("images in a batch must share a shape");
    }
    for (int h = 0; h < img.height; ++h) {
      for (int w = 0; w < img.width; ++w) {
        for (int c = 0; c < img.channels; ++c) values.push_back(img.at(h, w, c));
      }
    }
  }
  if (dtype == DType::F64) return Tensor::make_f64(std::move(dims), std::move(values));
  return Tensor::make_f32(std::move(dims), std::vector<float>(values.begin(), values.end()));
}

std::vector<Image> images_from_tensor(const Tensor& tensor) {
  if (tensor.rank() != 4) throw FormatError("image batch must be a rank-4 tensor");
  const int n = static_cast<int>(tensor.dims[0]);
  const int hgt = static_cast<int>(tensor.dims[1]);
  const int wid = static_cast<int>(tensor.dims[2]);
  const int ch = static_cast<int>(tensor.dims[3]);
  std::vector<Image> out;
  out.reserve(static_cast<std::size_t>(n));
  std::size_t k = 0;
  for (int i = 0; i < n; ++i) {
    Image img = Image::zeros(hgt, wid, ch);
    for (int h = 0; h < hgt; ++h) {
      for (int w = 0; w < wid; ++w) {
        for (int c = 0; c < ch; ++c) img.at(h, w, c) = tensor.at(k++);
      }
    }
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace scwt
