#include "scwt/signal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

#include "scwt/error.hpp"

namespace scwt {
namespace {

using cd = std::complex<double>;

// Steady-state TDF-II state of each section for a constant unit input.
std::vector<std::array<double, 2>> steady_state_states(std::span<const Biquad> sections) {
  std::vector<std::array<double, 2>> zi(sections.size());
  double level = 1.0;
  for (std::size_t k = 0; k < sections.size(); ++k) {
    const auto& s = sections[k];
    const double dc = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double y = dc * level;
    const double z2 = (s.b2 - s.a2 * dc) * level;
    const double z1 = y - s.b0 * level;
    zi[k] = {z1, z2};
    level = y;
  }
  return zi;
}

void run_cascade(std::span<const Biquad> sections, std::vector<double>& x, std::vector<std::array<double, 2>> state) {
  for (std::size_t k = 0; k < sections.size(); ++k) {
    const auto& s = sections[k];
    double z1 = state[k][0];
    double z2 = state[k][1];
    for (double& v : x) {
      const double in = v;
      const double y = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * y + z2;
      z2 = s.b2 * in - s.a2 * y;
      v = y;
    }
  }
}

std::vector<std::array<double, 2>> scaled(const std::vector<std::array<double, 2>>& zi, double by) {
  auto out = zi;
  for (auto& z : out) {
    z[0] *= by;
    z[1] *= by;
  }
  return out;
}

// Reduced (up, down) with target / rate = up / down, from rates in mHz.
std::pair<long long, long long> resample_ratio(double rate, double target) {
  auto milli = [](double v) {
    const double m = std::round(v * 1000.0);
    if (std::abs(v * 1000.0 - m) > 1e-6 * std::max(1.0, m)) {
      throw ValidationError("sampling rates must be multiples of 1 mHz");
    }
    return static_cast<long long>(m);
  };
  const long long a = milli(target);
  const long long b = milli(rate);
  const long long g = std::gcd(a, b);
  return {a / g, b / g};
}

double kaiser(double x, double beta) {
  if (std::abs(x) > 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - x * x)) / std::cyl_bessel_i(0.0, beta);
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

std::vector<Biquad> design_butterworth_bandpass(double low_hz, double high_hz, double sampling_rate, int order) {
  if (!(sampling_rate > 0.0)) throw ValidationError("sampling rate must be positive");
  if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < sampling_rate / 2.0)) {
    throw ValidationError("band edges must satisfy 0 < low < high < sampling_rate / 2");
  }
  if (order < 2 || order % 2 != 0) throw ValidationError("band-pass order must be an even integer >= 2");

  const int n = order / 2;
  const double fs2 = 2.0 * sampling_rate;
  const double w1 = fs2 * std::tan(std::numbers::pi * low_hz / sampling_rate);
  const double w2 = fs2 * std::tan(std::numbers::pi * high_hz / sampling_rate);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;

  std::vector<cd> complex_poles;
  std::vector<double> real_poles;
  for (int k = 0; k < n; ++k) {
    const cd p = std::polar(1.0, std::numbers::pi * (2.0 * k + n + 1.0) / (2.0 * n));
    const cd half = p * bw / 2.0;
    const cd root = std::sqrt(half * half - w0sq);
    for (const cd s : {half + root, half - root}) {
      const cd z = (fs2 + s) / (fs2 - s);
      if (std::abs(z.imag()) > 1e-12) {
        if (z.imag() > 0.0) complex_poles.push_back(z);
      } else {
        real_poles.push_back(z.real());
      }
    }
  }
  std::sort(real_poles.begin(), real_poles.end());

  std::vector<Biquad> sections;
  for (const cd z : complex_poles) sections.push_back({1.0, 0.0, -1.0, -2.0 * z.real(), std::norm(z)});
  for (std::size_t i = 0; i + 1 < real_poles.size(); i += 2) {
    sections.push_back({1.0, 0.0, -1.0, -(real_poles[i] + real_poles[i + 1]), real_poles[i] * real_poles[i + 1]});
  }
  if (static_cast<int>(sections.size()) != n) throw NumericError("band-pass pole pairing failed");

  // Unit gain at the digital image of the analog centre frequency.
  const double centre = sampling_rate / std::numbers::pi * std::atan(std::sqrt(w0sq) / fs2);
  for (auto& s : sections) {
    const double g = std::abs(frequency_response(std::span<const Biquad>(&s, 1), centre, sampling_rate));
    s.b0 /= g;
    s.b1 /= g;
    s.b2 /= g;
  }
  return sections;
}

std::complex<double> frequency_response(std::span<const Biquad> sections, double freq_hz, double sampling_rate) {
  const cd zinv = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / sampling_rate);
  cd h = 1.0;
  for (const auto& s : sections) {
    h *= (s.b0 + s.b1 * zinv + s.b2 * zinv * zinv) / (1.0 + s.a1 * zinv + s.a2 * zinv * zinv);
  }
  return h;
}

std::vector<double> sosfilt(std::span<const Biquad> sections, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  run_cascade(sections, y, std::vector<std::array<double, 2>>(sections.size(), {0.0, 0.0}));
  return y;
}

std::vector<double> sosfiltfilt(std::span<const Biquad> sections, std::span<const double> x, std::size_t pad) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  pad = std::min(pad, n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto zi = steady_state_states(sections);
  run_cascade(sections, ext, scaled(zi, ext.front()));
  std::reverse(ext.begin(), ext.end());
  run_cascade(sections, ext, scaled(zi, ext.front()));
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

ScalpRecording butterworth_bandpass(const ScalpRecording& recording, double low_hz, double high_hz, int order,
                                    bool zero_phase) {
  const auto sections = design_butterworth_bandpass(low_hz, high_hz, recording.sampling_rate, order);
  ScalpRecording out = recording;
  std::vector<double> row(static_cast<std::size_t>(recording.data.cols()));
  for (Eigen::Index c = 0; c < recording.data.rows(); ++c) {
    for (Eigen::Index t = 0; t < recording.data.cols(); ++t) row[static_cast<std::size_t>(t)] = recording.data(c, t);
    std::vector<double> y;
    if (zero_phase) {
      y = sosfiltfilt(sections, row, static_cast<std::size_t>(3 * order));
    } else {
      y = row;
      if (!y.empty()) run_cascade(sections, y, scaled(steady_state_states(sections), y.front()));
    }
    for (Eigen::Index t = 0; t < recording.data.cols(); ++t) out.data(c, t) = y[static_cast<std::size_t>(t)];
  }
  return out;
}

ScalpRecording average_rereference(const ScalpRecording& recording) {
  if (recording.data.rows() < 2) throw ValidationError("average re-reference needs at least two channels");
  ScalpRecording out = recording;
  out.data.rowwise() -= recording.data.colwise().mean();
  return out;
}

std::vector<double> resample_channel(std::span<const double> x, double rate, double target_rate) {
  if (!(target_rate > 0.0) || !(rate > 0.0)) throw ValidationError("sampling rates must be positive");
  if (target_rate > rate) throw ValidationError("downsample does not upsample (target exceeds current rate)");
  if (target_rate == rate) return {x.begin(), x.end()};

  const auto [up, down] = resample_ratio(rate, target_rate);
  const auto n_in = static_cast<long long>(x.size());
  const long long n_out = n_in * up / down;
  if (n_out <= 0) return {};

  // Cutoff in cycles per input sample.
  const double fc = 0.45 * target_rate / rate;
  constexpr double kZeroCrossings = 16.0;
  constexpr double kBeta = 8.0;
  const auto half = static_cast<long long>(std::ceil(kZeroCrossings / (2.0 * fc)));

  // One tap table per output phase, normalized to unit DC gain.
  std::vector<std::vector<double>> phases(static_cast<std::size_t>(up));
  for (long long ph = 0; ph < up; ++ph) {
    const double frac = static_cast<double>(ph) / static_cast<double>(up);
    auto& taps = phases[static_cast<std::size_t>(ph)];
    taps.resize(static_cast<std::size_t>(2 * half + 1));
    double sum = 0.0;
    for (long long k = -half; k <= half; ++k) {
      const double tau = frac - static_cast<double>(k);  // output time minus input index
      const double w = 2.0 * fc * sinc(2.0 * fc * tau) * kaiser(tau / static_cast<double>(half + 1), kBeta);
      taps[static_cast<std::size_t>(k + half)] = w;
      sum += w;
    }
    for (double& w : taps) w /= sum;
  }

  auto sample = [&](long long i) {
    // Symmetric reflection at both ends.
    while (i < 0 || i >= n_in) {
      if (i < 0) i = -i - 1;
      if (i >= n_in) i = 2 * n_in - i - 1;
    }
    return x[static_cast<std::size_t>(i)];
  };

  std::vector<double> y(static_cast<std::size_t>(n_out));
  for (long long k = 0; k < n_out; ++k) {
    const long long num = k * down;
    const long long base = num / up;
    const long long ph = num % up;
    const auto& taps = phases[static_cast<std::size_t>(ph)];
    double acc = 0.0;
    for (long long j = -half; j <= half; ++j) acc += taps[static_cast<std::size_t>(j + half)] * sample(base + j);
    y[static_cast<std::size_t>(k)] = acc;
  }
  return y;
}

ScalpRecording downsample(const ScalpRecording& recording, double target_rate) {
  ScalpRecording out = recording;
  std::vector<double> row(static_cast<std::size_t>(recording.data.cols()));
  for (Eigen::Index c = 0; c < recording.data.rows(); ++c) {
    for (Eigen::Index t = 0; t < recording.data.cols(); ++t) row[static_cast<std::size_t>(t)] = recording.data(c, t);
    const auto y = resample_channel(row, recording.sampling_rate, target_rate);
    if (c == 0) out.data.resize(recording.data.rows(), static_cast<Eigen::Index>(y.size()));
    for (std::size_t t = 0; t < y.size(); ++t) out.data(c, static_cast<Eigen::Index>(t)) = y[t];
  }
  if (recording.data.rows() == 0) {
    out.data.resize(0, static_cast<Eigen::Index>(resample_channel({}, recording.sampling_rate, target_rate).size()));
  }
  out.sampling_rate = target_rate;
  return out;
}

std::vector<Epoch> segment_epochs(const ScoutMatrix& scouts, const std::string& subject, ClassLabel label,
                                  Eigen::Index epoch_len) {
  if (epoch_len <= 0) throw ValidationError("epoch length must be positive");
  if (epoch_len == kEpochLength && scouts.sampling_rate != kEpochSamplingRate) {
    throw ValidationError("128-sample epochs require a 512 Hz scout matrix");
  }
  if (scouts.series.rows() != kNumRegions) throw ShapeError("scout matrix must have 6 rows");
  const Eigen::Index count = scouts.series.cols() / epoch_len;
  std::vector<Epoch> epochs;
  epochs.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index e = 0; e < count; ++e) {
    Epoch ep;
    ep.samples = scouts.series.middleCols(e * epoch_len, epoch_len).transpose();
    ep.subject = subject;
    ep.label = label;
    ep.index_in_subject = static_cast<int>(e);
    epochs.push_back(std::move(ep));
  }
  return epochs;
}

}  // namespace scwt
