#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scwt/forward.hpp"
#include "scwt/scout.hpp"

namespace scwt {

/// One second-order section, a0 normalized to 1:
///   H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

/// Digital Butterworth band-pass of total order `order` (even; the analog
/// low-pass prototype has order/2 poles), designed by bilinear transform with
/// pre-warped band edges and normalized to unit gain at the band centre.
std::vector<Biquad> design_butterworth_bandpass(double low_hz, double high_hz, double sampling_rate, int order);

std::complex<double> frequency_response(std::span<const Biquad> sections, double freq_hz, double sampling_rate);

/// Causal cascade filter, transposed direct form II, zero initial state.
std::vector<double> sosfilt(std::span<const Biquad> sections, std::span<const double> x);

/// Forward-backward filtering with odd reflection padding of `pad` samples
/// and steady-state initial conditions at both ends.
std::vector<double> sosfiltfilt(std::span<const Biquad> sections, std::span<const double> x, std::size_t pad);

/// Per-channel band-pass. With zero_phase the filter runs forward and
/// backward (squared magnitude, no net phase) with reflection padding of
/// 3 * order samples.
ScalpRecording butterworth_bandpass(const ScalpRecording& recording, double low_hz, double high_hz, int order,
                                    bool zero_phase = true);

/// Subtracts the per-sample channel mean.
ScalpRecording average_rereference(const ScalpRecording& recording);

/// Anti-alias low-pass at 0.45 * target followed by rational polyphase
/// resampling. Output length is floor(N * target / rate).
ScalpRecording downsample(const ScalpRecording& recording, double target_rate);

/// Resampling core on a single channel (rates must be integral in Hz or
/// representable to 1 mHz).
std::vector<double> resample_channel(std::span<const double> x, double rate, double target_rate);

inline constexpr Eigen::Index kEpochLength = 128;
inline constexpr double kEpochSamplingRate = 512.0;

struct Epoch {
  Eigen::MatrixXd samples;  // epoch_len x 6 (time x scout channel)
  std::string subject;
  ClassLabel label = ClassLabel::HC;
  int index_in_subject = 0;
};

/// Non-overlapping consecutive windows; the trailing remainder is dropped.
/// The 128-sample contract requires a 512 Hz scout matrix.
std::vector<Epoch> segment_epochs(const ScoutMatrix& scouts, const std::string& subject, ClassLabel label,
                                  Eigen::Index epoch_len = kEpochLength);

}  // namespace scwt
