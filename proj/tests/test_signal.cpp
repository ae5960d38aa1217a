#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "scwt/error.hpp"
#include "scwt/signal.hpp"

using namespace scwt;

namespace {

std::vector<double> sine(double freq, double rate, std::size_t n, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / rate + phase);
  return x;
}

ScalpRecording single_row(const std::vector<double>& x, double rate) {
  ScalpRecording r;
  r.data = Eigen::Map<const Eigen::RowVectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  r.sampling_rate = rate;
  return r;
}

std::vector<double> row(const ScalpRecording& r, Eigen::Index c = 0) {
  std::vector<double> out(static_cast<std::size_t>(r.data.cols()));
  for (Eigen::Index t = 0; t < r.data.cols(); ++t) out[static_cast<std::size_t>(t)] = r.data(c, t);
  return out;
}

ScoutMatrix scouts_of_length(Eigen::Index t) {
  ScoutMatrix s;
  s.series.resize(kNumRegions, t);
  for (Eigen::Index r = 0; r < kNumRegions; ++r) {
    for (Eigen::Index i = 0; i < t; ++i) s.series(r, i) = static_cast<double>(r * 100000 + i);
  }
  s.sampling_rate = 512.0;
  return s;
}

}  // namespace

TEST_SUITE("signal") {
  TEST_CASE("10 Hz passes with unity gain through the zero-phase band-pass") {
    const std::size_t n = 512 * 20;
    const auto x = sine(10.0, 512.0, n);
    const auto y = row(butterworth_bandpass(single_row(x, 512.0), 0.5, 40.0, 8, true));
    // Central 5 s span a whole number of 10 Hz periods.
    const std::span<const double> mid(y.data() + 512 * 8, 512 * 5);
    CHECK(oracle::tone_amplitude(mid, 10.0, 512.0) == doctest::Approx(1.0).epsilon(0.01));
    // Zero phase: the filtered wave lines up with the input sample for sample.
    double worst = 0.0;
    for (std::size_t i = 512 * 8; i < 512 * 13; ++i) worst = std::max(worst, std::abs(y[i] - x[i]));
    CHECK(worst < 0.01);
  }

  TEST_CASE("0.05 Hz is attenuated by at least 40 dB") {
    const std::size_t n = 512 * 200;
    const auto x = sine(0.05, 512.0, n);
    const auto y = row(butterworth_bandpass(single_row(x, 512.0), 0.5, 40.0, 8, true));
    const std::span<const double> mid(y.data() + 512 * 50, 512 * 100);
    CHECK(oracle::tone_amplitude(mid, 0.05, 512.0) <= 0.01);

    const auto sos = design_butterworth_bandpass(0.5, 40.0, 512.0, 8);
    CHECK(sos.size() == 4);
    CHECK(std::norm(frequency_response(sos, 0.05, 512.0)) <= 1e-4);
    CHECK(std::abs(frequency_response(sos, 10.0, 512.0)) == doctest::Approx(1.0).epsilon(0.01));
  }

  TEST_CASE("causal filtering delays the waveform") {
    const auto x = sine(10.0, 512.0, 512 * 10);
    const auto y = row(butterworth_bandpass(single_row(x, 512.0), 0.5, 40.0, 8, false));
    double worst = 0.0;
    for (std::size_t i = 512 * 4; i < 512 * 6; ++i) worst = std::max(worst, std::abs(y[i] - x[i]));
    CHECK(worst > 0.1);
  }

  TEST_CASE("invalid band edges") {
    CHECK_THROWS_AS(design_butterworth_bandpass(40.0, 0.5, 512.0, 8), ValidationError);
    CHECK_THROWS_AS(design_butterworth_bandpass(0.0, 40.0, 512.0, 8), ValidationError);
    CHECK_THROWS_AS(design_butterworth_bandpass(0.5, 300.0, 512.0, 8), ValidationError);
    CHECK_THROWS_AS(design_butterworth_bandpass(0.5, 40.0, 512.0, 7), ValidationError);
  }

  TEST_CASE("average re-reference") {
    ScalpRecording r;
    r.data = Eigen::MatrixXd(2, 3);
    r.data << 1, 1, 1, -1, -1, -1;
    r.sampling_rate = 100.0;
    CHECK(average_rereference(r).data == r.data);

    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    r.data = Eigen::MatrixXd::NullaryExpr(8, 100, [&] { return n(rng); });
    const Eigen::MatrixXd out = average_rereference(r).data;
    for (Eigen::Index t = 0; t < 100; ++t) CHECK(std::abs(out.col(t).sum()) < 1e-12);

    r.data = Eigen::MatrixXd::Ones(1, 10);
    CHECK_THROWS_AS(average_rereference(r), ValidationError);
  }

  TEST_CASE("downsample length, DC and tone preservation") {
    CHECK(downsample(single_row(std::vector<double>(1000, 0.0), 1000.0), 512.0).data.cols() == 512);

    const auto dc = row(downsample(single_row(std::vector<double>(3000, 2.5), 1000.0), 512.0));
    CHECK(dc.size() == 1536);
    for (double v : dc) CHECK(v == doctest::Approx(2.5).epsilon(1e-9));

    const auto y = row(downsample(single_row(sine(5.0, 1000.0, 4000), 1000.0), 512.0));
    REQUIRE(y.size() == 2048);
    CHECK(oracle::dominant_frequency(y, 512.0) == doctest::Approx(5.0));
    CHECK(oracle::tone_amplitude(y, 5.0, 512.0) == doctest::Approx(1.0).epsilon(0.02));

    CHECK_THROWS_AS(downsample(single_row(sine(5.0, 256.0, 100), 256.0), 512.0), ValidationError);
  }

  TEST_CASE("epoch segmentation") {
    CHECK(segment_epochs(scouts_of_length(153600), "s", ClassLabel::AD).size() == 1200);
    CHECK(segment_epochs(scouts_of_length(127), "s", ClassLabel::AD).empty());

    const ScoutMatrix s = scouts_of_length(256);
    const auto epochs = segment_epochs(s, "subj", ClassLabel::HC);
    REQUIRE(epochs.size() == 2);
    for (int e = 0; e < 2; ++e) {
      CHECK(epochs[e].samples.rows() == 128);
      CHECK(epochs[e].samples.cols() == 6);
      CHECK(epochs[e].index_in_subject == e);
      CHECK(epochs[e].subject == "subj");
    }
    for (Eigen::Index t = 0; t < 256; ++t) {
      for (Eigen::Index r = 0; r < 6; ++r) CHECK(epochs[t / 128].samples(t % 128, r) == s.series(r, t));
    }

    ScoutMatrix wrong = s;
    wrong.sampling_rate = 1000.0;
    CHECK_THROWS_AS(segment_epochs(wrong, "s", ClassLabel::AD), ValidationError);
  }
}
