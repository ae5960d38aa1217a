#include "oracles.hpp"

#include <cmath>

namespace oracle {
namespace {

constexpr long double kPi = 3.141592653589793238462643383279502884L;

long double green_series(const Eigen::Vector3d& electrode, const Eigen::Matrix<long double, 3, 1>& r0,
                         long double radius, long double conductivity, int order) {
  const Eigen::Matrix<long double, 3, 1> e = electrode.cast<long double>().normalized();
  const long double r = r0.norm();
  if (r == 0.0L) return 0.0L;
  const long double c = e.dot(r0) / r;
  long double p_prev = 1.0L;  // P_0
  long double p = c;          // P_1
  long double ratio_pow = r / radius;
  long double sum = 0.0L;
  for (int n = 1; n <= order; ++n) {
    sum += (2.0L * n + 1.0L) / n * ratio_pow * p;
    const long double p_next = ((2.0L * n + 1.0L) * c * p - n * p_prev) / (n + 1.0L);
    p_prev = p;
    p = p_next;
    ratio_pow *= r / radius;
  }
  return sum / (4.0L * kPi * conductivity * radius);
}

long double green_closed_form(const Eigen::Vector3d& electrode, const Eigen::Matrix<long double, 3, 1>& r0,
                              long double radius, long double conductivity) {
  const Eigen::Matrix<long double, 3, 1> e = electrode.cast<long double>().normalized();
  const long double t = r0.norm() / radius;
  const long double ct = e.dot(r0) / radius;  // c * t
  const long double d = std::sqrt(1.0L - 2.0L * ct + t * t);
  return (2.0L / d - 2.0L + std::log(2.0L / (1.0L - ct + d))) / (4.0L * kPi * conductivity * radius);
}

template <class Green>
double finite_difference(const Eigen::Vector3d& position, const Eigen::Vector3d& moment, double radius, Green g) {
  const long double mag = moment.cast<long double>().norm();
  if (mag == 0.0L) return 0.0;
  const Eigen::Matrix<long double, 3, 1> dir = moment.cast<long double>() / mag;
  const long double h = 1e-6L * radius;
  const Eigen::Matrix<long double, 3, 1> r0 = position.cast<long double>();
  // Volts per A*m -> microvolts per nA*m.
  return static_cast<double>(mag * (g(r0 + h * dir) - g(r0 - h * dir)) / (2.0L * h) * 1e-3L);
}

}  // namespace

Eigen::MatrixXd naive_matmul(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd c(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      long double acc = 0.0L;
      for (Eigen::Index k = 0; k < a.cols(); ++k) acc += static_cast<long double>(a(i, k)) * b(k, j);
      c(i, j) = static_cast<double>(acc);
    }
  }
  return c;
}

double sphere_potential_fd(const Eigen::Vector3d& electrode, const Eigen::Vector3d& position,
                           const Eigen::Vector3d& moment, double radius, double conductivity, int order) {
  return finite_difference(position, moment, radius, [&](const Eigen::Matrix<long double, 3, 1>& r0) {
    return green_series(electrode, r0, radius, conductivity, order);
  });
}

double sphere_potential_closed_form(const Eigen::Vector3d& electrode, const Eigen::Vector3d& position,
                                    const Eigen::Vector3d& moment, double radius, double conductivity) {
  return finite_difference(position, moment, radius, [&](const Eigen::Matrix<long double, 3, 1>& r0) {
    return green_closed_form(electrode, r0, radius, conductivity);
  });
}

double central_dipole_potential(const Eigen::Vector3d& electrode, const Eigen::Vector3d& moment, double radius,
                                double conductivity) {
  const Eigen::Vector3d e = electrode.normalized();
  return 3.0 * moment.dot(e) / (4.0 * std::acos(-1.0) * conductivity * radius * radius) * 1e-3;
}

std::complex<double> cwt_quadrature(std::span<const double> x, double omega0, double sigma, double tau,
                                    double sampling_rate) {
  const long double dt = 1.0L / sampling_rate;
  const long double norm = std::pow(kPi, -0.25L) / std::sqrt(static_cast<long double>(sigma));
  long double re = 0.0L;
  long double im = 0.0L;
  for (std::size_t n = 0; n < x.size(); ++n) {
    const long double u = (static_cast<long double>(n) * dt - tau) / sigma;
    const long double env = norm * std::exp(-0.5L * u * u);
    // conj(exp(i w u)) = cos(w u) - i sin(w u)
    re += x[n] * env * std::cos(omega0 * u);
    im -= x[n] * env * std::sin(omega0 * u);
  }
  return {static_cast<double>(re * dt), static_cast<double>(im * dt)};
}

double tone_amplitude(std::span<const double> x, double freq_hz, double sampling_rate) {
  long double re = 0.0L;
  long double im = 0.0L;
  for (std::size_t n = 0; n < x.size(); ++n) {
    const long double ph = 2.0L * kPi * freq_hz * static_cast<long double>(n) / sampling_rate;
    re += x[n] * std::cos(ph);
    im += x[n] * std::sin(ph);
  }
  return static_cast<double>(2.0L * std::sqrt(re * re + im * im) / static_cast<long double>(x.size()));
}

double dominant_frequency(std::span<const double> x, double sampling_rate) {
  const std::size_t n = x.size();
  double best_mag = -1.0;
  std::size_t best_k = 1;
  for (std::size_t k = 1; k < n / 2; ++k) {
    long double re = 0.0L;
    long double im = 0.0L;
    for (std::size_t t = 0; t < n; ++t) {
      const long double ph = 2.0L * kPi * static_cast<long double>(k * t % n) / static_cast<long double>(n);
      re += x[t] * std::cos(ph);
      im -= x[t] * std::sin(ph);
    }
    const double mag = static_cast<double>(re * re + im * im);
    if (mag > best_mag) {
      best_mag = mag;
      best_k = k;
    }
  }
  return static_cast<double>(best_k) * sampling_rate / static_cast<double>(n);
}

}  // namespace oracle
