#pragma once

// Independent reference computations used to check the library. None of
// these call into the code under test.

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// Triple-loop matrix product.
Eigen::MatrixXd naive_matmul(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Potential (microvolts per nA*m) at a surface electrode from a dipole in a
/// homogeneous sphere: a central finite difference, in long double, of the
/// Neumann Green's function series summed to `order` terms. Uses the plain
/// three-term Legendre recurrence and no derivative formulas.
double sphere_potential_fd(const Eigen::Vector3d& electrode, const Eigen::Vector3d& position,
                           const Eigen::Vector3d& moment, double radius, double conductivity, int order = 200);

/// Same finite difference applied to the closed-form Green's function
///   G = (2 / D - 2 + ln(2 / (1 - c t + D))) / (4 pi sigma R),
/// t = |r0| / R, c = cos(angle), D = sqrt(1 - 2 c t + t^2), which is the
/// generating-function sum of the series above.
double sphere_potential_closed_form(const Eigen::Vector3d& electrode, const Eigen::Vector3d& position,
                                    const Eigen::Vector3d& moment, double radius, double conductivity);

/// 3 p.e / (4 pi sigma R^2), in microvolts per nA*m, for a dipole at the
/// centre and a unit electrode direction e.
double central_dipole_potential(const Eigen::Vector3d& electrode, const Eigen::Vector3d& moment, double radius,
                                double conductivity);

/// Direct long-double evaluation of the continuous wavelet inner product
/// sum_n x[n] conj(psi_{sigma,tau}(t_n)) dt on the sample grid, with the
/// Morlet wavelet written out in cos/sin form.
std::complex<double> cwt_quadrature(std::span<const double> x, double omega0, double sigma, double tau,
                                    double sampling_rate);

/// Amplitude of the f-Hz component of x (single-frequency DFT, normalized so
/// that a unit sine spanning whole periods gives 1).
double tone_amplitude(std::span<const double> x, double freq_hz, double sampling_rate);

/// Peak of the magnitude spectrum: returns the frequency (Hz) of the largest
/// DFT bin in (0, fs/2).
double dominant_frequency(std::span<const double> x, double sampling_rate);

}  // namespace oracle
