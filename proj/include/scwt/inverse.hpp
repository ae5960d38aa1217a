#pragma once

#include <optional>

#include <Eigen/Dense>

#include "scwt/forward.hpp"

namespace scwt {

/// Sources x channels operator mapping scalp potentials to source currents.
struct InverseKernel {
  Eigen::MatrixXd kernel;
  double lambda = 0.0;
  bool standardized = false;
  std::optional<Eigen::VectorXd> resolution_diag;  // diag(kernel * A) before standardization

  void validate() const;
};

struct SourceEstimate {
  Eigen::MatrixXd currents;  // sources x samples
  double sampling_rate = 0.0;
};

inline constexpr double kPseudoInverseCutoff = 1e-10;
inline constexpr double kDefaultSnr = 3.0;

/// Centering matrix H = I - (1/m) 1 1^T.
Eigen::MatrixXd average_reference_operator(Eigen::Index m);

/// H * A: the lead field expressed against the average reference.
LeadField average_reference_lead_field(const LeadField& lead_field);

/// Moore-Penrose pseudo-inverse of a symmetric matrix via its
/// eigendecomposition. Eigenvalues with magnitude at or below
/// `relative_cutoff` times the largest magnitude are treated as zero.
Eigen::MatrixXd symmetric_pseudo_inverse(const Eigen::MatrixXd& sym, double relative_cutoff = kPseudoInverseCutoff);

/// kernel = A^T [A A^T + lambda H]^+.
///
/// For average-referenced data (H A = A and H V = V), kernel * V minimizes
/// ||V - A S||^2 + lambda ||S||^2. For lambda = 0 it is the minimum-norm
/// least-squares solution for any A.
InverseKernel min_norm_kernel(const LeadField& lead_field, double lambda);

/// Divides row j of the kernel by sqrt((kernel * A)_jj). Throws
/// DegeneracyError naming the first source whose diagonal entry is not
/// strictly positive.
InverseKernel sloreta_standardize(const InverseKernel& kernel, const LeadField& lead_field);

/// lambda = trace(A A^T) / (M * snr^2).
double regularization_parameter(const LeadField& lead_field, double snr = kDefaultSnr);

SourceEstimate apply_inverse(const InverseKernel& kernel, const ScalpRecording& recording);

/// Index of the source with the largest summed squared estimate.
Eigen::Index peak_source(const Eigen::MatrixXd& currents);

}  // namespace scwt
