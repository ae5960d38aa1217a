#include "scwt/inverse.hpp"

#include <cmath>
#include <string>

#include "scwt/error.hpp"

namespace scwt {

void InverseKernel::validate() const {
  if (!kernel.allFinite()) throw NumericError("inverse kernel has non-finite entries");
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
  if (standardized) {
    if (!resolution_diag || resolution_diag->size() != kernel.rows()) {
      throw ValidationError("standardized kernel requires a resolution diagonal per source");
    }
    if ((resolution_diag->array() <= 0.0).any()) throw ValidationError("resolution diagonal must be positive");
  }
}

Eigen::MatrixXd average_reference_operator(Eigen::Index m) {
  if (m < 2) throw ValidationError("average reference needs at least two channels");
  Eigen::MatrixXd h = Eigen::MatrixXd::Constant(m, m, -1.0 / static_cast<double>(m));
  h.diagonal().array() += 1.0;
  return h;
}

LeadField average_reference_lead_field(const LeadField& lead_field) {
  LeadField out = lead_field;
  out.gain.rowwise() -= lead_field.gain.colwise().mean();
  return out;
}

Eigen::MatrixXd symmetric_pseudo_inverse(const Eigen::MatrixXd& sym, double relative_cutoff) {
  if (sym.rows() != sym.cols()) throw ShapeError("pseudo-inverse input must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double largest = values.cwiseAbs().maxCoeff();
  const double cutoff = relative_cutoff * largest;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (std::abs(values(i)) > cutoff) inv(i) = 1.0 / values(i);
  }
  const Eigen::MatrixXd& vecs = eig.eigenvectors();
  return vecs * inv.asDiagonal() * vecs.transpose();
}

InverseKernel min_norm_kernel(const LeadField& lead_field, double lambda) {
  if (!std::isfinite(lambda)) throw ValidationError("lambda must be finite");
  if (lambda < 0.0) throw ValidationError("lambda must be >= 0");
  lead_field.validate();
  const Eigen::MatrixXd& a = lead_field.gain;
  Eigen::MatrixXd gram = a * a.transpose();
  if (lambda > 0.0) gram += lambda * average_reference_operator(a.rows());
  // Symmetrize against round-off before the eigensolver.
  gram = 0.5 * (gram + gram.transpose()).eval();
  InverseKernel k;
  k.kernel = a.transpose() * symmetric_pseudo_inverse(gram);
  k.lambda = lambda;
  k.standardized = false;
  return k;
}

InverseKernel sloreta_standardize(const InverseKernel& kernel, const LeadField& lead_field) {
  if (kernel.standardized) throw ValidationError("kernel is already standardized");
  if (kernel.kernel.cols() != lead_field.channels() || kernel.kernel.rows() != lead_field.sources()) {
    throw ShapeError("kernel and lead field dimensions disagree");
  }
  const Eigen::Index n = kernel.kernel.rows();
  Eigen::VectorXd diag(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    diag(j) = kernel.kernel.row(j).dot(lead_field.gain.col(j));
    if (!(diag(j) > 0.0)) {
      throw DegeneracyError(static_cast<std::size_t>(j),
                            "resolution diagonal is not positive at source " + std::to_string(j));
    }
  }
  InverseKernel out;
  out.kernel = diag.array().rsqrt().matrix().asDiagonal() * kernel.kernel;
  out.lambda = kernel.lambda;
  out.standardized = true;
  out.resolution_diag = std::move(diag);
  return out;
}

double regularization_parameter(const LeadField& lead_field, double snr) {
  if (!(snr > 0.0) || !std::isfinite(snr)) throw ValidationError("snr must be positive");
  lead_field.validate();
  // trace(A A^T) is the squared Frobenius norm of A.
  return lead_field.gain.squaredNorm() / (static_cast<double>(lead_field.channels()) * snr * snr);
}

SourceEstimate apply_inverse(const InverseKernel& kernel, const ScalpRecording& recording) {
  if (kernel.kernel.cols() != recording.data.rows()) {
    throw ShapeError("kernel expects " + std::to_string(kernel.kernel.cols()) + " channels, recording has " +
                     std::to_string(recording.data.rows()));
  }
  return {kernel.kernel * recording.data, recording.sampling_rate};
}

Eigen::Index peak_source(const Eigen::MatrixXd& currents) {
  Eigen::Index best = 0;
  currents.rowwise().squaredNorm().maxCoeff(&best);
  return best;
}

}  // namespace scwt
