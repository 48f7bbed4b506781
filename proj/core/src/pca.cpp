#include "grasp/pca.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace grasp {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void fix_sign(VectorXd& v) {
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v[arg] < 0.0) v = -v;
}

/// Completes `basis` with unit vectors orthogonal to every existing entry.
void complete_basis(std::vector<VectorXd>& basis, Eigen::Index dim, std::size_t wanted) {
  for (Eigen::Index e = 0; basis.size() < wanted && e < dim; ++e) {
    VectorXd v = VectorXd::Unit(dim, e);
    for (const VectorXd& b : basis) v -= b.dot(v) * b;
    for (const VectorXd& b : basis) v -= b.dot(v) * b;
    const double norm = v.norm();
    if (norm > 1e-6) basis.push_back(v / norm);
  }
}

}  // namespace

PcaModel pca_fit(std::span<const Mask> frames) {
  if (frames.size() < kPcaComponents)
    throw std::invalid_argument("PCA needs at least " + std::to_string(kPcaComponents) + " frames");
  const int width = frames.front().width();
  const int height = frames.front().height();
  const auto dim = static_cast<Eigen::Index>(frames.front().size());
  if (dim < static_cast<Eigen::Index>(kPcaComponents))
    throw std::invalid_argument("mask has fewer cells than PCA components");
  const auto count = static_cast<Eigen::Index>(frames.size());

  MatrixXd x(count, dim);
  for (Eigen::Index r = 0; r < count; ++r) {
    const Mask& m = frames[static_cast<std::size_t>(r)];
    if (m.width() != width || m.height() != height) throw std::invalid_argument("PCA frames differ in size");
    const auto& cells = m.cells();
    for (Eigen::Index c = 0; c < dim; ++c) x(r, c) = cells[static_cast<std::size_t>(c)];
  }
  const VectorXd mean = x.colwise().mean();
  x.rowwise() -= mean.transpose();
  const double denom = count > 1 ? static_cast<double>(count - 1) : 1.0;

  std::vector<VectorXd> basis;
  std::vector<double> values;
  const double tol = 1e-10;
  if (count < dim) {
    // Snapshot method: eigenvectors of X X^T map to covariance eigenvectors via X^T.
    const MatrixXd gram = (x * x.transpose()) / denom;
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(gram);
    for (Eigen::Index k = count - 1; k >= 0 && basis.size() < kPcaComponents; --k) {
      const double lambda = solver.eigenvalues()[k];
      if (lambda <= tol) break;
      VectorXd u = x.transpose() * solver.eigenvectors().col(k);
      const double norm = u.norm();
      if (norm <= tol) break;
      basis.push_back(u / norm);
      values.push_back(lambda);
    }
  } else {
    const MatrixXd cov = (x.transpose() * x) / denom;
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(cov);
    for (Eigen::Index k = dim - 1; k >= 0 && basis.size() < kPcaComponents; --k) {
      const double lambda = solver.eigenvalues()[k];
      if (lambda <= tol) break;
      basis.push_back(solver.eigenvectors().col(k));
      values.push_back(lambda);
    }
  }
  // Re-orthonormalize (the snapshot mapping loses a little orthogonality) and pad
  // zero-variance directions with an arbitrary orthonormal completion.
  for (std::size_t i = 0; i < basis.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) basis[i] -= basis[j].dot(basis[i]) * basis[j];
    basis[i].normalize();
  }
  values.resize(kPcaComponents, 0.0);
  complete_basis(basis, dim, kPcaComponents);

  PcaModel model;
  model.width = width;
  model.height = height;
  model.mean.assign(mean.data(), mean.data() + dim);
  for (std::size_t i = 0; i < kPcaComponents; ++i) {
    fix_sign(basis[i]);
    model.components[i].assign(basis[i].data(), basis[i].data() + dim);
    model.eigenvalues[i] = values[i];
  }
  model.fitted = true;
  return model;
}

std::array<double, kPcaComponents> pca_project(const PcaModel& model, const Mask& mask) {
  if (!model.fitted) throw std::invalid_argument("PCA model is not fitted");
  if (mask.width() != model.width || mask.height() != model.height)
    throw std::invalid_argument("mask size does not match PCA model");
  const auto& cells = mask.cells();
  std::array<double, kPcaComponents> out{};
  for (std::size_t k = 0; k < kPcaComponents; ++k) {
    const auto& comp = model.components[k];
    double acc = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i) acc += (cells[i] - model.mean[i]) * comp[i];
    out[k] = acc;
  }
  return out;
}

}  // namespace grasp
