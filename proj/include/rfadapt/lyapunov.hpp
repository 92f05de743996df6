#pragma once

#include "rfadapt/core.hpp"

#include <Eigen/Eigenvalues>

#include <string>

namespace rfadapt {

/// Largest real part over the spectrum of A.
[[nodiscard]] inline double spectral_abscissa(const Mat& A) {
  Eigen::EigenSolver<Mat> es(A, false);
  if (es.info() != Eigen::Success) throw SolverError("eigenvalue computation failed");
  return es.eigenvalues().real().maxCoeff();
}

[[nodiscard]] inline double lyapunov_residual(const Mat& A, const Mat& P) {
  return (A.transpose() * P + P * A + Mat::Identity(A.rows(), A.cols())).norm();
}

/// Solves A^T P + P A = -I for symmetric P as a dense linear system in the
/// n(n+1)/2 free entries of P.
[[nodiscard]] inline Mat solve_lyapunov(const Mat& A, double tolerance = 1e-10) {
  if (A.rows() != A.cols() || A.rows() == 0) throw ArgumentError("solve_lyapunov: A must be square and nonempty");
  if (!A.allFinite()) throw ArgumentError("solve_lyapunov: A has non-finite entries");
  const double abscissa = spectral_abscissa(A);
  if (!(abscissa < 0.0)) {
    throw SolverError("solve_lyapunov: A is not Hurwitz (max real eigenvalue " + std::to_string(abscissa) + ")");
  }
  const int n = static_cast<int>(A.rows());
  const int m = n * (n + 1) / 2;
  auto index = [n](int i, int j) {
    if (i > j) std::swap(i, j);
    return i * n - i * (i - 1) / 2 + (j - i);
  };
  Mat L = Mat::Zero(m, m);
  Vec rhs = Vec::Zero(m);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const int row = index(i, j);
      for (int k = 0; k < n; ++k) {
        L(row, index(k, j)) += A(k, i);  // (A^T P)_ij
        L(row, index(i, k)) += A(k, j);  // (P A)_ij
      }
      rhs(row) = (i == j) ? -1.0 : 0.0;
    }
  }
  Eigen::FullPivLU<Mat> lu(L);
  if (!lu.isInvertible()) throw SolverError("solve_lyapunov: singular Lyapunov operator");
  Vec p = lu.solve(rhs);
  p += lu.solve(rhs - L * p);  // one refinement step

  Mat P(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) P(i, j) = p(index(i, j));
  const double residual = lyapunov_residual(A, P);
  if (!(residual <= tolerance)) {
    throw SolverError("solve_lyapunov: residual " + std::to_string(residual) + " exceeds tolerance");
  }
  return P;
}

/// Quadratic certificate Q(e) = 1/2 e^T P e with class-K-infinity sandwich
/// mu1(r) = 1/2 lambda_min r^2, mu2(r) = 1/2 lambda_max r^2 and decrease rate
/// rho(r) = 1/2 r^2 (since dQ/dt = -|e|^2 / 2 for the nominal error system).
class LyapunovCertificate {
 public:
  explicit LyapunovCertificate(Mat P) : P_(std::move(P)) {
    if (P_.rows() != P_.cols()) throw ArgumentError("LyapunovCertificate: P must be square");
    Eigen::SelfAdjointEigenSolver<Mat> eig(P_, Eigen::EigenvaluesOnly);
    lambda_min_ = eig.eigenvalues().minCoeff();
    lambda_max_ = eig.eigenvalues().maxCoeff();
    if (!(lambda_min_ > 0.0)) throw SolverError("LyapunovCertificate: P is not positive definite");
  }

  static LyapunovCertificate for_matrix(const Mat& A) { return LyapunovCertificate(solve_lyapunov(A)); }

  [[nodiscard]] const Mat& P() const { return P_; }
  [[nodiscard]] double lambda_min() const { return lambda_min_; }
  [[nodiscard]] double lambda_max() const { return lambda_max_; }

  [[nodiscard]] double value(const Vec& e) const { return 0.5 * e.dot(P_ * e); }
  [[nodiscard]] Vec gradient(const Vec& e) const { return P_ * e; }

  [[nodiscard]] double mu1(double r) const { return 0.5 * lambda_min_ * r * r; }
  [[nodiscard]] double mu2(double r) const { return 0.5 * lambda_max_ * r * r; }
  [[nodiscard]] static double rho(double r) { return 0.5 * r * r; }
  [[nodiscard]] double mu1_inverse(double q) const { return std::sqrt(2.0 * q / lambda_min_); }

 private:
  Mat P_;
  double lambda_min_ = 0.0;
  double lambda_max_ = 0.0;
};

}  // namespace rfadapt
