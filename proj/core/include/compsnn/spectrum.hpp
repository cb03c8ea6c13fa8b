#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "compsnn/graph.hpp"

namespace compsnn {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
  [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
  [[nodiscard]] std::span<double> data() noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_{0};
  std::size_t cols_{0};
  std::vector<double> data_;
};

Matrix multiply(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
double frobenius_norm(const Matrix& a);

enum class LaplacianKind {
  normalized,     ///< I - D^-1/2 A D^-1/2; isolated nodes get an all-zero row
  combinatorial,  ///< D - A
};

Matrix laplacian(const TrajectoryGraph& graph, LaplacianKind kind = LaplacianKind::normalized);

/// Eigenpairs of a symmetric matrix: ascending eigenvalues, eigenvectors as
/// the orthonormal columns of `eigenvectors`. Each column is sign-fixed so
/// that its largest-magnitude entry (first one on ties) is positive.
struct Spectrum {
  std::vector<double> eigenvalues;
  Matrix eigenvectors;

  [[nodiscard]] std::size_t size() const noexcept { return eigenvalues.size(); }
};

/// Cyclic Jacobi eigensolver. Sweeps until the off-diagonal Frobenius norm
/// drops below 1e-12. Throws NotSymmetric (tolerance 1e-10) and
/// NoConvergence (more than 100 sweeps).
Spectrum eigendecompose(const Matrix& symmetric);

/// Graph Fourier transform, U^T s.
std::vector<double> gft(const Spectrum& spectrum, std::span<const double> signal);
/// Inverse transform, U s_hat.
std::vector<double> igft(const Spectrum& spectrum, std::span<const double> coefficients);

/// Binary sidecar: "CSNNSPEC", u32 version, u32 |N|, then little-endian f64
/// eigenvalues followed by the eigenvectors in column-major order.
void save_spectrum(const Spectrum& spectrum, const std::filesystem::path& path);
Spectrum load_spectrum(const std::filesystem::path& path);

}  // namespace compsnn
