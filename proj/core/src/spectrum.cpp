#include "compsnn/spectrum.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>

#include "compsnn/error.hpp"

namespace compsnn {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw Error(ErrorCode::DimensionMismatch, "matrix product shape mismatch");
  Matrix out(a.rows(), b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  }
  return out;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

Matrix laplacian(const TrajectoryGraph& graph, LaplacianKind kind) {
  const std::size_t n = graph.node_count;
  Matrix out(n, n, 0.0);
  std::vector<double> degree(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) degree[i] = static_cast<double>(graph.degree(static_cast<NodeId>(i)));

  if (kind == LaplacianKind::combinatorial) {
    for (std::size_t i = 0; i < n; ++i) {
      out(i, i) = degree[i];
      for (std::size_t j = 0; j < n; ++j) {
        if (graph.adjacency[i * n + j] != 0) out(i, j) = -1.0;
      }
    }
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (degree[i] == 0.0) continue;
    out(i, i) = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (graph.adjacency[i * n + j] != 0) out(i, j) = -1.0 / std::sqrt(degree[i] * degree[j]);
    }
  }
  return out;
}

namespace {

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (i != j) s += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(s);
}

}  // namespace

Spectrum eigendecompose(const Matrix& symmetric) {
  const std::size_t n = symmetric.rows();
  if (symmetric.cols() != n) throw Error(ErrorCode::NotSymmetric, "matrix is not square");
  double scale = 1.0;
  for (double v : symmetric.data()) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(symmetric(i, j) - symmetric(j, i)) > 1e-10 * scale) {
        throw Error(ErrorCode::NotSymmetric, "matrix is not symmetric");
      }
    }
  }

  Matrix a = symmetric;
  Matrix v = Matrix::identity(n);
  constexpr double kTolerance = 1e-12;
  constexpr int kMaxSweeps = 100;

  int sweep = 0;
  while (off_diagonal_norm(a) >= kTolerance) {
    if (++sweep > kMaxSweeps) throw Error(ErrorCode::NoConvergence, "Jacobi did not converge in 100 sweeps");
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

  Spectrum out;
  out.eigenvalues.resize(n);
  out.eigenvectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    out.eigenvalues[k] = a(src, src);
    std::size_t arg = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (std::abs(v(i, src)) > std::abs(v(arg, src))) arg = i;
    }
    const double sign = v(arg, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, k) = sign * v(i, src);
  }
  return out;
}

std::vector<double> gft(const Spectrum& spectrum, std::span<const double> signal) {
  const std::size_t n = spectrum.size();
  if (signal.size() != n) throw Error(ErrorCode::DimensionMismatch, "signal length differs from node count");
  std::vector<double> out(n, 0.0);
  const Matrix& u = spectrum.eigenvectors;
  for (std::size_t i = 0; i < n; ++i) {
    const double si = signal[i];
    if (si == 0.0) continue;
    for (std::size_t k = 0; k < n; ++k) out[k] += u(i, k) * si;
  }
  return out;
}

std::vector<double> igft(const Spectrum& spectrum, std::span<const double> coefficients) {
  const std::size_t n = spectrum.size();
  if (coefficients.size() != n) throw Error(ErrorCode::DimensionMismatch, "coefficient count differs from node count");
  std::vector<double> out(n, 0.0);
  const Matrix& u = spectrum.eigenvectors;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += u(i, k) * coefficients[k];
    out[i] = acc;
  }
  return out;
}

namespace {

constexpr std::array<char, 8> kSpectrumMagic = {'C', 'S', 'N', 'N', 'S', 'P', 'E', 'C'};
constexpr std::uint32_t kSpectrumVersion = 1;

template <typename U>
void put_le(std::ostream& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.put(static_cast<char>((value >> (8 * i)) & 0xff));
}

template <typename U>
U get_le(std::istream& in) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    const int byte = in.get();
    if (byte == std::char_traits<char>::eof()) throw Error(ErrorCode::ParseError, "truncated spectrum file");
    value |= static_cast<U>(static_cast<unsigned char>(byte)) << (8 * i);
  }
  return value;
}

}  // namespace

void save_spectrum(const Spectrum& spectrum, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  const std::size_t n = spectrum.size();
  out.write(kSpectrumMagic.data(), kSpectrumMagic.size());
  put_le<std::uint32_t>(out, kSpectrumVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(n));
  for (double v : spectrum.eigenvalues) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  for (std::size_t col = 0; col < n; ++col) {
    for (std::size_t row = 0; row < n; ++row) {
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(spectrum.eigenvectors(row, col)));
    }
  }
}

Spectrum load_spectrum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kSpectrumMagic) throw Error(ErrorCode::ParseError, path.string() + " is not a spectrum file");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kSpectrumVersion) throw Error(ErrorCode::ParseError, "unsupported spectrum version");
  const auto n = static_cast<std::size_t>(get_le<std::uint32_t>(in));
  Spectrum out;
  out.eigenvalues.resize(n);
  for (double& v : out.eigenvalues) v = std::bit_cast<double>(get_le<std::uint64_t>(in));
  out.eigenvectors = Matrix(n, n);
  for (std::size_t col = 0; col < n; ++col) {
    for (std::size_t row = 0; row < n; ++row) {
      out.eigenvectors(row, col) = std::bit_cast<double>(get_le<std::uint64_t>(in));
    }
  }
  return out;
}

}  // namespace compsnn
