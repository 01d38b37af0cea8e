#include "revib/spectrum.hpp"

#include <cmath>
#include <numbers>

#include "revib/errors.hpp"

namespace revib::spectrum {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(what) + ": expected a rank-2 tensor, got " +
                     nn::shape_str(t.shape()));
  }
}

Tensor transpose(const Tensor& a) {
  Tensor t({a.dim(1), a.dim(0)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < a.dim(1); ++j) t(j, i) = a(i, j);
  return t;
}

}  // namespace

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::kHaar:
      return "haar";
    case TransformKind::kDft:
      return "dft";
    case TransformKind::kIdentity:
      return "identity";
  }
  return "?";
}

TransformKind parse_transform(const std::string& name) {
  if (name == "haar") return TransformKind::kHaar;
  if (name == "dft") return TransformKind::kDft;
  if (name == "identity" || name == "none") return TransformKind::kIdentity;
  throw ConfigError("unknown transform kind: " + name);
}

SpectrumShape spectrum_shape(TransformKind kind, std::size_t t, std::size_t m) {
  switch (kind) {
    case TransformKind::kHaar:
      if (t % 2 != 0) {
        throw ShapeError("haar transform needs an even number of steps, got " +
                         std::to_string(t) + "; pad or re-window the trajectory");
      }
      return {t / 2, 2 * m};
    case TransformKind::kDft:
      return {t, 2 * m};
    case TransformKind::kIdentity:
      return {t, m};
  }
  return {};
}

SpectrumShape trajectory_shape(TransformKind kind, std::size_t rows, std::size_t cols) {
  switch (kind) {
    case TransformKind::kHaar:
    case TransformKind::kDft:
      if (cols % 2 != 0) {
        throw ShapeError(to_string(kind) + " spectrum needs an even column count, got " +
                         std::to_string(cols));
      }
      return {kind == TransformKind::kHaar ? 2 * rows : rows, cols / 2};
    case TransformKind::kIdentity:
      return {rows, cols};
  }
  return {};
}

TrajectorySpectrum forward(const Tensor& x, TransformKind kind) {
  require_matrix(x, "spectrum forward");
  const std::size_t t = x.dim(0), m = x.dim(1);
  const SpectrumShape s = spectrum_shape(kind, t, m);
  Tensor out({s.rows, s.cols});
  switch (kind) {
    case TransformKind::kHaar:
      for (std::size_t k = 0; k < s.rows; ++k)
        for (std::size_t c = 0; c < m; ++c) {
          const double a = x(2 * k, c), b = x(2 * k + 1, c);
          out(k, 2 * c) = (a + b) * kInvSqrt2;
          out(k, 2 * c + 1) = (a - b) * kInvSqrt2;
        }
      break;
    case TransformKind::kDft: {
      const double norm = 1.0 / std::sqrt(static_cast<double>(t));
      for (std::size_t k = 0; k < t; ++k)
        for (std::size_t c = 0; c < m; ++c) {
          double re = 0.0, im = 0.0;
          for (std::size_t n = 0; n < t; ++n) {
            const double ang = 2.0 * std::numbers::pi * static_cast<double>(k * n % t) /
                               static_cast<double>(t);
            re += x(n, c) * std::cos(ang);
            im -= x(n, c) * std::sin(ang);
          }
          out(k, 2 * c) = re * norm;
          out(k, 2 * c + 1) = im * norm;
        }
      break;
    }
    case TransformKind::kIdentity:
      out = x;
      break;
  }
  return {std::move(out), kind};
}

Tensor inverse(const TrajectorySpectrum& spectrum) {
  const Tensor& s = spectrum.coeffs;
  require_matrix(s, "spectrum inverse");
  const SpectrumShape shape = trajectory_shape(spectrum.kind, s.dim(0), s.dim(1));
  const std::size_t t = shape.rows, m = shape.cols;
  Tensor x({t, m});
  switch (spectrum.kind) {
    case TransformKind::kHaar:
      for (std::size_t k = 0; k < s.dim(0); ++k)
        for (std::size_t c = 0; c < m; ++c) {
          const double a = s(k, 2 * c), d = s(k, 2 * c + 1);
          x(2 * k, c) = (a + d) * kInvSqrt2;
          x(2 * k + 1, c) = (a - d) * kInvSqrt2;
        }
      break;
    case TransformKind::kDft: {
      const double norm = 1.0 / std::sqrt(static_cast<double>(t));
      for (std::size_t n = 0; n < t; ++n)
        for (std::size_t c = 0; c < m; ++c) {
          double acc = 0.0;
          for (std::size_t k = 0; k < t; ++k) {
            const double ang = 2.0 * std::numbers::pi * static_cast<double>(k * n % t) /
                               static_cast<double>(t);
            acc += s(k, 2 * c) * std::cos(ang) - s(k, 2 * c + 1) * std::sin(ang);
          }
          x(n, c) = acc * norm;
        }
      break;
    }
    case TransformKind::kIdentity:
      x = s;
      break;
  }
  return x;
}

Tensor forward_operator(TransformKind kind, std::size_t t, std::size_t m) {
  const SpectrumShape s = spectrum_shape(kind, t, m);
  Tensor op({s.rows * s.cols, t * m});
  Tensor basis({t, m});
  for (std::size_t i = 0; i < t * m; ++i) {
    basis.fill(0.0);
    basis[i] = 1.0;
    const Tensor col = forward(basis, kind).coeffs;
    for (std::size_t r = 0; r < col.numel(); ++r) op(r, i) = col[r];
  }
  return op;
}

Tensor inverse_operator(TransformKind kind, std::size_t rows, std::size_t cols) {
  const SpectrumShape x = trajectory_shape(kind, rows, cols);
  Tensor op({x.rows * x.cols, rows * cols});
  TrajectorySpectrum basis{Tensor({rows, cols}), kind};
  for (std::size_t i = 0; i < rows * cols; ++i) {
    basis.coeffs.fill(0.0);
    basis.coeffs[i] = 1.0;
    const Tensor col = inverse(basis);
    for (std::size_t r = 0; r < col.numel(); ++r) op(r, i) = col[r];
  }
  return op;
}

nn::Var forward(const nn::Var& trajectory, TransformKind kind) {
  const Tensor& x = trajectory.value();
  require_matrix(x, "spectrum forward");
  const SpectrumShape s = spectrum_shape(kind, x.dim(0), x.dim(1));
  const nn::Var op = nn::Var::constant(transpose(forward_operator(kind, x.dim(0), x.dim(1))));
  return nn::reshape(nn::matmul(nn::reshape(trajectory, {1, x.numel()}), op), {s.rows, s.cols});
}

nn::Var inverse(const nn::Var& spectrum, TransformKind kind) {
  const Tensor& s = spectrum.value();
  require_matrix(s, "spectrum inverse");
  const SpectrumShape x = trajectory_shape(kind, s.dim(0), s.dim(1));
  const nn::Var op = nn::Var::constant(transpose(inverse_operator(kind, s.dim(0), s.dim(1))));
  return nn::reshape(nn::matmul(nn::reshape(spectrum, {1, s.numel()}), op), {x.rows, x.cols});
}

}  // namespace revib::spectrum
