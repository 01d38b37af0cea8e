#pragma once

#include <string>

#include "revib/autodiff.hpp"

namespace revib::spectrum {

using nn::Tensor;

enum class TransformKind { kHaar, kDft, kIdentity };

std::string to_string(TransformKind kind);
TransformKind parse_transform(const std::string& name);

struct SpectrumShape {
  std::size_t rows = 0;  // T
  std::size_t cols = 0;  // M
};

// Shape of the spectrum of a t x m trajectory:
//   haar      t/2 x 2m   (single-level, pairwise; t must be even)
//   dft       t   x 2m   (real/imag interleaved per channel)
//   identity  t   x m
SpectrumShape spectrum_shape(TransformKind kind, std::size_t t, std::size_t m);
// Trajectory shape recovered from a spectrum shape (inverse of the above).
SpectrumShape trajectory_shape(TransformKind kind, std::size_t rows, std::size_t cols);

struct TrajectorySpectrum {
  Tensor coeffs;
  TransformKind kind = TransformKind::kHaar;
};

// Haar rows hold (a_k, d_k) per channel with a_k = (x_2k + x_2k+1)/sqrt2 and
// d_k = (x_2k - x_2k+1)/sqrt2. The DFT is the unitary one (1/sqrt(t)), so
// both transforms preserve energy.
TrajectorySpectrum forward(const Tensor& trajectory, TransformKind kind);
Tensor inverse(const TrajectorySpectrum& spectrum);

// Matrix forms acting on row-major flattened tensors:
// vec(S) = forward_operator * vec(X), vec(X) = inverse_operator * vec(S).
Tensor forward_operator(TransformKind kind, std::size_t t, std::size_t m);
Tensor inverse_operator(TransformKind kind, std::size_t rows, std::size_t cols);

// Differentiable versions used inside the networks.
nn::Var forward(const nn::Var& trajectory, TransformKind kind);
nn::Var inverse(const nn::Var& spectrum, TransformKind kind);

}  // namespace revib::spectrum
