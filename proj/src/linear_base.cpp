#include "revib/linear_base.hpp"

#include "revib/errors.hpp"

namespace revib::linear {

LinearWeights fit(const Tensor& obs) {
  if (obs.rank() != 2 || obs.dim(1) != 2) {
    throw ShapeError("linear fit expects a [t_h, 2] trajectory, got " + nn::shape_str(obs.shape()));
  }
  const std::size_t n = obs.dim(0);
  if (n < 2) throw ContractError("linear fit needs at least 2 observed steps");
  // A^T A = [[n, St], [St, Stt]], A^T X = [[Sx], [Stx]] per channel.
  double st = 0.0, stt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i + 1);
    st += t;
    stt += t * t;
  }
  const double nn_ = static_cast<double>(n);
  const double det = nn_ * stt - st * st;
  LinearWeights w;
  for (std::size_t c = 0; c < 2; ++c) {
    double sx = 0.0, stx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i + 1);
      sx += obs(i, c);
      stx += t * obs(i, c);
    }
    w.w[0][c] = (stt * sx - st * stx) / det;
    w.w[1][c] = (nn_ * stx - st * sx) / det;
  }
  return w;
}

Tensor evaluate(const LinearWeights& w, int first_step, int count) {
  Tensor out({static_cast<std::size_t>(count), 2});
  for (int i = 0; i < count; ++i) {
    const double t = static_cast<double>(first_step + i);
    for (std::size_t c = 0; c < 2; ++c)
      out(static_cast<std::size_t>(i), c) = w.w[0][c] + t * w.w[1][c];
  }
  return out;
}

Tensor extrapolate(const LinearWeights& w, int t_h, int t_f) {
  return evaluate(w, t_h + 1, t_f);
}

LinearPair make_pair(const LinearWeights& w, int t_h, int t_f) {
  return {evaluate(w, 1, t_h), extrapolate(w, t_h, t_f), {0.0, 0.0}};
}

LinearPair continuity_translate(const LinearPair& pair, const Tensor& obs) {
  const std::size_t t_h = pair.fit.rows();
  if (obs.rows() != t_h || obs.cols() != 2) {
    throw ShapeError("continuity_translate: observation " + nn::shape_str(obs.shape()) +
                     " does not match fit " + nn::shape_str(pair.fit.shape()));
  }
  LinearPair out = pair;
  for (std::size_t c = 0; c < 2; ++c) {
    const double shift = obs(t_h - 1, c) - pair.fit(t_h - 1, c);
    out.translation[c] = pair.translation[c] + shift;
    for (std::size_t i = 0; i < out.fit.rows(); ++i) out.fit(i, c) += shift;
    for (std::size_t i = 0; i < out.base.rows(); ++i) out.base(i, c) += shift;
    out.fit(t_h - 1, c) = obs(t_h - 1, c);
  }
  return out;
}

LinearPair linear_base(const Tensor& obs, int t_f) {
  const int t_h = static_cast<int>(obs.rows());
  return continuity_translate(make_pair(fit(obs), t_h, t_f), obs);
}

}  // namespace revib::linear
