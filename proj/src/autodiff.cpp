#include "revib/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "revib/errors.hpp"

namespace revib::nn {
namespace {

thread_local bool g_grad_enabled = true;

using NodePtr = std::shared_ptr<Node>;

Var make_result(Tensor value, std::vector<NodePtr> parents,
                std::function<void(Node&)> fn) {
  for (const auto& p : parents) {
    if (g_grad_enabled && p->released) throw StateError("op input belongs to a consumed graph");
  }
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (g_grad_enabled &&
      std::any_of(parents.begin(), parents.end(),
                  [](const NodePtr& p) { return p->requires_grad; })) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward_fn = std::move(fn);
  }
  return Var(std::move(node));
}

void require_defined(const Var& v, const char* op) {
  if (!v.defined()) throw StateError(std::string(op) + ": undefined input");
}

void require_2d(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected rank-2 tensor, got " + shape_str(t.shape()));
  }
}

}  // namespace

Tensor& Node::grad_buffer() {
  if (grad.shape() != value.shape()) grad = Tensor(value.shape());
  return grad;
}

Var Var::constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var Var::leaf(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

void Var::zero_grad() {
  if (node_) node_->grad = Tensor(node_->value.shape());
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

void backward(const Var& loss) {
  if (!loss.defined()) throw StateError("backward: no recorded forward pass");
  const NodePtr& root = loss.node();
  if (root->released) throw StateError("backward: graph was already consumed");
  if (root->value.numel() != 1) {
    throw ShapeError("backward: loss must be a scalar, got " + shape_str(root->value.shape()));
  }
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && node->grad.numel() == node->value.numel()) node->backward_fn(*node);
  }
  for (Node* node : order) {
    if (node->backward_fn) {
      node->backward_fn = nullptr;
      node->parents.clear();
      node->grad = Tensor();
      node->released = true;
    }
  }
}

Var matmul(const Var& x, const Var& w) {
  require_defined(x, "matmul");
  require_defined(w, "matmul");
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  require_2d(wv, "matmul weight");
  const std::size_t k = wv.dim(0), m = wv.dim(1);
  if (xv.cols() != k) {
    throw ShapeError("matmul: input " + shape_str(xv.shape()) + " incompatible with weight " +
                     shape_str(wv.shape()));
  }
  const std::size_t r = xv.rows();
  Shape out_shape = xv.shape();
  out_shape.back() = m;
  Tensor out(out_shape);
  const double* xp = xv.data().data();
  const double* wp = wv.data().data();
  double* op = out.data().data();
  for (std::size_t i = 0; i < r; ++i) {
    double* orow = op + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double a = xp[i * k + p];
      const double* wrow = wp + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += a * wrow[j];
    }
  }
  return make_result(std::move(out), {x.node(), w.node()}, [r, k, m](Node& self) {
    const double* g = self.grad.data().data();
    Node& xn = *self.parents[0];
    Node& wn = *self.parents[1];
    if (xn.requires_grad) {
      double* gx = xn.grad_buffer().data().data();
      const double* wp = wn.value.data().data();
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double* wrow = wp + p * m;
          const double* grow = g + i * m;
          double acc = 0.0;
          for (std::size_t j = 0; j < m; ++j) acc += grow[j] * wrow[j];
          gx[i * k + p] += acc;
        }
      }
    }
    if (wn.requires_grad) {
      double* gw = wn.grad_buffer().data().data();
      const double* xp = xn.value.data().data();
      for (std::size_t i = 0; i < r; ++i) {
        const double* grow = g + i * m;
        for (std::size_t p = 0; p < k; ++p) {
          const double a = xp[i * k + p];
          double* gwrow = gw + p * m;
          for (std::size_t j = 0; j < m; ++j) gwrow[j] += a * grow[j];
        }
      }
    }
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  require_defined(a, "matmul_nt");
  require_defined(b, "matmul_nt");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_2d(av, "matmul_nt");
  require_2d(bv, "matmul_nt");
  if (av.dim(1) != bv.dim(1)) {
    throw ShapeError("matmul_nt: " + shape_str(av.shape()) + " vs " + shape_str(bv.shape()));
  }
  const std::size_t r = av.dim(0), m = bv.dim(0), k = av.dim(1);
  Tensor out({r, m});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += av[i * k + p] * bv[j * k + p];
      out[i * m + j] = acc;
    }
  }
  return make_result(std::move(out), {a.node(), b.node()}, [r, m, k](Node& self) {
    const Tensor& g = self.grad;
    Node& an = *self.parents[0];
    Node& bn = *self.parents[1];
    if (an.requires_grad) {
      Tensor& ga = an.grad_buffer();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < m; ++j) {
          const double gij = g[i * m + j];
          for (std::size_t p = 0; p < k; ++p) ga[i * k + p] += gij * bn.value[j * k + p];
        }
    }
    if (bn.requires_grad) {
      Tensor& gb = bn.grad_buffer();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < m; ++j) {
          const double gij = g[i * m + j];
          for (std::size_t p = 0; p < k; ++p) gb[j * k + p] += gij * an.value[i * k + p];
        }
    }
  });
}

Var add(const Var& a, const Var& b) {
  require_defined(a, "add");
  require_defined(b, "add");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.shape() == bv.shape()) {
    return make_result(av + bv, {a.node(), b.node()}, [](Node& self) {
      for (int i = 0; i < 2; ++i)
        if (self.parents[i]->requires_grad) self.parents[i]->grad_buffer() += self.grad;
    });
  }
  if (bv.rank() == 1 && bv.numel() == av.cols()) {
    Tensor out = av;
    const std::size_t c = av.cols();
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += bv[i % c];
    return make_result(std::move(out), {a.node(), b.node()}, [c](Node& self) {
      if (self.parents[0]->requires_grad) self.parents[0]->grad_buffer() += self.grad;
      if (self.parents[1]->requires_grad) {
        Tensor& gb = self.parents[1]->grad_buffer();
        for (std::size_t i = 0; i < self.grad.numel(); ++i) gb[i % c] += self.grad[i];
      }
    });
  }
  throw ShapeError("add: " + shape_str(av.shape()) + " vs " + shape_str(bv.shape()));
}

Var sub(const Var& a, const Var& b) {
  require_defined(a, "sub");
  require_defined(b, "sub");
  if (a.shape() != b.shape()) {
    throw ShapeError("sub: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  return make_result(a.value() - b.value(), {a.node(), b.node()}, [](Node& self) {
    if (self.parents[0]->requires_grad) self.parents[0]->grad_buffer() += self.grad;
    if (self.parents[1]->requires_grad) self.parents[1]->grad_buffer() -= self.grad;
  });
}

Var mul(const Var& a, const Var& b) {
  require_defined(a, "mul");
  require_defined(b, "mul");
  if (a.shape() != b.shape()) {
    throw ShapeError("mul: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= b.value()[i];
  return make_result(std::move(out), {a.node(), b.node()}, [](Node& self) {
    Node& an = *self.parents[0];
    Node& bn = *self.parents[1];
    if (an.requires_grad) {
      Tensor& ga = an.grad_buffer();
      for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += self.grad[i] * bn.value[i];
    }
    if (bn.requires_grad) {
      Tensor& gb = bn.grad_buffer();
      for (std::size_t i = 0; i < gb.numel(); ++i) gb[i] += self.grad[i] * an.value[i];
    }
  });
}

Var scale(const Var& a, double s) {
  require_defined(a, "scale");
  return make_result(a.value() * s, {a.node()}, [s](Node& self) {
    Tensor& ga = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += s * self.grad[i];
  });
}

Var add_n(const std::vector<Var>& terms) {
  if (terms.empty()) throw ShapeError("add_n: no terms");
  Tensor out = terms.front().value();
  std::vector<NodePtr> parents{terms.front().node()};
  for (std::size_t i = 1; i < terms.size(); ++i) {
    out += terms[i].value();
    parents.push_back(terms[i].node());
  }
  return make_result(std::move(out), std::move(parents), [](Node& self) {
    for (auto& p : self.parents)
      if (p->requires_grad) p->grad_buffer() += self.grad;
  });
}

Var tanh(const Var& x) {
  require_defined(x, "tanh");
  Tensor out = x.value();
  for (double& v : out.storage()) v = std::tanh(v);
  return make_result(std::move(out), {x.node()}, [](Node& self) {
    Tensor& gx = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < gx.numel(); ++i) {
      const double y = self.value[i];
      gx[i] += self.grad[i] * (1.0 - y * y);
    }
  });
}

Var relu(const Var& x) {
  require_defined(x, "relu");
  Tensor out = x.value();
  for (double& v : out.storage()) v = v > 0.0 ? v : 0.0;
  return make_result(std::move(out), {x.node()}, [](Node& self) {
    Tensor& gx = self.parents[0]->grad_buffer();
    const Tensor& xv = self.parents[0]->value;
    for (std::size_t i = 0; i < gx.numel(); ++i)
      if (xv[i] > 0.0) gx[i] += self.grad[i];
  });
}

Var softmax_rows(const Var& x) {
  require_defined(x, "softmax_rows");
  Tensor out = x.value();
  const std::size_t r = out.rows(), c = out.cols();
  for (std::size_t i = 0; i < r; ++i) {
    double* row = out.data().data() + i * c;
    const double mx = *std::max_element(row, row + c);
    double total = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      row[j] = std::exp(row[j] - mx);
      total += row[j];
    }
    for (std::size_t j = 0; j < c; ++j) row[j] /= total;
  }
  return make_result(std::move(out), {x.node()}, [r, c](Node& self) {
    Tensor& gx = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += self.grad[i * c + j] * self.value[i * c + j];
      for (std::size_t j = 0; j < c; ++j)
        gx[i * c + j] += self.value[i * c + j] * (self.grad[i * c + j] - dot);
    }
  });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  require_defined(x, "layer_norm");
  const Tensor& xv = x.value();
  const std::size_t r = xv.rows(), c = xv.cols();
  if (gamma.value().numel() != c || beta.value().numel() != c) {
    throw ShapeError("layer_norm: affine params do not match width " + std::to_string(c));
  }
  Tensor out(xv.shape());
  auto xhat = std::make_shared<Tensor>(xv.shape());
  auto inv_std = std::make_shared<std::vector<double>>(r);
  for (std::size_t i = 0; i < r; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < c; ++j) mean += xv[i * c + j];
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double dlt = xv[i * c + j] - mean;
      var += dlt * dlt;
    }
    var /= static_cast<double>(c);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[i] = is;
    for (std::size_t j = 0; j < c; ++j) {
      const double h = (xv[i * c + j] - mean) * is;
      (*xhat)[i * c + j] = h;
      out[i * c + j] = gamma.value()[j] * h + beta.value()[j];
    }
  }
  return make_result(
      std::move(out), {x.node(), gamma.node(), beta.node()}, [r, c, xhat, inv_std](Node& self) {
        Node& xn = *self.parents[0];
        Node& gn = *self.parents[1];
        Node& bn = *self.parents[2];
        const Tensor& g = self.grad;
        if (gn.requires_grad) {
          Tensor& gg = gn.grad_buffer();
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) gg[j] += g[i * c + j] * (*xhat)[i * c + j];
        }
        if (bn.requires_grad) {
          Tensor& gb = bn.grad_buffer();
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) gb[j] += g[i * c + j];
        }
        if (xn.requires_grad) {
          Tensor& gx = xn.grad_buffer();
          std::vector<double> dh(c);
          for (std::size_t i = 0; i < r; ++i) {
            double mean_dh = 0.0, mean_dh_h = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
              dh[j] = g[i * c + j] * gn.value[j];
              mean_dh += dh[j];
              mean_dh_h += dh[j] * (*xhat)[i * c + j];
            }
            mean_dh /= static_cast<double>(c);
            mean_dh_h /= static_cast<double>(c);
            for (std::size_t j = 0; j < c; ++j) {
              gx[i * c + j] +=
                  (*inv_std)[i] * (dh[j] - mean_dh - (*xhat)[i * c + j] * mean_dh_h);
            }
          }
        }
      });
}

Var row_outer(const Var& x) {
  require_defined(x, "row_outer");
  const Tensor& xv = x.value();
  const std::size_t r = xv.rows(), m = xv.cols();
  Shape shape = xv.shape();
  shape.back() = m * m;
  Tensor out(shape);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b)
        out[i * m * m + a * m + b] = xv[i * m + a] * xv[i * m + b];
  return make_result(std::move(out), {x.node()}, [r, m](Node& self) {
    Node& xn = *self.parents[0];
    Tensor& gx = xn.grad_buffer();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b) {
          const double g = self.grad[i * m * m + a * m + b];
          gx[i * m + a] += g * xn.value[i * m + b];
          gx[i * m + b] += g * xn.value[i * m + a];
        }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t r = parts.front().value().rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_defined(p, "concat_cols");
    if (p.value().rows() != r) {
      throw ShapeError("concat_cols: row count " + std::to_string(p.value().rows()) + " vs " +
                       std::to_string(r));
    }
    widths.push_back(p.value().cols());
    total += widths.back();
  }
  Tensor out({r, total});
  std::vector<NodePtr> parents;
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < widths[k]; ++j) out[i * total + offset + j] = v[i * widths[k] + j];
    offset += widths[k];
    parents.push_back(parts[k].node());
  }
  return make_result(std::move(out), std::move(parents), [r, total, widths](Node& self) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      Node& pn = *self.parents[k];
      if (pn.requires_grad) {
        Tensor& gp = pn.grad_buffer();
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < widths[k]; ++j)
            gp[i * widths[k] + j] += self.grad[i * total + offset + j];
      }
      offset += widths[k];
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t c = parts.front().value().cols();
  std::size_t total_rows = 0;
  std::vector<NodePtr> parents;
  for (const auto& p : parts) {
    require_defined(p, "concat_rows");
    if (p.value().cols() != c) {
      throw ShapeError("concat_rows: width " + std::to_string(p.value().cols()) + " vs " +
                       std::to_string(c));
    }
    total_rows += p.value().rows();
    parents.push_back(p.node());
  }
  Tensor out({total_rows, c});
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::copy(p.value().data().begin(), p.value().data().end(), out.data().begin() + static_cast<long>(offset));
    offset += p.value().numel();
  }
  return make_result(std::move(out), std::move(parents), [](Node& self) {
    std::size_t offset = 0;
    for (auto& pn : self.parents) {
      const std::size_t n = pn->value.numel();
      if (pn->requires_grad) {
        Tensor& gp = pn->grad_buffer();
        for (std::size_t i = 0; i < n; ++i) gp[i] += self.grad[offset + i];
      }
      offset += n;
    }
  });
}

Var slice_cols(const Var& x, std::size_t start, std::size_t count) {
  require_defined(x, "slice_cols");
  const Tensor& xv = x.value();
  const std::size_t r = xv.rows(), c = xv.cols();
  if (start + count > c) {
    throw ShapeError("slice_cols: [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") exceeds width " + std::to_string(c));
  }
  Tensor out({r, count});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < count; ++j) out[i * count + j] = xv[i * c + start + j];
  return make_result(std::move(out), {x.node()}, [r, c, start, count](Node& self) {
    Tensor& gx = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < count; ++j) gx[i * c + start + j] += self.grad[i * count + j];
  });
}

Var slice_rows(const Var& x, std::size_t start, std::size_t count) {
  require_defined(x, "slice_rows");
  const Tensor& xv = x.value();
  const std::size_t r = xv.rows(), c = xv.cols();
  if (start + count > r) {
    throw ShapeError("slice_rows: [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") exceeds rows " + std::to_string(r));
  }
  Tensor out({count, c});
  std::copy(xv.data().begin() + static_cast<long>(start * c),
            xv.data().begin() + static_cast<long>((start + count) * c), out.data().begin());
  return make_result(std::move(out), {x.node()}, [c, start](Node& self) {
    Tensor& gx = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < self.grad.numel(); ++i) gx[start * c + i] += self.grad[i];
  });
}

Var reshape(const Var& x, Shape shape) {
  require_defined(x, "reshape");
  return make_result(x.value().reshaped(std::move(shape)), {x.node()}, [](Node& self) {
    Tensor& gx = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += self.grad[i];
  });
}

Var sum(const Var& x) {
  require_defined(x, "sum");
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return make_result(Tensor({1}, s), {x.node()}, [](Node& self) {
    Tensor& gx = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += self.grad[0];
  });
}

Var square_sum(const Var& x) {
  require_defined(x, "square_sum");
  return make_result(Tensor({1}, x.value().squared_norm()), {x.node()}, [](Node& self) {
    Node& xn = *self.parents[0];
    Tensor& gx = xn.grad_buffer();
    for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += 2.0 * xn.value[i] * self.grad[0];
  });
}

Var sqrt_scalar(const Var& x) {
  require_defined(x, "sqrt_scalar");
  if (x.value().numel() != 1) throw ShapeError("sqrt_scalar: expected a scalar");
  const double y = std::sqrt(x.value()[0]);
  return make_result(Tensor({1}, y), {x.node()}, [](Node& self) {
    const double y = self.value[0];
    if (y > 0.0) self.parents[0]->grad_buffer()[0] += self.grad[0] / (2.0 * y);
  });
}

}  // namespace revib::nn
