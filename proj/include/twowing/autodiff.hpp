#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "twowing/errors.hpp"
#include "twowing/tensor.hpp"

namespace twowing {

/// A persistent trainable tensor. Gradients accumulate here across the
/// graphs of a mini-batch; `accum` is the AdaGrad squared-gradient history.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor accum;

  Parameter(std::string n, Tensor v)
      : name(std::move(n)),
        value(std::move(v)),
        grad(Tensor::zeros(value.shape())),
        accum(Tensor::zeros(value.shape())) {}

  void zero_grad() { grad.fill(0.0); }
};

class Graph;

namespace detail {

struct Node {
  Tensor value;                 // owned; empty for parameter leaves
  Tensor grad;                  // allocated lazily during backward
  Parameter* param = nullptr;   // non-null for parameter leaves
  bool needs_grad = false;
  bool reachable = false;
  std::vector<Node*> parents;
  std::function<void(Node&)> back;  // null for leaves

  const Tensor& val() const { return param ? param->value : value; }

  /// Gradient destination: the parameter's grad for leaves, else the node's.
  Tensor& grad_ref() {
    if (param) return param->grad;
    if (grad.numel() != val().numel()) grad = Tensor::zeros(val().shape());
    return grad;
  }
};

}  // namespace detail

/// Handle to a node of the computation graph it was created by.
class Var {
 public:
  Var() = default;
  explicit Var(detail::Node* n) : node_(n) {}

  const Tensor& val() const { return node_->val(); }
  const Tensor& grad() const { return node_->grad; }
  bool valid() const { return node_ != nullptr; }
  detail::Node* node() const { return node_; }

 private:
  detail::Node* node_ = nullptr;
};

/// Define-by-run computation graph with reverse-mode differentiation.
///
/// Every op evaluates eagerly on creation, so values are available while the
/// graph is still being built (the evidence binarization depends on that).
/// Creation order is a topological order; backward walks it in reverse and
/// touches each node reachable from the loss exactly once. A graph is
/// single-use: build, read values, call backward at most once.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  // ---- leaves ----

  Var constant(Tensor t) {
    detail::Node& n = fresh();
    n.value = std::move(t);
    return Var(&n);
  }

  Var scalar(double v) { return constant(Tensor::scalar(v)); }

  /// Leaf aliasing a parameter; repeated calls return the same node.
  Var value(Parameter& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return Var(it->second);
    detail::Node& n = fresh();
    n.param = &p;
    n.needs_grad = true;
    param_nodes_.emplace(&p, &n);
    return Var(&n);
  }

  // ---- ops ----

  /// Feature map from an embedding table: column j is row ids[j] of `table`
  /// (table is vocab x d, output is d x l).
  Var gather_cols(Var table, const std::vector<int>& ids) {
    const Tensor& t = table.val();
    if (t.rank() != 2) throw DimensionError("gather_cols: table must be rank 2, got " + shape_str(t.shape()));
    if (ids.empty()) throw ArgumentError("gather_cols: empty id sequence");
    std::size_t d = t.cols();
    std::size_t l = ids.size();
    for (int id : ids) {
      if (id < 0 || static_cast<std::size_t>(id) >= t.rows())
        throw ArgumentError("gather_cols: id " + std::to_string(id) + " outside table of " + std::to_string(t.rows()) + " rows");
    }
    Tensor out({d, l});
    for (std::size_t j = 0; j < l; ++j)
      for (std::size_t r = 0; r < d; ++r)
        out.at(r, j) = t.at(static_cast<std::size_t>(ids[j]), r);
    return make(std::move(out), {table}, [ids](detail::Node& self) {
      detail::Node* tab = self.parents[0];
      if (!tab->needs_grad) return;
      Tensor& gt = tab->grad_ref();
      const Tensor& g = self.grad;
      std::size_t d = self.val().rows();
      for (std::size_t j = 0; j < ids.size(); ++j)
        for (std::size_t r = 0; r < d; ++r)
          gt.at(static_cast<std::size_t>(ids[j]), r) += g.at(r, j);
    });
  }

  Var matvec(Var W, Var x) {
    const Tensor& w = W.val();
    const Tensor& v = x.val();
    if (w.rank() != 2 || v.rank() != 1 || w.cols() != v.numel())
      throw DimensionError("matvec: incompatible shapes " + shape_str(w.shape()) + " and " + shape_str(v.shape()));
    Tensor out({w.rows()});
    for (std::size_t r = 0; r < w.rows(); ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < w.cols(); ++c) acc += w.at(r, c) * v[c];
      out[r] = acc;
    }
    return make(std::move(out), {W, x}, [](detail::Node& self) {
      detail::Node* Wn = self.parents[0];
      detail::Node* xn = self.parents[1];
      const Tensor& w = Wn->val();
      const Tensor& v = xn->val();
      const Tensor& g = self.grad;
      if (Wn->needs_grad) {
        Tensor& gw = Wn->grad_ref();
        for (std::size_t r = 0; r < w.rows(); ++r)
          for (std::size_t c = 0; c < w.cols(); ++c) gw.at(r, c) += g[r] * v[c];
      }
      if (xn->needs_grad) {
        Tensor& gx = xn->grad_ref();
        for (std::size_t r = 0; r < w.rows(); ++r)
          for (std::size_t c = 0; c < w.cols(); ++c) gx[c] += w.at(r, c) * g[r];
      }
    });
  }

  Var add(Var a, Var b) {
    if (!a.val().same_shape(b.val()))
      throw DimensionError("add: shape mismatch " + shape_str(a.val().shape()) + " vs " + shape_str(b.val().shape()));
    Tensor out = a.val();
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += b.val()[i];
    return make(std::move(out), {a, b}, [](detail::Node& self) {
      for (detail::Node* p : self.parents) {
        if (!p->needs_grad) continue;
        Tensor& gp = p->grad_ref();
        for (std::size_t i = 0; i < gp.numel(); ++i) gp[i] += self.grad[i];
      }
    });
  }

  Var add_n(const std::vector<Var>& terms) {
    if (terms.empty()) throw ArgumentError("add_n: empty term list");
    Tensor out = terms[0].val();
    for (std::size_t t = 1; t < terms.size(); ++t) {
      if (!terms[t].val().same_shape(out))
        throw DimensionError("add_n: shape mismatch at term " + std::to_string(t));
      for (std::size_t i = 0; i < out.numel(); ++i) out[i] += terms[t].val()[i];
    }
    return make(std::move(out), terms, [](detail::Node& self) {
      for (detail::Node* p : self.parents) {
        if (!p->needs_grad) continue;
        Tensor& gp = p->grad_ref();
        for (std::size_t i = 0; i < gp.numel(); ++i) gp[i] += self.grad[i];
      }
    });
  }

  /// Elementwise mul * x + shift (constant coefficients).
  Var affine(Var a, double mul, double shift) {
    Tensor out = a.val();
    for (double& x : out.data()) x = mul * x + shift;
    return make(std::move(out), {a}, [mul](detail::Node& self) {
      detail::Node* p = self.parents[0];
      if (!p->needs_grad) return;
      Tensor& gp = p->grad_ref();
      for (std::size_t i = 0; i < gp.numel(); ++i) gp[i] += mul * self.grad[i];
    });
  }

  Var scale(Var a, double c) { return affine(a, c, 0.0); }

  /// Tensor scaled by a one-element graph scalar; differentiable in both.
  Var scale_by(Var a, Var s) {
    if (s.val().numel() != 1) throw DimensionError("scale_by: scalar operand has shape " + shape_str(s.val().shape()));
    double c = s.val()[0];
    Tensor out = a.val();
    for (double& x : out.data()) x *= c;
    return make(std::move(out), {a, s}, [](detail::Node& self) {
      detail::Node* an = self.parents[0];
      detail::Node* sn = self.parents[1];
      double c = sn->val()[0];
      if (an->needs_grad) {
        Tensor& ga = an->grad_ref();
        for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += c * self.grad[i];
      }
      if (sn->needs_grad) {
        double acc = 0.0;
        for (std::size_t i = 0; i < an->val().numel(); ++i) acc += an->val()[i] * self.grad[i];
        sn->grad_ref()[0] += acc;
      }
    });
  }

  Var sigmoid(Var a) {
    Tensor out = a.val();
    for (double& x : out.data()) x = stable_sigmoid(x);
    return make(std::move(out), {a}, [](detail::Node& self) {
      detail::Node* p = self.parents[0];
      if (!p->needs_grad) return;
      Tensor& gp = p->grad_ref();
      for (std::size_t i = 0; i < gp.numel(); ++i) {
        double y = self.value[i];
        gp[i] += y * (1.0 - y) * self.grad[i];
      }
    });
  }

  /// Natural log, clamped below at 1e-12 so cross-entropy terms stay finite.
  Var log(Var a) {
    Tensor out = a.val();
    for (double& x : out.data()) x = std::log(x < kLogClamp ? kLogClamp : x);
    return make(std::move(out), {a}, [](detail::Node& self) {
      detail::Node* p = self.parents[0];
      if (!p->needs_grad) return;
      Tensor& gp = p->grad_ref();
      for (std::size_t i = 0; i < gp.numel(); ++i) {
        double x = p->val()[i];
        gp[i] += self.grad[i] / (x < kLogClamp ? kLogClamp : x);
      }
    });
  }

  /// Vector softmax with max subtraction.
  Var softmax(Var a) {
    const Tensor& v = a.val();
    if (v.rank() != 1 || v.numel() == 0) throw ArgumentError("softmax: requires a non-empty vector, got " + shape_str(v.shape()));
    Tensor out = softmax_values(v.data());
    return make(std::move(out), {a}, [](detail::Node& self) {
      detail::Node* p = self.parents[0];
      if (!p->needs_grad) return;
      Tensor& gp = p->grad_ref();
      const Tensor& y = self.value;
      double dotyg = 0.0;
      for (std::size_t i = 0; i < y.numel(); ++i) dotyg += y[i] * self.grad[i];
      for (std::size_t i = 0; i < y.numel(); ++i) gp[i] += y[i] * (self.grad[i] - dotyg);
    });
  }

  Var dot(Var a, Var b) {
    const Tensor& u = a.val();
    const Tensor& v = b.val();
    if (u.rank() != 1 || v.rank() != 1 || u.numel() != v.numel())
      throw DimensionError("dot: incompatible shapes " + shape_str(u.shape()) + " and " + shape_str(v.shape()));
    double acc = 0.0;
    for (std::size_t i = 0; i < u.numel(); ++i) acc += u[i] * v[i];
    return make(Tensor::scalar(acc), {a, b}, [](detail::Node& self) {
      detail::Node* an = self.parents[0];
      detail::Node* bn = self.parents[1];
      double g = self.grad[0];
      if (an->needs_grad) {
        Tensor& ga = an->grad_ref();
        for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += g * bn->val()[i];
      }
      if (bn->needs_grad) {
        Tensor& gb = bn->grad_ref();
        for (std::size_t i = 0; i < gb.numel(); ++i) gb[i] += g * an->val()[i];
      }
    });
  }

  /// Concatenate rank-1 tensors (scalars included) into one vector.
  Var concat(const std::vector<Var>& parts) {
    if (parts.empty()) throw ArgumentError("concat: empty part list");
    std::vector<double> data;
    for (const Var& p : parts) {
      if (p.val().rank() != 1) throw DimensionError("concat: all parts must be rank 1");
      data.insert(data.end(), p.val().data().begin(), p.val().data().end());
    }
    return make(Tensor::vector(std::move(data)), parts, [](detail::Node& self) {
      std::size_t off = 0;
      for (detail::Node* p : self.parents) {
        std::size_t n = p->val().numel();
        if (p->needs_grad) {
          Tensor& gp = p->grad_ref();
          for (std::size_t i = 0; i < n; ++i) gp[i] += self.grad[off + i];
        }
        off += n;
      }
    });
  }

  /// Concatenate feature maps along the position axis.
  Var concat_cols(const std::vector<Var>& maps) {
    if (maps.empty()) throw ArgumentError("concat_cols: empty map list");
    std::size_t d = maps[0].val().rows();
    std::size_t total = 0;
    for (const Var& m : maps) {
      if (m.val().rank() != 2 || m.val().rows() != d)
        throw DimensionError("concat_cols: row mismatch " + shape_str(m.val().shape()));
      total += m.val().cols();
    }
    Tensor out({d, total});
    std::size_t off = 0;
    for (const Var& m : maps) {
      std::size_t l = m.val().cols();
      for (std::size_t r = 0; r < d; ++r)
        for (std::size_t j = 0; j < l; ++j) out.at(r, off + j) = m.val().at(r, j);
      off += l;
    }
    return make(std::move(out), maps, [](detail::Node& self) {
      std::size_t d = self.val().rows();
      std::size_t off = 0;
      for (detail::Node* p : self.parents) {
        std::size_t l = p->val().cols();
        if (p->needs_grad) {
          Tensor& gp = p->grad_ref();
          for (std::size_t r = 0; r < d; ++r)
            for (std::size_t j = 0; j < l; ++j) gp.at(r, j) += self.grad.at(r, off + j);
        }
        off += l;
      }
    });
  }

  Var reshape(Var a, Shape shape) {
    if (numel_of(shape) != a.val().numel())
      throw DimensionError("reshape: cannot view " + shape_str(a.val().shape()) + " as " + shape_str(shape));
    Tensor out(std::move(shape), a.val().data());
    return make(std::move(out), {a}, [](detail::Node& self) {
      detail::Node* p = self.parents[0];
      if (!p->needs_grad) return;
      Tensor& gp = p->grad_ref();
      for (std::size_t i = 0; i < gp.numel(); ++i) gp[i] += self.grad[i];
    });
  }

  /// Width-w convolution over the position axis with zero padding and tanh
  /// activation. Column j of the output is
  ///   tanh(W * [T(:,j-h) ... T(:,j+h) ; extra(:,j)] + b),  h = (w-1)/2.
  /// W is d_out x (w*d + d_e); pass an invalid Var for no extra channel.
  Var conv1d(Var T, Var W, Var b, int width, Var extra = Var()) {
    const Tensor& t = T.val();
    const Tensor& w = W.val();
    const Tensor& bias = b.val();
    if (width < 1 || width % 2 == 0) throw ArgumentError("conv1d: filter width must be odd and positive, got " + std::to_string(width));
    if (t.rank() != 2 || t.cols() == 0) throw ArgumentError("conv1d: input map must be d x l with l >= 1, got " + shape_str(t.shape()));
    std::size_t d = t.rows();
    std::size_t l = t.cols();
    std::size_t de = 0;
    if (extra.valid()) {
      const Tensor& e = extra.val();
      if (e.rank() != 2 || e.rows() == 0 || e.cols() != l)
        throw DimensionError("conv1d: extra channel " + shape_str(e.shape()) + " does not align with input " + shape_str(t.shape()));
      de = e.rows();
    }
    std::size_t win = static_cast<std::size_t>(width) * d + de;
    if (w.rank() != 2 || w.cols() != win)
      throw DimensionError("conv1d: filter " + shape_str(w.shape()) + " expects window length " + std::to_string(win));
    std::size_t dout = w.rows();
    if (bias.rank() != 1 || bias.numel() != dout)
      throw DimensionError("conv1d: bias " + shape_str(bias.shape()) + " does not match " + std::to_string(dout) + " filters");

    int h = (width - 1) / 2;
    Tensor out({dout, l});
    std::vector<double> window(win);
    for (std::size_t j = 0; j < l; ++j) {
      fill_window(t, extra.valid() ? &extra.val() : nullptr, j, width, window);
      for (std::size_t r = 0; r < dout; ++r) {
        double acc = bias[r];
        for (std::size_t c = 0; c < win; ++c) acc += w.at(r, c) * window[c];
        out.at(r, j) = std::tanh(acc);
      }
    }

    std::vector<Var> parents{T, W, b};
    if (extra.valid()) parents.push_back(extra);
    bool has_extra = extra.valid();
    return make(std::move(out), parents, [width, h, has_extra](detail::Node& self) {
      detail::Node* Tn = self.parents[0];
      detail::Node* Wn = self.parents[1];
      detail::Node* bn = self.parents[2];
      detail::Node* en = has_extra ? self.parents[3] : nullptr;
      const Tensor& t = Tn->val();
      const Tensor& w = Wn->val();
      std::size_t d = t.rows();
      std::size_t l = t.cols();
      std::size_t dout = w.rows();
      std::size_t win = w.cols();
      std::vector<double> window(win);
      std::vector<double> gpre(dout);
      for (std::size_t j = 0; j < l; ++j) {
        for (std::size_t r = 0; r < dout; ++r) {
          double y = self.value.at(r, j);
          gpre[r] = self.grad.at(r, j) * (1.0 - y * y);
        }
        if (Wn->needs_grad) {
          fill_window(t, en ? &en->val() : nullptr, j, width, window);
          Tensor& gw = Wn->grad_ref();
          for (std::size_t r = 0; r < dout; ++r)
            for (std::size_t c = 0; c < win; ++c) gw.at(r, c) += gpre[r] * window[c];
        }
        if (bn->needs_grad) {
          Tensor& gb = bn->grad_ref();
          for (std::size_t r = 0; r < dout; ++r) gb[r] += gpre[r];
        }
        if (Tn->needs_grad) {
          Tensor& gt = Tn->grad_ref();
          for (int tap = 0; tap < width; ++tap) {
            long src = static_cast<long>(j) + tap - h;
            if (src < 0 || src >= static_cast<long>(l)) continue;
            std::size_t base = static_cast<std::size_t>(tap) * d;
            for (std::size_t k = 0; k < d; ++k) {
              double acc = 0.0;
              for (std::size_t r = 0; r < dout; ++r) acc += w.at(r, base + k) * gpre[r];
              gt.at(k, static_cast<std::size_t>(src)) += acc;
            }
          }
        }
        if (en && en->needs_grad) {
          Tensor& ge = en->grad_ref();
          std::size_t de = en->val().rows();
          std::size_t base = static_cast<std::size_t>(width) * d;
          for (std::size_t k = 0; k < de; ++k) {
            double acc = 0.0;
            for (std::size_t r = 0; r < dout; ++r) acc += w.at(r, base + k) * gpre[r];
            ge.at(k, j) += acc;
          }
        }
      }
    });
  }

  /// Max over the position axis of a d x l map; ties route to the first
  /// maximal column.
  Var maxpool_time(Var M) {
    const Tensor& m = M.val();
    if (m.rank() != 2 || m.cols() == 0) throw ArgumentError("maxpool_time: requires a d x l map with l >= 1, got " + shape_str(m.shape()));
    std::size_t d = m.rows();
    std::size_t l = m.cols();
    Tensor out({d});
    std::vector<std::size_t> arg(d, 0);
    for (std::size_t r = 0; r < d; ++r) {
      double best = m.at(r, 0);
      std::size_t bj = 0;
      for (std::size_t j = 1; j < l; ++j) {
        if (m.at(r, j) > best) {
          best = m.at(r, j);
          bj = j;
        }
      }
      out[r] = best;
      arg[r] = bj;
    }
    return make(std::move(out), {M}, [arg](detail::Node& self) {
      detail::Node* p = self.parents[0];
      if (!p->needs_grad) return;
      Tensor& gp = p->grad_ref();
      for (std::size_t r = 0; r < arg.size(); ++r) gp.at(r, arg[r]) += self.grad[r];
    });
  }

  /// Dot-product attention of every column of S over the columns of X:
  /// output column j is sum_z softmax_z(S(:,j) . X(:,z)) X(:,z).
  Var attend(Var S, Var X) {
    const Tensor& s = S.val();
    const Tensor& x = X.val();
    if (s.rank() != 2 || x.rank() != 2 || s.rows() != x.rows())
      throw DimensionError("attend: incompatible maps " + shape_str(s.shape()) + " and " + shape_str(x.shape()));
    if (x.cols() == 0) throw ArgumentError("attend: context map has no columns");
    if (s.cols() == 0) throw ArgumentError("attend: query map has no columns");
    std::size_t d = s.rows();
    std::size_t ls = s.cols();
    std::size_t lx = x.cols();
    Tensor weights({ls, lx});
    Tensor out({d, ls});
    std::vector<double> scores(lx);
    for (std::size_t j = 0; j < ls; ++j) {
      for (std::size_t z = 0; z < lx; ++z) {
        double acc = 0.0;
        for (std::size_t r = 0; r < d; ++r) acc += s.at(r, j) * x.at(r, z);
        scores[z] = acc;
      }
      Tensor sm = softmax_values(scores);
      for (std::size_t z = 0; z < lx; ++z) {
        weights.at(j, z) = sm[z];
        for (std::size_t r = 0; r < d; ++r) out.at(r, j) += sm[z] * x.at(r, z);
      }
    }
    return make(std::move(out), {S, X}, [weights](detail::Node& self) {
      detail::Node* Sn = self.parents[0];
      detail::Node* Xn = self.parents[1];
      const Tensor& s = Sn->val();
      const Tensor& x = Xn->val();
      std::size_t d = s.rows();
      std::size_t ls = s.cols();
      std::size_t lx = x.cols();
      for (std::size_t j = 0; j < ls; ++j) {
        // dc: incoming gradient for context column j
        // dw_z = X(:,z) . dc ; da = softmax jacobian applied to dw
        std::vector<double> dw(lx, 0.0);
        for (std::size_t z = 0; z < lx; ++z) {
          double acc = 0.0;
          for (std::size_t r = 0; r < d; ++r) acc += x.at(r, z) * self.grad.at(r, j);
          dw[z] = acc;
        }
        double mix = 0.0;
        for (std::size_t z = 0; z < lx; ++z) mix += weights.at(j, z) * dw[z];
        for (std::size_t z = 0; z < lx; ++z) {
          double da = weights.at(j, z) * (dw[z] - mix);
          if (Sn->needs_grad) {
            Tensor& gs = Sn->grad_ref();
            for (std::size_t r = 0; r < d; ++r) gs.at(r, j) += da * x.at(r, z);
          }
          if (Xn->needs_grad) {
            Tensor& gx = Xn->grad_ref();
            for (std::size_t r = 0; r < d; ++r)
              gx.at(r, z) += weights.at(j, z) * self.grad.at(r, j) + da * s.at(r, j);
          }
        }
      }
    });
  }

  /// Elementwise max; ties route the gradient to the first operand.
  Var max(Var a, Var b) {
    if (!a.val().same_shape(b.val()))
      throw DimensionError("max: shape mismatch " + shape_str(a.val().shape()) + " vs " + shape_str(b.val().shape()));
    Tensor out = a.val();
    for (std::size_t i = 0; i < out.numel(); ++i)
      if (b.val()[i] > out[i]) out[i] = b.val()[i];
    return make(std::move(out), {a, b}, [](detail::Node& self) {
      detail::Node* an = self.parents[0];
      detail::Node* bn = self.parents[1];
      for (std::size_t i = 0; i < self.value.numel(); ++i) {
        bool from_a = an->val()[i] >= bn->val()[i];
        detail::Node* dst = from_a ? an : bn;
        if (dst->needs_grad) dst->grad_ref()[i] += self.grad[i];
      }
    });
  }

  // ---- differentiation ----

  /// Reverse-mode sweep from a one-element loss. Single use per graph.
  void backward(Var loss) {
    if (!loss.valid()) throw ContractError("backward: invalid loss handle");
    if (loss.val().numel() != 1)
      throw ContractError("backward: loss must be a scalar, got shape " + shape_str(loss.val().shape()));
    if (backward_done_) throw ContractError("backward: graph already differentiated");
    backward_done_ = true;

    mark_reachable(loss.node());
    loss.node()->grad_ref()[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      detail::Node& n = *it;
      // a reachable node can still end up with no gradient when every
      // consumer routed around it (a max that it never won); its pull-back
      // would be all zeros, so skip it rather than touch the empty tensor
      if (n.reachable && n.back && n.grad.numel() > 0) n.back(n);
    }
  }

  std::size_t size() const { return nodes_.size(); }

  static constexpr double kLogClamp = 1e-12;

  /// Stable softmax over raw values; shared by the op and by losses.
  static Tensor softmax_values(const std::vector<double>& v) {
    if (v.empty()) throw ArgumentError("softmax: empty input");
    double mx = v[0];
    for (double x : v)
      if (x > mx) mx = x;
    Tensor out({v.size()});
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out[i] = std::exp(v[i] - mx);
      sum += out[i];
    }
    for (std::size_t i = 0; i < v.size(); ++i) out[i] /= sum;
    return out;
  }

  static double stable_sigmoid(double x) {
    if (x >= 0.0) {
      double e = std::exp(-x);
      return 1.0 / (1.0 + e);
    }
    double e = std::exp(x);
    return e / (1.0 + e);
  }

 private:
  detail::Node& fresh() {
    nodes_.emplace_back();
    return nodes_.back();
  }

  Var make(Tensor value, const std::vector<Var>& parents, std::function<void(detail::Node&)> back) {
    detail::Node& n = fresh();
    n.value = std::move(value);
    n.parents.reserve(parents.size());
    for (const Var& p : parents) {
      n.parents.push_back(p.node());
      if (p.node()->needs_grad) n.needs_grad = true;
    }
    if (n.needs_grad) n.back = std::move(back);
    return Var(&n);
  }

  static void fill_window(const Tensor& t, const Tensor* extra, std::size_t j, int width, std::vector<double>& window) {
    std::size_t d = t.rows();
    std::size_t l = t.cols();
    int h = (width - 1) / 2;
    std::size_t c = 0;
    for (int tap = 0; tap < width; ++tap) {
      long src = static_cast<long>(j) + tap - h;
      bool in = src >= 0 && src < static_cast<long>(l);
      for (std::size_t k = 0; k < d; ++k) window[c++] = in ? t.at(k, static_cast<std::size_t>(src)) : 0.0;
    }
    if (extra) {
      for (std::size_t k = 0; k < extra->rows(); ++k) window[c++] = extra->at(k, j);
    }
  }

  void mark_reachable(detail::Node* root) {
    std::vector<detail::Node*> stack{root};
    while (!stack.empty()) {
      detail::Node* n = stack.back();
      stack.pop_back();
      if (n->reachable || !n->needs_grad) continue;
      n->reachable = true;
      for (detail::Node* p : n->parents)
        if (p->needs_grad && !p->reachable) stack.push_back(p);
    }
  }

  std::deque<detail::Node> nodes_;
  std::unordered_map<const Parameter*, detail::Node*> param_nodes_;
  bool backward_done_ = false;
};

}  // namespace twowing
