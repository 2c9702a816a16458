#pragma once

#include "twowing/autodiff.hpp"
#include "twowing/errors.hpp"

namespace twowing {

/// Convolution + max-pooling-over-time sentence encoder. T is a d x l
/// feature map; W is d_out x (width*d), b is d_out.
inline Var vanilla_encode(Graph& g, Var T, Parameter& W, Parameter& b, int width) {
  return g.maxpool_time(g.conv1d(T, g.value(W), g.value(b), width));
}

/// Dot-product attention context for one word state h over the columns of
/// the map X: c = sum_z softmax_z(h . x_z) x_z.
inline Var attentive_context(Graph& g, Var h, Var X) {
  if (h.val().rank() != 1) throw DimensionError("attentive_context: word state must be a vector, got " + shape_str(h.val().shape()));
  Var col = g.reshape(h, {h.val().numel(), 1});
  return g.reshape(g.attend(col, X), {h.val().numel()});
}

/// Interaction encoder: every word j of S gets an attention context c_j over
/// X, then tanh(W [s_{j-1}; s_j; s_{j+1}; c_j] + b) is max-pooled over j.
/// W is d x 4d, b is d.
inline Var f_int(Graph& g, Var S, Var X, Parameter& W, Parameter& b) {
  Var C = g.attend(S, X);
  return g.maxpool_time(g.conv1d(S, g.value(W), g.value(b), 3, C));
}

}  // namespace twowing
