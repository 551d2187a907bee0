#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "equalizer/numerics/graph.hpp"
#include "equalizer/numerics/tensor.hpp"

namespace equalizer::numerics {

// Plain (untracked) kernels. The graph operations below wrap these.

/// Max-shifted softmax over a 1-D tensor, or row-wise over a 2-D tensor.
Tensor softmax(const Tensor& logits);
Tensor matmul(const Tensor& a, const Tensor& b);
/// Valid cross-correlation, no padding.
Tensor conv2d(const Tensor& x, const Tensor& kernel, std::size_t stride);

// Graph operations. Each records one node and its backward rule.

NodeId matmul(Graph& g, NodeId a, NodeId b);
NodeId add(Graph& g, NodeId a, NodeId b);
/// Adds a length-n bias to a [n] vector or to every row of an [m x n] matrix.
NodeId add_bias(Graph& g, NodeId x, NodeId bias);
NodeId scale(Graph& g, NodeId x, double factor);
/// W[m x k] * x[k] + b[m].
NodeId linear(Graph& g, NodeId weight, NodeId x, NodeId bias);

NodeId conv2d(Graph& g, NodeId x, NodeId kernel, std::size_t stride);
/// Adds b[c] to every spatial position of channel c of a [C x H x W] tensor.
NodeId add_channel_bias(Graph& g, NodeId x, NodeId bias);

NodeId relu(Graph& g, NodeId x);
NodeId sigmoid(Graph& g, NodeId x);
NodeId tanh(Graph& g, NodeId x);
/// Natural log; inputs must be positive.
NodeId log(Graph& g, NodeId x);

NodeId reshape(Graph& g, NodeId x, Shape shape);
/// Concatenates 1-D tensors.
NodeId concat(Graph& g, std::span<const NodeId> parts);
/// Row `row` of a [V x d] matrix as a [d] vector.
NodeId embedding(Graph& g, NodeId table, std::size_t row);
/// Stacks equal-length 1-D tensors into a [T x n] matrix.
NodeId stack_rows(Graph& g, std::span<const NodeId> rows);

NodeId softmax(Graph& g, NodeId logits);
NodeId sum(Graph& g, NodeId x);
/// Element at flat index `i` as a scalar.
NodeId pick(Graph& g, NodeId x, std::size_t i);
/// sum_k coeffs[k] * terms[k] over scalar nodes.
NodeId weighted_sum(Graph& g, std::span<const NodeId> terms, std::span<const double> coeffs);

struct LstmState {
  NodeId h;
  NodeId c;
};

/// One recurrent step. `weight` is [4n x (d+n)] acting on [x; h], `bias` is
/// [4n]; gate blocks are ordered input, forget, output, candidate.
LstmState lstm_cell(Graph& g, NodeId x, NodeId h, NodeId c, NodeId weight, NodeId bias);

}  // namespace equalizer::numerics
