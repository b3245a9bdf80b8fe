#pragma once

#include <span>
#include <string>
#include <vector>

#include "netdemix/graph.hpp"
#include "netdemix/params.hpp"
#include "netdemix/rng.hpp"
#include "netdemix/tape.hpp"

namespace netdemix {

enum class Activation { Identity, Relu };

/// How the pooled graph's connectivity is derived from the parent graph.
enum class PoolConnectivity {
  Induced,  ///< (A + I) restricted to the kept nodes
  Squared,  ///< binarized (A + I)^2 restricted to the kept nodes
};

std::string to_string(PoolConnectivity c);
PoolConnectivity parse_pool_connectivity(const std::string& s);

/// A graph as seen by the layers: the propagation matrix and the 0/1 support
/// (unit diagonal) from which pooled graphs are cut.
struct GraphOperand {
  Matrix normalized;
  Matrix pool_support;

  Index num_nodes() const { return normalized.rows(); }
};

/// Everything a model needs about one graph, precomputed once.
struct GraphContext {
  std::string id;
  Matrix adjacency;  ///< raw binary A
  GraphOperand operand;
  PoolConnectivity connectivity = PoolConnectivity::Squared;

  Index num_nodes() const { return adjacency.rows(); }
};

GraphContext make_graph_context(const Graph& g,
                                PoolConnectivity connectivity = PoolConnectivity::Squared);

/// act(A_norm * H0 * W); A_norm is typically a tape constant.
Var gcn_layer(Var a_norm, Var h0, Var w, Activation act);
/// act(A_norm * H0 * W + b), b a 1 x F_out row.
Var gcn_layer(Var a_norm, Var h0, Var w, Var bias, Activation act);

struct PoolRecord {
  /// Kept parent rows ordered by descending score, ties by ascending index.
  std::vector<Index> selected;
  Vector scores;
  Index parent_size = 0;
};

struct PoolOutput {
  Var h;
  GraphOperand graph;
  PoolRecord record;
};

/// H p / ||p||; N x 1. Throws DomainError when ||p|| == 0.
Var projection_scores(Var h, Var p);

/// Top-k pooling: keep the k best-scoring rows, gate each by sigmoid(score).
PoolOutput gpool(const GraphOperand& graph, Var h, Var p, Index k);

/// Places pooled rows back at their parent indices, zero rows elsewhere.
Var gunpool(Var h_pooled, const PoolRecord& record);

/// Parameters used by one depth-1 graph U-Net block under `prefix`.
void register_gunet_block(ParameterStore& store, const std::string& prefix, Index in_features,
                          Index out_features);

/// GCN(in->out) -> gPool(ceil(N/2)) -> GCN(out->out) -> gUnpool -> add skip
/// -> GCN(out->out, out_act).
Var gunet_block(Tape& tape, ParameterStore& store, const std::string& prefix,
                const GraphOperand& graph, Var h_in, Activation out_act = Activation::Identity);

/// z = mu + sigma .* eps with eps ~ N(0, 1) drawn column-major from rng.
Var gaussian_sample(Var mu, Var sigma, Rng& rng);
/// Same with caller-supplied eps.
Var gaussian_sample(Var mu, Var sigma, const Matrix& eps);

/// act(v W + b) for a 1 x in row v.
Var dense_layer(Var v, Var w, Var b, Activation act);

/// Stride-1 1-D convolution along the rows of h (L x C_in), zero padding
/// `padding` on both ends. kernel is C_out x (C_in * K) with entry
/// (o, c * K + k); bias is 1 x C_out. Output is (L + 2 padding - K + 1) x C_out.
Var conv1d(Var h, Var kernel, Var bias, Index kernel_size, Index padding);

/// Batched transposed 1-D convolution. x is B x (C_in * L_in), channel-major
/// per row; weight is C_in x (C_out * K) with entry (c, o * K + k); bias 1 x C_out.
/// Output is B x (C_out * L_out), L_out = (L_in - 1) * stride + K - 2 padding.
Var conv_transpose1d(Var x, Var weight, Var bias, Index in_channels, Index stride,
                     Index kernel_size, Index padding);

Index conv_transpose_length(Index length, Index stride, Index kernel_size, Index padding);

struct BatchNormState {
  Matrix* running_mean = nullptr;  ///< 1 x C
  Matrix* running_var = nullptr;   ///< 1 x C
  double momentum = 0.1;
  double eps = 1e-5;
};

/// Per-channel batch normalisation of x (B x (C * L)). Training mode uses the
/// batch statistics over B x L and updates the running buffers; otherwise
/// the running buffers are used.
Var batch_norm(Var x, Var gamma, Var beta, Index channels, bool training,
               const BatchNormState& state);

struct TransposedBlockSpec {
  Index in_channels = 1;
  Index out_channels = 1;
  Index kernel_size = 2;
  Index stride = 2;
  Index padding = 0;
};

void register_transposed_block(ParameterStore& store, const std::string& prefix,
                               const TransposedBlockSpec& spec);

/// Transposed convolution -> batch normalisation -> ReLU.
Var conv1d_transposed_block(Tape& tape, ParameterStore& store, const std::string& prefix,
                            const TransposedBlockSpec& spec, Var x, bool training);

}  // namespace netdemix
