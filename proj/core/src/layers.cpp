#include "netdemix/layers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "netdemix/errors.hpp"

namespace netdemix {

std::string to_string(PoolConnectivity c) {
  return c == PoolConnectivity::Induced ? "induced" : "squared";
}

PoolConnectivity parse_pool_connectivity(const std::string& s) {
  if (s == "induced") return PoolConnectivity::Induced;
  if (s == "squared") return PoolConnectivity::Squared;
  throw InvalidArgument("pool_connectivity must be 'induced' or 'squared', got '" + s + "'");
}

GraphContext make_graph_context(const Graph& g, PoolConnectivity connectivity) {
  GraphContext ctx;
  ctx.id = g.id();
  ctx.adjacency = g.adjacency();
  ctx.connectivity = connectivity;
  const Index n = ctx.adjacency.rows();
  const Matrix closed = ctx.adjacency + Matrix::Identity(n, n);
  ctx.operand.normalized = normalize_with_self_loops(closed);
  if (connectivity == PoolConnectivity::Squared)
    ctx.operand.pool_support = ((closed * closed).array() > 0.0).cast<double>().matrix();
  else
    ctx.operand.pool_support = closed;
  return ctx;
}

namespace {

Var activate(Var v, Activation act) { return act == Activation::Relu ? ops::relu(v) : v; }

}  // namespace

Var gcn_layer(Var a_norm, Var h0, Var w, Activation act) {
  if (h0.cols() != w.rows())
    throw DimensionError("gcn_layer: H0 has " + std::to_string(h0.cols()) +
                         " features but W expects " + std::to_string(w.rows()));
  if (a_norm.rows() != a_norm.cols() || a_norm.cols() != h0.rows())
    throw DimensionError("gcn_layer: adjacency does not match node count");
  return activate(ops::matmul(a_norm, ops::matmul(h0, w)), act);
}

Var gcn_layer(Var a_norm, Var h0, Var w, Var bias, Activation act) {
  if (h0.cols() != w.rows())
    throw DimensionError("gcn_layer: H0 has " + std::to_string(h0.cols()) +
                         " features but W expects " + std::to_string(w.rows()));
  if (a_norm.rows() != a_norm.cols() || a_norm.cols() != h0.rows())
    throw DimensionError("gcn_layer: adjacency does not match node count");
  return activate(ops::add_row_bias(ops::matmul(a_norm, ops::matmul(h0, w)), bias), act);
}

Var projection_scores(Var h, Var p) {
  if (p.cols() != 1 || p.rows() != h.cols())
    throw DimensionError("gpool: projection vector length must equal feature count");
  const double norm = p.value().norm();
  if (!(norm > 0.0)) throw DomainError("gpool: projection vector has zero norm");
  const std::array in{h, p};
  return h.tape()->record(h.value() * p.value() / norm, in, [h, p, norm](Tape& t, const Matrix& g) {
    const Matrix& pv = p.value();
    if (t.requires_grad(h.id())) t.accumulate(h, g * pv.transpose() / norm);
    if (t.requires_grad(p.id())) {
      const Matrix htg = h.value().transpose() * g;
      const double proj = (pv.transpose() * htg)(0, 0);
      t.accumulate(p, htg / norm - pv * (proj / (norm * norm * norm)));
    }
  });
}

PoolOutput gpool(const GraphOperand& graph, Var h, Var p, Index k) {
  const Index n = h.rows();
  if (graph.num_nodes() != n) throw DimensionError("gpool: graph does not match feature rows");
  if (k < 1 || k > n) throw InvalidArgument("gpool: k must lie in [1, N]");
  Var scores = projection_scores(h, p);

  PoolRecord rec;
  rec.parent_size = n;
  rec.scores = scores.value().col(0);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return rec.scores(a) > rec.scores(b); });
  if (k < n) {
    const Index last = order[std::size_t(k - 1)], first_out = order[std::size_t(k)];
    // Identical rows (e.g. two all-zero ReLU rows) stay tied under any
    // parameter perturbation, so the index tie-break does not flip.
    if (h.value().row(last) != h.value().row(first_out))
      h.tape()->note_margin(0.5 * (rec.scores(last) - rec.scores(first_out)));
  }
  rec.selected.assign(order.begin(), order.begin() + k);

  Var gate = ops::sigmoid(ops::gather_rows(scores, rec.selected));
  Var pooled = ops::scale_rows(ops::gather_rows(h, rec.selected), gate);

  GraphOperand sub;
  sub.pool_support.resize(k, k);
  for (Index a = 0; a < k; ++a)
    for (Index b = 0; b < k; ++b)
      sub.pool_support(a, b) = graph.pool_support(rec.selected[std::size_t(a)], rec.selected[std::size_t(b)]);
  sub.normalized = normalize_with_self_loops(sub.pool_support);
  return {pooled, std::move(sub), std::move(rec)};
}

Var gunpool(Var h_pooled, const PoolRecord& record) {
  if (Index(record.selected.size()) != h_pooled.rows())
    throw DimensionError("gunpool: pooled rows do not match the pool record");
  if (record.parent_size < h_pooled.rows())
    throw DimensionError("gunpool: record parent size smaller than pooled size");
  return ops::scatter_rows(h_pooled, record.selected, record.parent_size);
}

void register_gunet_block(ParameterStore& store, const std::string& prefix, Index in_features,
                          Index out_features) {
  auto add_gcn = [&](const std::string& name, Index fin, Index fout) {
    auto rng = store.init_rng(prefix + name + ".W");
    store.add(prefix + name + ".W", glorot_uniform(fin, fout, rng));
    store.add(prefix + name + ".b", Matrix::Zero(1, fout));
  };
  add_gcn(".down", in_features, out_features);
  auto rng = store.init_rng(prefix + ".pool.p");
  store.add(prefix + ".pool.p", unit_normal_vector(out_features, rng));
  add_gcn(".bottom", out_features, out_features);
  add_gcn(".up", out_features, out_features);
}

Var gunet_block(Tape& tape, ParameterStore& store, const std::string& prefix,
                const GraphOperand& graph, Var h_in, Activation out_act) {
  auto param = [&](const std::string& name) { return tape.parameter(store, prefix + name); };
  Var a = tape.constant(graph.normalized);
  Var down = gcn_layer(a, h_in, param(".down.W"), param(".down.b"), Activation::Relu);
  const Index k = (graph.num_nodes() + 1) / 2;
  PoolOutput pooled = gpool(graph, down, param(".pool.p"), k);
  Var a_pooled = tape.constant(pooled.graph.normalized);
  Var bottom = gcn_layer(a_pooled, pooled.h, param(".bottom.W"), param(".bottom.b"), Activation::Relu);
  Var restored = ops::add(gunpool(bottom, pooled.record), down);
  return gcn_layer(a, restored, param(".up.W"), param(".up.b"), out_act);
}

Var gaussian_sample(Var mu, Var sigma, const Matrix& eps) {
  if (mu.rows() != sigma.rows() || mu.cols() != sigma.cols() || eps.rows() != mu.rows() ||
      eps.cols() != mu.cols())
    throw DimensionError("gaussian_sample: mu, sigma and eps shapes differ");
  if ((sigma.value().array() <= 0.0).any()) throw DomainError("gaussian_sample: sigma must be > 0");
  return ops::add(mu, ops::mul(sigma, mu.tape()->constant(eps)));
}

Var gaussian_sample(Var mu, Var sigma, Rng& rng) {
  Matrix eps(mu.rows(), mu.cols());
  for (Index k = 0; k < eps.size(); ++k) eps(k) = rng.normal();
  return gaussian_sample(mu, sigma, eps);
}

Var dense_layer(Var v, Var w, Var b, Activation act) {
  if (v.rows() != 1 || v.cols() != w.rows())
    throw DimensionError("dense_layer: input length does not match weight rows");
  if (b.rows() != 1 || b.cols() != w.cols())
    throw DimensionError("dense_layer: bias length does not match weight cols");
  return activate(ops::add(ops::matmul(v, w), b), act);
}

Var conv1d(Var h, Var kernel, Var bias, Index kernel_size, Index padding) {
  const Index len = h.rows();
  const Index cin = h.cols();
  const Index cout = kernel.rows();
  if (len < 1) throw DimensionError("conv1d: empty input");
  if (kernel.cols() != cin * kernel_size)
    throw DimensionError("conv1d: kernel expects " + std::to_string(kernel.cols() / std::max<Index>(kernel_size, 1)) +
                         " input channels, got " + std::to_string(cin));
  if (bias.rows() != 1 || bias.cols() != cout) throw DimensionError("conv1d: bias must be 1 x C_out");
  const Index out_len = len + 2 * padding - kernel_size + 1;
  if (out_len < 1) throw DimensionError("conv1d: input shorter than kernel");

  // im2col: patches(l, c*K + k) = h(l + k - padding, c)
  Matrix patches = Matrix::Zero(out_len, cin * kernel_size);
  for (Index l = 0; l < out_len; ++l)
    for (Index c = 0; c < cin; ++c)
      for (Index k = 0; k < kernel_size; ++k) {
        const Index src = l + k - padding;
        if (src >= 0 && src < len) patches(l, c * kernel_size + k) = h.value()(src, c);
      }
  Matrix out = patches * kernel.value().transpose();
  out.rowwise() += bias.value().row(0);
  const std::array in{h, kernel, bias};
  return h.tape()->record(
      std::move(out), in,
      [h, kernel, bias, patches = std::move(patches), kernel_size, padding](Tape& t, const Matrix& g) {
        if (t.requires_grad(kernel.id())) t.accumulate(kernel, g.transpose() * patches);
        if (t.requires_grad(bias.id())) t.accumulate(bias, g.colwise().sum());
        if (t.requires_grad(h.id())) {
          const Matrix dpatch = g * kernel.value();
          Matrix dh = Matrix::Zero(h.rows(), h.cols());
          for (Index l = 0; l < dpatch.rows(); ++l)
            for (Index c = 0; c < h.cols(); ++c)
              for (Index k = 0; k < kernel_size; ++k) {
                const Index src = l + k - padding;
                if (src >= 0 && src < h.rows()) dh(src, c) += dpatch(l, c * kernel_size + k);
              }
          t.accumulate(h, dh);
        }
      });
}

Index conv_transpose_length(Index length, Index stride, Index kernel_size, Index padding) {
  return (length - 1) * stride + kernel_size - 2 * padding;
}

Var conv_transpose1d(Var x, Var weight, Var bias, Index in_channels, Index stride,
                     Index kernel_size, Index padding) {
  if (in_channels < 1 || x.cols() % in_channels != 0)
    throw DimensionError("conv_transpose1d: input width not a multiple of channel count");
  if (weight.rows() != in_channels || weight.cols() % kernel_size != 0)
    throw DimensionError("conv_transpose1d: weight must be C_in x (C_out * K)");
  const Index batch = x.rows();
  const Index lin = x.cols() / in_channels;
  const Index cout = weight.cols() / kernel_size;
  if (bias.rows() != 1 || bias.cols() != cout)
    throw DimensionError("conv_transpose1d: bias must be 1 x C_out");
  const Index lout = conv_transpose_length(lin, stride, kernel_size, padding);
  if (lout < 1) throw DimensionError("conv_transpose1d: non-positive output length");

  const Matrix& X = x.value();
  const Matrix& W = weight.value();
  Matrix out(batch, cout * lout);
  for (Index o = 0; o < cout; ++o) out.middleCols(o * lout, lout).setConstant(bias.value()(0, o));
  for (Index c = 0; c < in_channels; ++c)
    for (Index l = 0; l < lin; ++l)
      for (Index o = 0; o < cout; ++o)
        for (Index k = 0; k < kernel_size; ++k) {
          const Index j = l * stride + k - padding;
          if (j < 0 || j >= lout) continue;
          out.col(o * lout + j) += W(c, o * kernel_size + k) * X.col(c * lin + l);
        }

  const std::array in{x, weight, bias};
  return x.tape()->record(std::move(out), in,
                          [=](Tape& t, const Matrix& g) {
                            const Matrix& X = x.value();
                            const Matrix& W = weight.value();
                            Matrix dx = Matrix::Zero(X.rows(), X.cols());
                            Matrix dw = Matrix::Zero(W.rows(), W.cols());
                            for (Index c = 0; c < in_channels; ++c)
                              for (Index l = 0; l < lin; ++l)
                                for (Index o = 0; o < cout; ++o)
                                  for (Index k = 0; k < kernel_size; ++k) {
                                    const Index j = l * stride + k - padding;
                                    if (j < 0 || j >= lout) continue;
                                    const auto gcol = g.col(o * lout + j);
                                    dx.col(c * lin + l) += W(c, o * kernel_size + k) * gcol;
                                    dw(c, o * kernel_size + k) += gcol.dot(X.col(c * lin + l));
                                  }
                            t.accumulate(x, dx);
                            t.accumulate(weight, dw);
                            if (t.requires_grad(bias.id())) {
                              Matrix db(1, cout);
                              for (Index o = 0; o < cout; ++o) db(0, o) = g.middleCols(o * lout, lout).sum();
                              t.accumulate(bias, db);
                            }
                          });
}

Var batch_norm(Var x, Var gamma, Var beta, Index channels, bool training,
               const BatchNormState& state) {
  if (channels < 1 || x.cols() % channels != 0)
    throw DimensionError("batch_norm: width not a multiple of channel count");
  if (gamma.rows() != 1 || gamma.cols() != channels || beta.rows() != 1 || beta.cols() != channels)
    throw DimensionError("batch_norm: gamma/beta must be 1 x C");
  const Index len = x.cols() / channels;
  const double m = double(x.rows() * len);
  const Matrix& X = x.value();

  Matrix mean(1, channels), inv_std(1, channels);
  for (Index c = 0; c < channels; ++c) {
    auto block = X.middleCols(c * len, len);
    double mu, var;
    if (training) {
      mu = block.mean();
      var = (block.array() - mu).square().sum() / m;
      if (state.running_mean && state.running_var) {
        const double unbiased = m > 1 ? var * m / (m - 1) : var;
        (*state.running_mean)(0, c) = (1 - state.momentum) * (*state.running_mean)(0, c) + state.momentum * mu;
        (*state.running_var)(0, c) = (1 - state.momentum) * (*state.running_var)(0, c) + state.momentum * unbiased;
      }
    } else {
      if (!state.running_mean || !state.running_var)
        throw ContractError("batch_norm: inference mode needs running statistics");
      mu = (*state.running_mean)(0, c);
      var = (*state.running_var)(0, c);
    }
    mean(0, c) = mu;
    inv_std(0, c) = 1.0 / std::sqrt(var + state.eps);
  }

  Matrix xhat(X.rows(), X.cols());
  Matrix out(X.rows(), X.cols());
  for (Index c = 0; c < channels; ++c) {
    xhat.middleCols(c * len, len) = (X.middleCols(c * len, len).array() - mean(0, c)) * inv_std(0, c);
    out.middleCols(c * len, len) =
        (xhat.middleCols(c * len, len).array() * gamma.value()(0, c) + beta.value()(0, c)).matrix();
  }

  const std::array in{x, gamma, beta};
  return x.tape()->record(
      std::move(out), in,
      [x, gamma, beta, channels, len, m, training, inv_std, xhat = std::move(xhat)](Tape& t, const Matrix& g) {
        Matrix dx(g.rows(), g.cols());
        Matrix dgamma(1, channels), dbeta(1, channels);
        for (Index c = 0; c < channels; ++c) {
          const auto gc = g.middleCols(c * len, len);
          const auto xh = xhat.middleCols(c * len, len);
          dgamma(0, c) = gc.cwiseProduct(xh).sum();
          dbeta(0, c) = gc.sum();
          const Matrix dxhat = gc * gamma.value()(0, c);
          if (training) {
            const double s1 = dxhat.sum();
            const double s2 = dxhat.cwiseProduct(xh).sum();
            dx.middleCols(c * len, len) =
                ((dxhat.array() * m - s1 - xh.array() * s2) * (inv_std(0, c) / m)).matrix();
          } else {
            dx.middleCols(c * len, len) = dxhat * inv_std(0, c);
          }
        }
        t.accumulate(x, dx);
        t.accumulate(gamma, dgamma);
        t.accumulate(beta, dbeta);
      });
}

void register_transposed_block(ParameterStore& store, const std::string& prefix,
                               const TransposedBlockSpec& spec) {
  auto rng = store.init_rng(prefix + ".W");
  store.add(prefix + ".W", glorot_uniform(spec.in_channels * spec.kernel_size,
                                          spec.out_channels * spec.kernel_size, rng)
                               .topRows(spec.in_channels)
                               .eval());
  store.add(prefix + ".b", Matrix::Zero(1, spec.out_channels));
  store.add(prefix + ".bn.gamma", Matrix::Ones(1, spec.out_channels));
  store.add(prefix + ".bn.beta", Matrix::Zero(1, spec.out_channels));
  store.add_buffer(prefix + ".bn.running_mean", Matrix::Zero(1, spec.out_channels));
  store.add_buffer(prefix + ".bn.running_var", Matrix::Ones(1, spec.out_channels));
}

Var conv1d_transposed_block(Tape& tape, ParameterStore& store, const std::string& prefix,
                            const TransposedBlockSpec& spec, Var x, bool training) {
  Var y = conv_transpose1d(x, tape.parameter(store, prefix + ".W"), tape.parameter(store, prefix + ".b"),
                           spec.in_channels, spec.stride, spec.kernel_size, spec.padding);
  BatchNormState bn{&store.buffer(prefix + ".bn.running_mean"), &store.buffer(prefix + ".bn.running_var")};
  y = batch_norm(y, tape.parameter(store, prefix + ".bn.gamma"), tape.parameter(store, prefix + ".bn.beta"),
                 spec.out_channels, training, bn);
  return ops::relu(y);
}

}  // namespace netdemix
