#include "netdemix/params.hpp"

#include <cmath>
#include <functional>

#include "netdemix/errors.hpp"

namespace netdemix {

Matrix& ParameterStore::add(const std::string& name, Matrix init) {
  if (entries_.count(name)) throw InvalidArgument("parameter '" + name + "' already exists");
  Entry e{std::move(init), {}};
  e.grad = Matrix::Zero(e.value.rows(), e.value.cols());
  return entries_.emplace(name, std::move(e)).first->second.value;
}

const ParameterStore::Entry& ParameterStore::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw InvalidArgument("unknown parameter '" + name + "'");
  return it->second;
}

Matrix& ParameterStore::value(const std::string& name) {
  return const_cast<Entry&>(entry(name)).value;
}

const Matrix& ParameterStore::value(const std::string& name) const { return entry(name).value; }

const Matrix& ParameterStore::grad(const std::string& name) const { return entry(name).grad; }

void ParameterStore::accumulate_grad(const std::string& name, const Matrix& g) {
  auto& e = const_cast<Entry&>(entry(name));
  if (g.rows() != e.grad.rows() || g.cols() != e.grad.cols())
    throw DimensionError("gradient shape mismatch for '" + name + "'");
  e.grad += g;
  grads_ready_ = true;
}

void ParameterStore::zero_grad() {
  for (auto& [name, e] : entries_) e.grad.setZero();
  grads_ready_ = false;
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  for (const auto& [name, e] : entries_) out.push_back(name);
  return out;
}

std::size_t ParameterStore::num_scalars() const {
  std::size_t n = 0;
  for (const auto& [name, e] : entries_) n += std::size_t(e.value.size());
  return n;
}

Matrix& ParameterStore::add_buffer(const std::string& name, Matrix init) {
  if (buffers_.count(name)) throw InvalidArgument("buffer '" + name + "' already exists");
  return buffers_.emplace(name, std::move(init)).first->second;
}

Matrix& ParameterStore::buffer(const std::string& name) {
  auto it = buffers_.find(name);
  if (it == buffers_.end()) throw InvalidArgument("unknown buffer '" + name + "'");
  return it->second;
}

const Matrix& ParameterStore::buffer(const std::string& name) const {
  auto it = buffers_.find(name);
  if (it == buffers_.end()) throw InvalidArgument("unknown buffer '" + name + "'");
  return it->second;
}

std::vector<std::string> ParameterStore::buffer_names() const {
  std::vector<std::string> out;
  for (const auto& [name, b] : buffers_) out.push_back(name);
  return out;
}

void ParameterStore::round_to_float() {
  auto round = [](Matrix& m) { m = m.cast<float>().cast<double>(); };
  for (auto& [name, e] : entries_) round(e.value);
  for (auto& [name, b] : buffers_) round(b);
}

Rng ParameterStore::init_rng(const std::string& name) const {
  // FNV-1a over the name keeps initialization independent of registration order.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) h = (h ^ c) * 0x100000001b3ULL;
  return Rng(seed_).split(h);
}

Matrix glorot_uniform(Index fan_in, Index fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
  Matrix w(fan_in, fan_out);
  for (Index j = 0; j < fan_out; ++j)
    for (Index i = 0; i < fan_in; ++i) w(i, j) = (2.0 * rng.uniform() - 1.0) * limit;
  return w;
}

Matrix unit_normal_vector(Index length, Rng& rng) {
  Matrix p(length, 1);
  for (Index i = 0; i < length; ++i) p(i, 0) = rng.normal();
  const double norm = p.norm();
  if (norm > 0.0) p /= norm;
  return p;
}

void adam_step(ParameterStore& store, OptimizerState& state, const AdamSettings& s) {
  if (!store.grads_ready())
    throw ContractError("adam_step called before gradients were populated");
  ++state.step;
  const double t = double(state.step);
  const double c1 = 1.0 - std::pow(s.beta1, t);
  const double c2 = 1.0 - std::pow(s.beta2, t);
  for (const auto& name : store.names()) {
    const Matrix& g = store.grad(name);
    auto& mom = state.moments[name];
    if (mom.m.size() == 0) {
      mom.m = Matrix::Zero(g.rows(), g.cols());
      mom.v = Matrix::Zero(g.rows(), g.cols());
    }
    if (mom.m.rows() != g.rows() || mom.m.cols() != g.cols())
      throw DimensionError("optimizer state shape mismatch for '" + name + "'");
    mom.m = s.beta1 * mom.m + (1.0 - s.beta1) * g;
    mom.v = s.beta2 * mom.v + (1.0 - s.beta2) * g.cwiseAbs2();
    Matrix& w = store.value(name);
    w.array() -= s.lr * (mom.m.array() / c1) / ((mom.v.array() / c2).sqrt() + s.eps);
  }
}

}  // namespace netdemix
