#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "netdemix/rng.hpp"
#include "netdemix/types.hpp"

namespace netdemix {

/// Named trainable arrays, each with a gradient slot of identical shape,
/// plus non-trainable buffers (batch-norm running statistics).
class ParameterStore {
 public:
  explicit ParameterStore(std::uint64_t seed = 0) : seed_(seed) {}

  /// Registers a new trainable array. Throws InvalidArgument on duplicates.
  Matrix& add(const std::string& name, Matrix init);
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }

  Matrix& value(const std::string& name);
  const Matrix& value(const std::string& name) const;
  const Matrix& grad(const std::string& name) const;

  /// Adds g to the gradient slot and marks gradients as populated.
  void accumulate_grad(const std::string& name, const Matrix& g);
  /// Zeros every gradient slot and clears the populated mark.
  void zero_grad();
  bool grads_ready() const noexcept { return grads_ready_; }

  /// Sorted parameter names.
  std::vector<std::string> names() const;
  std::size_t num_scalars() const;

  Matrix& add_buffer(const std::string& name, Matrix init);
  bool has_buffer(const std::string& name) const { return buffers_.count(name) != 0; }
  Matrix& buffer(const std::string& name);
  const Matrix& buffer(const std::string& name) const;
  std::vector<std::string> buffer_names() const;

  /// Rounds every parameter and buffer to the nearest float32.
  void round_to_float();

  std::uint64_t seed() const noexcept { return seed_; }
  /// Generator for initialization of the array registered as `name`.
  Rng init_rng(const std::string& name) const;

 private:
  struct Entry {
    Matrix value;
    Matrix grad;
  };
  const Entry& entry(const std::string& name) const;

  std::map<std::string, Entry> entries_;
  std::map<std::string, Matrix> buffers_;
  bool grads_ready_ = false;
  std::uint64_t seed_;
};

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(Index fan_in, Index fan_out, Rng& rng);
/// Standard normal vector scaled to unit length.
Matrix unit_normal_vector(Index length, Rng& rng);

struct AdamSettings {
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  struct Moments {
    Matrix m;
    Matrix v;
  };
  std::map<std::string, Moments> moments;
  std::uint64_t step = 0;
};

/// Bias-corrected Adam update in place; increments state.step.
/// Throws ContractError if the store's gradients are not populated.
void adam_step(ParameterStore& store, OptimizerState& state, const AdamSettings& s);

}  // namespace netdemix
