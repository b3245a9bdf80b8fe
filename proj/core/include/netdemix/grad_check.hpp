#pragma once

#include <functional>
#include <string>

#include "netdemix/params.hpp"
#include "netdemix/tape.hpp"

namespace netdemix {

struct GradCheckOptions {
  double step = 1e-5;
  /// Relative errors use max(|analytic|, |numeric|, abs_floor) as denominator.
  double abs_floor = 1e-6;
  /// Check at most this many entries per array (evenly strided); 0 = all.
  std::size_t max_entries_per_array = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::string worst_entry;
  std::size_t entries_checked = 0;
  /// Smallest kink margin over all evaluations; below `step` means some
  /// finite difference straddled a ReLU/hinge/top-k switch.
  double min_margin = 0.0;
  bool finite = true;

  bool near_kink(double step) const { return min_margin <= step; }
  bool passed(double tolerance) const { return finite && max_rel_error < tolerance; }
};

/// Builds the scalar loss on a fresh tape; must read every checked array via
/// tape.parameter(store, name) and be deterministic.
using LossBuilder = std::function<Var(Tape&)>;

/// Compares tape gradients of every array in `store` with central finite
/// differences of `loss`.
GradCheckReport grad_check(ParameterStore& store, const LossBuilder& loss,
                           const GradCheckOptions& opts = {});

}  // namespace netdemix
