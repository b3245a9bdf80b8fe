#include "netdemix/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "netdemix/errors.hpp"

namespace netdemix {

GradCheckReport grad_check(ParameterStore& store, const LossBuilder& loss,
                           const GradCheckOptions& opts) {
  GradCheckReport report;
  double margin = std::numeric_limits<double>::infinity();

  auto evaluate = [&]() {
    Tape tape;
    Var out = loss(tape);
    if (out.rows() != 1 || out.cols() != 1) throw DimensionError("grad_check: loss must be scalar");
    margin = std::min(margin, tape.min_margin());
    return out.value()(0, 0);
  };

  store.zero_grad();
  {
    Tape tape;
    Var out = loss(tape);
    if (out.rows() != 1 || out.cols() != 1) throw DimensionError("grad_check: loss must be scalar");
    margin = std::min(margin, tape.min_margin());
    if (!std::isfinite(out.value()(0, 0))) report.finite = false;
    tape.backward(out);
  }

  for (const auto& name : store.names()) {
    Matrix& value = store.value(name);
    const Matrix analytic = store.grad(name);
    const Index total = value.size();
    Index stride = 1;
    if (opts.max_entries_per_array > 0 && std::size_t(total) > opts.max_entries_per_array)
      stride = (total + Index(opts.max_entries_per_array) - 1) / Index(opts.max_entries_per_array);
    for (Index k = 0; k < total; k += stride) {
      const double orig = value(k);
      value(k) = orig + opts.step;
      const double up = evaluate();
      value(k) = orig - opts.step;
      const double down = evaluate();
      value(k) = orig;
      const double numeric = (up - down) / (2.0 * opts.step);
      const double a = analytic(k);
      if (!std::isfinite(numeric) || !std::isfinite(a)) {
        report.finite = false;
        continue;
      }
      const double abs_err = std::abs(a - numeric);
      const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), opts.abs_floor});
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_entry = name + "[" + std::to_string(k) + "]";
      }
      ++report.entries_checked;
    }
  }
  store.zero_grad();
  report.min_margin = margin;
  return report;
}

}  // namespace netdemix
