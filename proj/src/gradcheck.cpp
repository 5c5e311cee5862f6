#include "grec/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "grec/error.hpp"

namespace grec::nn {

namespace {

double checked_loss(const LossFunction& loss, ParameterStore& params, GradBuffer* grads) {
  const double v = loss(params, grads);
  if (!std::isfinite(v)) throw Error("gradient check: loss is not finite");
  return v;
}

}  // namespace

GradientCheckReport gradient_check(const LossFunction& loss, ParameterStore& params,
                                   const GradientCheckOptions& options) {
  if (options.epsilon < 1e-6 || options.epsilon > 1e-3)
    throw Error("gradient check: epsilon must lie in [1e-6, 1e-3]");
  if (!(options.scale_floor > 0.0)) throw Error("gradient check: scale_floor must be positive");
  if (options.sample_per_param != 0 && options.sample_per_param < 32)
    throw Error("gradient check: sample at least 32 entries per parameter");

  GradBuffer analytic = params.zero_grads();
  checked_loss(loss, params, &analytic);

  GradientCheckReport report;
  report.tolerance = options.tolerance;
  std::mt19937_64 rng(options.seed);

  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params.at(pi);
    if (!p.trainable) continue;
    std::vector<std::size_t> indices(p.value.size());
    std::iota(indices.begin(), indices.end(), 0);
    if (options.sample_per_param != 0 && indices.size() > options.sample_per_param) {
      std::shuffle(indices.begin(), indices.end(), rng);
      indices.resize(options.sample_per_param);
      std::sort(indices.begin(), indices.end());
    }

    ParameterCheck check;
    check.name = p.name;
    for (std::size_t k : indices) {
      const double saved = p.value[k];
      p.value[k] = saved + options.epsilon;
      const double up = checked_loss(loss, params, nullptr);
      p.value[k] = saved - options.epsilon;
      const double down = checked_loss(loss, params, nullptr);
      p.value[k] = saved;

      const double numeric = (up - down) / (2.0 * options.epsilon);
      const double a = analytic[pi][k];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), options.scale_floor});
      ++check.checked;
      if (check.checked == 1 || rel > check.max_rel_error) {
        check.max_rel_error = rel;
        check.worst_index = k;
        check.worst_analytic = a;
        check.worst_numeric = numeric;
      }
    }
    if (check.max_rel_error >= report.max_rel_error) {
      report.max_rel_error = check.max_rel_error;
      report.worst_param = check.name;
    }
    report.params.push_back(std::move(check));
  }
  report.passed = report.max_rel_error < options.tolerance;
  return report;
}

}  // namespace grec::nn
