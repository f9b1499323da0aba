#pragma once

#include <cstdint>
#include <span>

#include "dermkit/loss.hpp"
#include "dermkit/network.hpp"
#include "dermkit/parameters.hpp"

namespace dermkit {

struct GradCheckOptions {
  double eps = 1e-5;
  // Entries checked per trainable tensor (all entries if the tensor is
  // smaller).
  int samples_per_tensor = 12;
  std::uint64_t seed = 0;
  // Denominator floor of the relative error. Some gradients are exactly
  // zero (a conv bias feeding batch norm); their central difference is
  // pure roundoff, a few ulp(L) / (2 eps) ~ 1e-10 in deep stacks, and must
  // not count as a relative error of 1. Absolute disagreements above
  // 1e-9 still exceed a 1e-4 relative tolerance.
  double abs_floor = 1e-5;
  // Skip entries whose +eps and -eps evaluations take different relu signs
  // or max-pool winners: the loss is not differentiable between them, so
  // the central difference does not estimate the gradient there. Skipped
  // entries are replaced by further random entries of the same tensor.
  bool skip_kinks = true;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  int checked = 0;
  int skipped_kinks = 0;
  // Tensors for which every candidate entry straddled a kink.
  int unchecked_tensors = 0;
};

// Compares backward() against central differences
//   (L(theta + eps) - L(theta - eps)) / (2 eps)
// of the train-mode weighted softmax loss, entry by entry on a seeded
// subset of the parameters. The error of one entry is
//   |analytic - numeric| / max(|analytic|, |numeric|, abs_floor).
GradCheckReport grad_check(const NetworkSpec& net, const Parameters& params,
                           const Tensor& batch, std::span<const int> labels,
                           const ClassWeights& weights,
                           const GradCheckOptions& options = {});

// grad_check(...).max_rel_error
double finite_diff_grad_check(const NetworkSpec& net, const Parameters& params,
                              const Tensor& batch, std::span<const int> labels,
                              const ClassWeights& weights,
                              const GradCheckOptions& options = {});

}  // namespace dermkit
