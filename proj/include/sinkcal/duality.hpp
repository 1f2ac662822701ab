#pragma once

#include <vector>

#include "sinkcal/tensor.hpp"

namespace sinkcal {

/// Lagrange multipliers, one finite vector per axis; related to scaling
/// factors by alpha = exp(-lambda).
struct Multipliers {
  static Multipliers build(std::vector<std::vector<double>> lambdas);
  static Multipliers zeros(const std::vector<std::size_t>& shape);

  std::vector<std::vector<double>> lambdas;
};

/// Signed relative entropy sum |P| * (log(|P|/|Q|) - 1) over entries with
/// Q != 0; entries with P == 0 contribute 0. Requires P to inherit Q's sign
/// pattern and to vanish wherever Q does; violations throw
/// std::invalid_argument naming the first offending index.
double relative_entropy(const SignedTensor& p, const SignedTensor& q);

/// Dual objective g(lambda) = -sum of the magnitude posterior
/// |Q|*prod_l alpha_l^{sign(Q)} at alpha = exp(-lambda), minus
/// sum_l lambda_l . target_l. Concave in lambda.
double dual_value(const SignedTensor& q, const MarginalTargets& targets,
                  const Multipliers& m);

/// Gradient of dual_value: per axis, the signed marginal of the assembled
/// posterior minus the targets.
std::vector<std::vector<double>> dual_gradient(const SignedTensor& q,
                                               const MarginalTargets& targets,
                                               const Multipliers& m);

/// lambda = -log(alpha) elementwise; requires strictly positive factors.
Multipliers multipliers_from_scaling(const ScalingState& s);

/// alpha = exp(-lambda) elementwise; throws NumericalError on overflow.
ScalingState scaling_from_multipliers(const Multipliers& m);

}  // namespace sinkcal
