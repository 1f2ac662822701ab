#include "sinkcal/duality.hpp"

#include <cmath>

namespace sinkcal {

namespace {

void check_multiplier_shapes(const SignedTensor& q, const Multipliers& m) {
  if (m.lambdas.size() != q.rank()) {
    throw std::invalid_argument("multipliers cover " +
                                std::to_string(m.lambdas.size()) +
                                " axes, tensor has " + std::to_string(q.rank()));
  }
  for (std::size_t k = 0; k < q.rank(); ++k) {
    if (m.lambdas[k].size() != q.shape()[k]) {
      throw std::invalid_argument(
          "multiplier vector for axis " + std::to_string(k) + " has length " +
          std::to_string(m.lambdas[k].size()) + ", expected " +
          std::to_string(q.shape()[k]));
    }
  }
}

void check_target_shapes(const SignedTensor& q, const MarginalTargets& targets) {
  if (targets.axes() != q.rank()) {
    throw std::invalid_argument("targets cover " + std::to_string(targets.axes()) +
                                " axes, tensor has " + std::to_string(q.rank()));
  }
  for (std::size_t k = 0; k < q.rank(); ++k) {
    if (targets.targets[k].size() != q.shape()[k]) {
      throw std::invalid_argument(
          "targets for axis " + std::to_string(k) + " have length " +
          std::to_string(targets.targets[k].size()) + ", expected " +
          std::to_string(q.shape()[k]));
    }
  }
}

}  // namespace

Multipliers Multipliers::build(std::vector<std::vector<double>> lambdas) {
  for (std::size_t axis = 0; axis < lambdas.size(); ++axis) {
    for (double v : lambdas[axis]) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("multiplier for axis " +
                                    std::to_string(axis) + " is not finite");
      }
    }
  }
  return Multipliers{std::move(lambdas)};
}

Multipliers Multipliers::zeros(const std::vector<std::size_t>& shape) {
  std::vector<std::vector<double>> lambdas;
  lambdas.reserve(shape.size());
  for (std::size_t n : shape) lambdas.emplace_back(n, 0.0);
  return Multipliers{std::move(lambdas)};
}

double relative_entropy(const SignedTensor& p, const SignedTensor& q) {
  if (p.shape() != q.shape()) {
    throw std::invalid_argument("entropy operands have different shapes");
  }
  double total = 0.0;
  for (std::size_t flat = 0; flat < q.size(); ++flat) {
    const double pv = p[flat];
    const double qv = q[flat];
    if (qv == 0.0) {
      if (pv != 0.0) {
        throw std::invalid_argument(
            "support violation at flat index " + std::to_string(flat) +
            " (index " + index_to_string(unravel_index(flat, q.shape())) +
            "): P is nonzero where Q is zero, entropy is infinite");
      }
      continue;
    }
    if (pv == 0.0) continue;  // x log x -> 0
    if ((pv > 0.0) != (qv > 0.0)) {
      throw std::invalid_argument(
          "sign mismatch at flat index " + std::to_string(flat) + " (index " +
          index_to_string(unravel_index(flat, q.shape())) +
          "): P must inherit Q's sign");
    }
    const double mag = std::abs(pv);
    total += mag * (std::log(mag / std::abs(qv)) - 1.0);
  }
  if (!std::isfinite(total)) {
    throw NumericalError("relative entropy accumulation is not finite");
  }
  return total;
}

double dual_value(const SignedTensor& q, const MarginalTargets& targets,
                  const Multipliers& m) {
  check_multiplier_shapes(q, m);
  check_target_shapes(q, targets);
  const std::size_t rank = q.rank();
  std::vector<std::size_t> index(rank, 0);
  double mass = 0.0;
  for (std::size_t flat = 0; flat < q.size(); ++flat) {
    const double v = q[flat];
    if (v != 0.0) {
      double sum = 0.0;
      for (std::size_t k = 0; k < rank; ++k) sum += m.lambdas[k][index[k]];
      mass += std::abs(v) * std::exp(v > 0.0 ? -sum : sum);
    }
    for (std::size_t k = rank; k-- > 0;) {
      if (++index[k] < q.shape()[k]) break;
      index[k] = 0;
    }
  }
  double pairing = 0.0;
  for (std::size_t k = 0; k < rank; ++k) {
    for (std::size_t i = 0; i < q.shape()[k]; ++i) {
      pairing += m.lambdas[k][i] * targets.targets[k][i];
    }
  }
  const double g = -mass - pairing;
  if (!std::isfinite(g)) {
    throw NumericalError("dual value is not finite");
  }
  return g;
}

std::vector<std::vector<double>> dual_gradient(const SignedTensor& q,
                                               const MarginalTargets& targets,
                                               const Multipliers& m) {
  check_multiplier_shapes(q, m);
  check_target_shapes(q, targets);
  const std::size_t rank = q.rank();
  std::vector<std::vector<double>> grad;
  grad.reserve(rank);
  for (std::size_t k = 0; k < rank; ++k) grad.emplace_back(q.shape()[k], 0.0);

  std::vector<std::size_t> index(rank, 0);
  for (std::size_t flat = 0; flat < q.size(); ++flat) {
    const double v = q[flat];
    if (v != 0.0) {
      double sum = 0.0;
      for (std::size_t k = 0; k < rank; ++k) sum += m.lambdas[k][index[k]];
      // signed posterior entry: sign(Q) * |Q| * exp(-sign(Q) * sum)
      const double entry = v * std::exp(v > 0.0 ? -sum : sum);
      if (!std::isfinite(entry)) {
        throw NumericalError("posterior entry at index " +
                             index_to_string(index) +
                             " is not finite in dual gradient");
      }
      for (std::size_t k = 0; k < rank; ++k) grad[k][index[k]] += entry;
    }
    for (std::size_t k = rank; k-- > 0;) {
      if (++index[k] < q.shape()[k]) break;
      index[k] = 0;
    }
  }
  for (std::size_t k = 0; k < rank; ++k) {
    for (std::size_t i = 0; i < q.shape()[k]; ++i) {
      grad[k][i] -= targets.targets[k][i];
    }
  }
  return grad;
}

Multipliers multipliers_from_scaling(const ScalingState& s) {
  std::vector<std::vector<double>> lambdas;
  lambdas.reserve(s.alphas.size());
  for (std::size_t axis = 0; axis < s.alphas.size(); ++axis) {
    std::vector<double> row;
    row.reserve(s.alphas[axis].size());
    for (double a : s.alphas[axis]) {
      if (!(a > 0.0) || !std::isfinite(a)) {
        throw std::invalid_argument("scaling factor for axis " +
                                    std::to_string(axis) +
                                    " must be strictly positive and finite");
      }
      row.push_back(-std::log(a));
    }
    lambdas.push_back(std::move(row));
  }
  return Multipliers::build(std::move(lambdas));
}

ScalingState scaling_from_multipliers(const Multipliers& m) {
  std::vector<std::vector<double>> alphas;
  alphas.reserve(m.lambdas.size());
  for (std::size_t axis = 0; axis < m.lambdas.size(); ++axis) {
    std::vector<double> row;
    row.reserve(m.lambdas[axis].size());
    for (double l : m.lambdas[axis]) {
      const double a = std::exp(-l);
      if (!std::isfinite(a) || a <= 0.0) {
        throw NumericalError("exp(-lambda) overflow or underflow on axis " +
                             std::to_string(axis));
      }
      row.push_back(a);
    }
    alphas.push_back(std::move(row));
  }
  return ScalingState::build(std::move(alphas));
}

}  // namespace sinkcal
