#include "sinkcal/tensor.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace sinkcal {

std::vector<std::size_t> row_major_strides(const std::vector<std::size_t>& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t k = shape.size(); k-- > 1;) {
    strides[k - 1] = strides[k] * shape[k];
  }
  return strides;
}

std::vector<std::size_t> unravel_index(std::size_t flat,
                                       const std::vector<std::size_t>& shape) {
  std::vector<std::size_t> index(shape.size(), 0);
  for (std::size_t k = shape.size(); k-- > 0;) {
    index[k] = flat % shape[k];
    flat /= shape[k];
  }
  return index;
}

std::string index_to_string(const std::vector<std::size_t>& index) {
  std::ostringstream out;
  out << '[';
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (k > 0) out << ", ";
    out << index[k];
  }
  out << ']';
  return out.str();
}

SignedTensor SignedTensor::build(std::vector<std::size_t> shape,
                                 std::vector<double> values) {
  if (shape.empty()) {
    throw std::invalid_argument("tensor shape must have at least one axis");
  }
  std::size_t expected = 1;
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (shape[k] == 0) {
      throw std::invalid_argument("tensor shape entry " + std::to_string(k) +
                                  " must be positive");
    }
    if (expected > std::numeric_limits<std::size_t>::max() / shape[k]) {
      throw std::invalid_argument("tensor shape product overflows");
    }
    expected *= shape[k];
  }
  if (values.size() != expected) {
    throw std::invalid_argument(
        "tensor value count " + std::to_string(values.size()) +
        " does not match shape product " + std::to_string(expected));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw std::invalid_argument(
          "tensor entry at flat index " + std::to_string(i) + " (index " +
          index_to_string(unravel_index(i, shape)) + ") is not finite");
    }
    if (values[i] == 0.0) values[i] = 0.0;  // canonicalize -0.0
  }
  SignedTensor t;
  t.shape_ = std::move(shape);
  t.values_ = std::move(values);
  return t;
}

std::size_t SignedTensor::flat_index(const std::vector<std::size_t>& index) const {
  if (index.size() != shape_.size()) {
    throw std::out_of_range("index rank " + std::to_string(index.size()) +
                            " does not match tensor rank " +
                            std::to_string(shape_.size()));
  }
  std::size_t flat = 0;
  for (std::size_t k = 0; k < shape_.size(); ++k) {
    if (index[k] >= shape_[k]) {
      throw std::out_of_range("index " + index_to_string(index) +
                              " out of bounds for axis " + std::to_string(k));
    }
    flat = flat * shape_[k] + index[k];
  }
  return flat;
}

double SignedTensor::at(const std::vector<std::size_t>& index) const {
  return values_[flat_index(index)];
}

MarginalTargets MarginalTargets::build(std::vector<std::vector<double>> targets) {
  if (targets.empty()) {
    throw std::invalid_argument("marginal targets must cover at least one axis");
  }
  for (std::size_t axis = 0; axis < targets.size(); ++axis) {
    if (targets[axis].empty()) {
      throw std::invalid_argument("marginal targets for axis " +
                                  std::to_string(axis) + " are empty");
    }
    for (std::size_t i = 0; i < targets[axis].size(); ++i) {
      const double v = targets[axis][i];
      if (!std::isfinite(v) || v <= 0.0) {
        throw std::invalid_argument(
            "marginal target for axis " + std::to_string(axis) + " index " +
            std::to_string(i) + " must be strictly positive and finite, got " +
            std::to_string(v));
      }
    }
  }
  return MarginalTargets{std::move(targets)};
}

ScalingState ScalingState::build(std::vector<std::vector<double>> alphas) {
  for (std::size_t axis = 0; axis < alphas.size(); ++axis) {
    for (std::size_t i = 0; i < alphas[axis].size(); ++i) {
      const double a = alphas[axis][i];
      if (!std::isfinite(a) || a <= 0.0) {
        throw std::invalid_argument(
            "scaling factor for axis " + std::to_string(axis) + " index " +
            std::to_string(i) + " must be strictly positive and finite");
      }
    }
  }
  return ScalingState{std::move(alphas)};
}

ScalingState ScalingState::unit(const std::vector<std::size_t>& shape) {
  std::vector<std::vector<double>> alphas;
  alphas.reserve(shape.size());
  for (std::size_t n : shape) alphas.emplace_back(n, 1.0);
  return ScalingState{std::move(alphas)};
}

SignSplit sign_split(const SignedTensor& q) {
  std::vector<double> plus(q.size(), 0.0);
  std::vector<double> minus(q.size(), 0.0);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double v = q[i];
    if (v > 0.0) {
      plus[i] = v;
    } else if (v < 0.0) {
      minus[i] = -v;
    }
  }
  return SignSplit{SignedTensor::build(q.shape(), std::move(plus)),
                   SignedTensor::build(q.shape(), std::move(minus))};
}

std::vector<double> axis_marginal(const SignedTensor& t, std::size_t axis,
                                  Summation mode) {
  if (axis >= t.rank()) {
    throw std::out_of_range("axis " + std::to_string(axis) +
                            " out of range for rank " + std::to_string(t.rank()));
  }
  const std::size_t n = t.shape()[axis];
  const std::size_t stride = row_major_strides(t.shape())[axis];
  std::vector<double> out(n, 0.0);
  if (mode == Summation::Sequential) {
    for (std::size_t flat = 0; flat < t.size(); ++flat) {
      out[(flat / stride) % n] += t[flat];
    }
  } else {
    std::vector<double> comp(n, 0.0);
    for (std::size_t flat = 0; flat < t.size(); ++flat) {
      const std::size_t i = (flat / stride) % n;
      const double y = t[flat] - comp[i];
      const double sum = out[i] + y;
      comp[i] = (sum - out[i]) - y;
      out[i] = sum;
    }
  }
  return out;
}

SignedTensor assemble_posterior(const SignedTensor& q, const ScalingState& s) {
  if (s.alphas.size() != q.rank()) {
    throw std::invalid_argument("scaling state covers " +
                                std::to_string(s.alphas.size()) +
                                " axes, tensor has " + std::to_string(q.rank()));
  }
  for (std::size_t k = 0; k < q.rank(); ++k) {
    if (s.alphas[k].size() != q.shape()[k]) {
      throw std::invalid_argument("scaling vector for axis " + std::to_string(k) +
                                  " has length " +
                                  std::to_string(s.alphas[k].size()) +
                                  ", expected " + std::to_string(q.shape()[k]));
    }
  }
  const std::size_t rank = q.rank();
  std::vector<std::size_t> index(rank, 0);
  std::vector<double> out(q.size(), 0.0);
  for (std::size_t flat = 0; flat < q.size(); ++flat) {
    const double v = q[flat];
    if (v != 0.0) {
      double factor = 1.0;
      for (std::size_t k = 0; k < rank; ++k) factor *= s.alphas[k][index[k]];
      const double p = v > 0.0 ? v * factor : v / factor;
      if (!std::isfinite(p)) {
        throw NumericalError("posterior entry at index " +
                             index_to_string(index) + " is not finite");
      }
      out[flat] = p;
    }
    for (std::size_t k = rank; k-- > 0;) {
      if (++index[k] < q.shape()[k]) break;
      index[k] = 0;
    }
  }
  return SignedTensor::build(q.shape(), std::move(out));
}

}  // namespace sinkcal
