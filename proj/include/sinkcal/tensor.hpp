#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sinkcal {

/// Thrown when a finite-precision computation produces a non-finite value
/// (overflow/underflow of scaling products, sums, or exponentials).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Accumulation mode for reductions. Sequential is the default; Kahan adds
/// compensated summation for long, cancellation-heavy reductions.
enum class Summation { Sequential, Kahan };

/// Dense N-dimensional real array, entries of any sign including zero.
/// Values are stored flat in row-major order (last index varies fastest).
/// Immutable after construction; safe to share across threads for reading.
class SignedTensor {
 public:
  /// Validates and builds a tensor. Throws std::invalid_argument on an empty
  /// or non-positive shape, a shape/length mismatch, or a non-finite entry
  /// (the message names the offending position). Negative zeros are stored
  /// as +0.0 so zero entries have one canonical representation.
  static SignedTensor build(std::vector<std::size_t> shape,
                            std::vector<double> values);

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return values_.size(); }

  double operator[](std::size_t flat) const { return values_[flat]; }

  /// Bounds-checked element access by multi-index.
  double at(const std::vector<std::size_t>& index) const;

  /// Row-major flat offset of a multi-index (bounds-checked).
  std::size_t flat_index(const std::vector<std::size_t>& index) const;

 private:
  SignedTensor() = default;
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
};

/// One strictly positive target vector per axis. Local invariants (shape,
/// finiteness, strict positivity) are enforced here; the cross-axis equal
/// total mass condition is a feasibility check done by validate_problem.
struct MarginalTargets {
  static MarginalTargets build(std::vector<std::vector<double>> targets);

  std::vector<std::vector<double>> targets;

  std::size_t axes() const noexcept { return targets.size(); }
};

/// One strictly positive scaling vector per axis. Positive entries of a
/// prior scale by the product of their factors, negative entries by the
/// product of the inverses. Multipliers are recoverable as -log(alpha).
struct ScalingState {
  static ScalingState build(std::vector<std::vector<double>> alphas);

  /// All-ones factors for the given shape.
  static ScalingState unit(const std::vector<std::size_t>& shape);

  std::vector<std::vector<double>> alphas;
};

/// Elementwise nonnegative parts: positive = max(Q,0), negative = max(-Q,0),
/// so positive - negative == Q exactly and positive + negative == |Q|.
struct SignSplit {
  SignedTensor positive;
  SignedTensor negative;
};

SignSplit sign_split(const SignedTensor& q);

/// Sum over all indices except `axis`; entry i of the result is the plain
/// signed sum of the slice with the axis index fixed at i. Throws
/// std::out_of_range on a bad axis.
std::vector<double> axis_marginal(const SignedTensor& t, std::size_t axis,
                                  Summation mode = Summation::Sequential);

/// Entrywise P = Q * prod_l alpha_l for positive entries and
/// P = Q / prod_l alpha_l for negative entries; entries where Q == 0 stay
/// exactly 0. Throws NumericalError when a result is non-finite.
SignedTensor assemble_posterior(const SignedTensor& q, const ScalingState& s);

/// Row-major strides for a shape (last index fastest).
std::vector<std::size_t> row_major_strides(const std::vector<std::size_t>& shape);

/// Decodes a flat offset into a multi-index, e.g. for error messages.
std::vector<std::size_t> unravel_index(std::size_t flat,
                                       const std::vector<std::size_t>& shape);

/// "[i, j, k]" rendering of a multi-index.
std::string index_to_string(const std::vector<std::size_t>& index);

}  // namespace sinkcal
