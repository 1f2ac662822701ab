#include "sinkcal/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sinkcal/duality.hpp"

namespace sinkcal {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::MaxIterations: return "MaxIterations";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

double CalibrationReport::max_residual() const {
  double m = 0.0;
  for (double r : final_residuals) m = std::max(m, r);
  return m;
}

namespace {

void check_shapes(const SignedTensor& q, const MarginalTargets& targets) {
  if (targets.axes() != q.rank()) {
    throw std::invalid_argument("targets cover " + std::to_string(targets.axes()) +
                                " axes, tensor has " + std::to_string(q.rank()));
  }
  for (std::size_t axis = 0; axis < q.rank(); ++axis) {
    if (targets.targets[axis].size() != q.shape()[axis]) {
      throw std::invalid_argument(
          "targets for axis " + std::to_string(axis) + " have length " +
          std::to_string(targets.targets[axis].size()) + ", expected " +
          std::to_string(q.shape()[axis]));
    }
  }
}

double vector_norm(const std::vector<double>& v, ResidualNorm norm) {
  double acc = 0.0;
  switch (norm) {
    case ResidualNorm::L1:
      for (double x : v) acc += std::abs(x);
      return acc;
    case ResidualNorm::L2:
      for (double x : v) acc += x * x;
      return std::sqrt(acc);
    case ResidualNorm::Linf:
      for (double x : v) acc = std::max(acc, std::abs(x));
      return acc;
  }
  return acc;
}

std::vector<double> residuals_of_posterior(const SignedTensor& posterior,
                                           const MarginalTargets& targets,
                                           ResidualNorm norm) {
  std::vector<double> out(posterior.rank(), 0.0);
  for (std::size_t axis = 0; axis < posterior.rank(); ++axis) {
    std::vector<double> diff = axis_marginal(posterior, axis);
    for (std::size_t i = 0; i < diff.size(); ++i) {
      diff[i] -= targets.targets[axis][i];
    }
    out[axis] = vector_norm(diff, norm);
  }
  return out;
}

/// S+ and S- for every index along `axis` in one pass.
void axis_partial_sums(const SignedTensor& qplus, const SignedTensor& qminus,
                       const ScalingState& s, std::size_t axis,
                       std::vector<double>& splus, std::vector<double>& sminus) {
  const std::size_t rank = qplus.rank();
  const auto& shape = qplus.shape();
  splus.assign(shape[axis], 0.0);
  sminus.assign(shape[axis], 0.0);
  std::vector<std::size_t> index(rank, 0);
  for (std::size_t flat = 0; flat < qplus.size(); ++flat) {
    const double qp = qplus[flat];
    const double qm = qminus[flat];
    if (qp != 0.0 || qm != 0.0) {
      double factor = 1.0;
      for (std::size_t k = 0; k < rank; ++k) {
        if (k != axis) factor *= s.alphas[k][index[k]];
      }
      if (qp != 0.0) splus[index[axis]] += qp * factor;
      if (qm != 0.0) sminus[index[axis]] += qm / factor;
    }
    for (std::size_t k = rank; k-- > 0;) {
      if (++index[k] < shape[k]) break;
      index[k] = 0;
    }
  }
  for (std::size_t i = 0; i < shape[axis]; ++i) {
    if (!std::isfinite(splus[i]) || !std::isfinite(sminus[i])) {
      throw NumericalError("slice sums for axis " + std::to_string(axis) +
                           " index " + std::to_string(i) + " are not finite");
    }
  }
}

}  // namespace

std::string ProblemDiagnostics::describe() const {
  std::ostringstream out;
  if (!mass_consistent) {
    out << "target totals differ across axes:";
    for (std::size_t axis = 0; axis < target_totals.size(); ++axis) {
      out << (axis ? ", " : " ") << "axis " << axis << " sums to "
          << target_totals[axis];
    }
    out << "; a feasible posterior has a single total signed mass";
  }
  if (!infeasible_slices.empty()) {
    if (!mass_consistent) out << ". ";
    out << "structurally infeasible slices (positive target, no positive "
           "entries):";
    for (const auto& [axis, index] : infeasible_slices) {
      out << " (axis " << axis << ", index " << index << ")";
    }
  }
  return out.str();
}

ProblemDiagnostics validate_problem(const SignedTensor& q,
                                    const MarginalTargets& targets) {
  check_shapes(q, targets);
  ProblemDiagnostics diag;
  diag.target_totals.resize(q.rank(), 0.0);
  for (std::size_t axis = 0; axis < q.rank(); ++axis) {
    for (double v : targets.targets[axis]) diag.target_totals[axis] += v;
  }
  const auto [lo, hi] =
      std::minmax_element(diag.target_totals.begin(), diag.target_totals.end());
  diag.mass_consistent =
      (*hi - *lo) <= kMassConsistencyTol * std::max(1.0, std::abs(*hi));

  diag.prior_marginals.reserve(q.rank());
  for (std::size_t axis = 0; axis < q.rank(); ++axis) {
    diag.prior_marginals.push_back(axis_marginal(q, axis));
  }

  const std::size_t rank = q.rank();
  std::vector<std::vector<double>> plus_slice(rank);
  for (std::size_t axis = 0; axis < rank; ++axis) {
    plus_slice[axis].assign(q.shape()[axis], 0.0);
  }
  std::vector<std::size_t> index(rank, 0);
  for (std::size_t flat = 0; flat < q.size(); ++flat) {
    const double v = q[flat];
    if (v > 0.0) {
      for (std::size_t k = 0; k < rank; ++k) plus_slice[k][index[k]] += v;
    }
    for (std::size_t k = rank; k-- > 0;) {
      if (++index[k] < q.shape()[k]) break;
      index[k] = 0;
    }
  }
  for (std::size_t axis = 0; axis < rank; ++axis) {
    for (std::size_t i = 0; i < q.shape()[axis]; ++i) {
      if (plus_slice[axis][i] <= 0.0 && targets.targets[axis][i] > 0.0) {
        diag.infeasible_slices.emplace_back(axis, i);
      }
    }
  }
  return diag;
}

SliceSums partial_sums(const SignedTensor& qplus, const SignedTensor& qminus,
                       const ScalingState& s, std::size_t axis,
                       std::size_t index) {
  const std::size_t rank = qplus.rank();
  const auto& shape = qplus.shape();
  if (axis >= rank) {
    throw std::out_of_range("axis " + std::to_string(axis) +
                            " out of range for rank " + std::to_string(rank));
  }
  if (index >= shape[axis]) {
    throw std::out_of_range("index " + std::to_string(index) +
                            " out of range for axis " + std::to_string(axis));
  }
  SliceSums sums;
  std::vector<std::size_t> multi(rank, 0);
  multi[axis] = index;
  const auto strides = row_major_strides(shape);
  bool done = false;
  while (!done) {
    std::size_t flat = 0;
    for (std::size_t k = 0; k < rank; ++k) flat += multi[k] * strides[k];
    const double qp = qplus[flat];
    const double qm = qminus[flat];
    if (qp != 0.0 || qm != 0.0) {
      double factor = 1.0;
      for (std::size_t k = 0; k < rank; ++k) {
        if (k != axis) factor *= s.alphas[k][multi[k]];
      }
      if (qp != 0.0) sums.positive += qp * factor;
      if (qm != 0.0) sums.negative += qm / factor;
    }
    done = true;
    for (std::size_t k = rank; k-- > 0;) {
      if (k == axis) continue;
      if (++multi[k] < shape[k]) {
        done = false;
        break;
      }
      multi[k] = 0;
    }
  }
  if (!std::isfinite(sums.positive) || !std::isfinite(sums.negative)) {
    throw NumericalError("slice sums for axis " + std::to_string(axis) +
                         " index " + std::to_string(index) +
                         " are not finite");
  }
  return sums;
}

double signed_update(double splus, double sminus, double target) {
  if (!(splus > 0.0)) {
    if (sminus > 0.0) {
      throw InfeasibleError(
          "slice has no positive mass; its signed marginal is nonpositive for "
          "every scaling, target " +
          std::to_string(target) + " is unreachable");
    }
    throw InfeasibleError(
        "degenerate slice (no mass of either sign); only a zero target is "
        "satisfiable, got " +
        std::to_string(target));
  }
  if (sminus == 0.0) {
    if (target <= 0.0) {
      throw InfeasibleError(
          "slice has positive mass only; nonpositive target " +
          std::to_string(target) + " admits no positive scaling");
    }
    return target / splus;
  }
  const double disc = std::sqrt(target * target + 4.0 * splus * sminus);
  // For target >= 0 the direct root has no cancellation; for target < 0 the
  // algebraically equivalent form keeps the subtraction benign.
  const double alpha = target >= 0.0 ? (target + disc) / (2.0 * splus)
                                     : (2.0 * sminus) / (disc - target);
  if (!std::isfinite(alpha) || alpha <= 0.0) {
    throw NumericalError("scaling update produced a non-positive or non-finite "
                         "factor");
  }
  return alpha;
}

double classic_update(double s, double target) {
  if (!(s > 0.0)) {
    throw InfeasibleError("slice sum must be positive, got " + std::to_string(s));
  }
  if (!(target > 0.0)) {
    throw InfeasibleError("target must be positive, got " + std::to_string(target));
  }
  return target / s;
}

ScalingState sweep_axis(const SignedTensor& qplus, const SignedTensor& qminus,
                        const ScalingState& s, std::size_t axis,
                        const MarginalTargets& targets) {
  const auto& shape = qplus.shape();
  if (axis >= qplus.rank()) {
    throw std::out_of_range("axis " + std::to_string(axis) +
                            " out of range for rank " +
                            std::to_string(qplus.rank()));
  }
  std::vector<double> splus;
  std::vector<double> sminus;
  axis_partial_sums(qplus, qminus, s, axis, splus, sminus);
  ScalingState updated = s;
  for (std::size_t i = 0; i < shape[axis]; ++i) {
    try {
      updated.alphas[axis][i] =
          signed_update(splus[i], sminus[i], targets.targets[axis][i]);
    } catch (const InfeasibleError& e) {
      throw InfeasibleError("axis " + std::to_string(axis) + " index " +
                            std::to_string(i) + ": " + e.what());
    } catch (const NumericalError& e) {
      throw NumericalError("axis " + std::to_string(axis) + " index " +
                           std::to_string(i) + ": " + e.what());
    }
  }
  return updated;
}

std::vector<double> residuals(const SignedTensor& q, const ScalingState& s,
                              const MarginalTargets& targets, ResidualNorm norm) {
  check_shapes(q, targets);
  return residuals_of_posterior(assemble_posterior(q, s), targets, norm);
}

CalibrationResult calibrate(const SignedTensor& q, const MarginalTargets& targets,
                            const CalibrationConfig& config) {
  if (!(config.tolerance > 0.0)) {
    throw std::invalid_argument("tolerance must be positive");
  }
  if (config.max_iterations == 0) {
    throw std::invalid_argument("max_iterations must be at least 1");
  }

  CalibrationReport report;
  const ProblemDiagnostics diag = validate_problem(q, targets);
  if (!diag.ok()) {
    report.status = SolveStatus::Infeasible;
    report.message = diag.describe();
    report.final_residuals =
        residuals_of_posterior(q, targets, config.residual_norm);
    return CalibrationResult{q, ScalingState::unit(q.shape()), report};
  }

  const SignSplit split = sign_split(q);
  ScalingState state = ScalingState::unit(q.shape());
  SignedTensor posterior = q;  // unit factors leave the prior unchanged
  report.final_residuals =
      residuals_of_posterior(posterior, targets, config.residual_norm);

  for (std::size_t sweep = 1; sweep <= config.max_iterations; ++sweep) {
    ScalingState next = state;
    try {
      for (std::size_t axis = 0; axis < q.rank(); ++axis) {
        next = sweep_axis(split.positive, split.negative, next, axis, targets);
      }
      SignedTensor assembled = assemble_posterior(q, next);
      std::vector<double> res =
          residuals_of_posterior(assembled, targets, config.residual_norm);
      state = std::move(next);
      posterior = std::move(assembled);
      report.final_residuals = std::move(res);
    } catch (const InfeasibleError& e) {
      report.status = SolveStatus::Infeasible;
      report.message = e.what();
      return CalibrationResult{std::move(posterior), std::move(state),
                               std::move(report)};
    } catch (const NumericalError& e) {
      report.status = SolveStatus::NumericalFailure;
      report.message = e.what();
      return CalibrationResult{std::move(posterior), std::move(state),
                               std::move(report)};
    }
    report.iterations = sweep;
    if (config.record_trace) {
      report.trace.push_back(TraceRecord{
          report.final_residuals,
          dual_value(q, targets, multipliers_from_scaling(state))});
    }
    if (report.max_residual() < config.tolerance) {
      report.status = SolveStatus::Converged;
      return CalibrationResult{std::move(posterior), std::move(state),
                               std::move(report)};
    }
  }
  report.status = SolveStatus::MaxIterations;
  report.message = "residual " + std::to_string(report.max_residual()) +
                   " above tolerance after " +
                   std::to_string(config.max_iterations) + " sweeps";
  return CalibrationResult{std::move(posterior), std::move(state),
                           std::move(report)};
}

}  // namespace sinkcal
