#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "sinkcal/tensor.hpp"

namespace sinkcal {

/// Thrown when a marginal constraint provably has no positive-scaling
/// solution (e.g. a slice with no positive mass and a positive target).
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

enum class ResidualNorm { L1, L2, Linf };

struct CalibrationConfig {
  /// Convergence threshold on the maximum per-axis residual norm.
  double tolerance = 1e-12;
  /// One iteration is one full sweep over all axes.
  std::size_t max_iterations = 1000;
  ResidualNorm residual_norm = ResidualNorm::L2;
  /// Record per-sweep residual norms and the dual value.
  bool record_trace = false;
};

enum class SolveStatus { Converged, MaxIterations, Infeasible, NumericalFailure };

const char* to_string(SolveStatus status);

/// One record per completed sweep.
struct TraceRecord {
  std::vector<double> residual_norms;  // per axis, after the sweep
  double dual_value;                   // dual objective at the post-sweep state
};

struct CalibrationReport {
  SolveStatus status = SolveStatus::NumericalFailure;
  std::size_t iterations = 0;          // completed sweeps
  std::vector<TraceRecord> trace;      // filled when record_trace is set
  std::vector<double> final_residuals; // per-axis norms at the final state
  std::string message;                 // failure detail, empty on Converged

  double max_residual() const;
};

/// Relative tolerance for the equal-total-mass consistency check across axes.
inline constexpr double kMassConsistencyTol = 1e-9;

/// Necessary feasibility checks: cross-axis total-mass consistency of the
/// targets, and per-slice positive support (a slice whose positive part sums
/// to zero cannot meet a positive target under any scaling). Also reports the
/// prior's per-axis marginals for inspection. Shape mismatches throw
/// std::invalid_argument.
struct ProblemDiagnostics {
  std::vector<double> target_totals;                        // per axis
  bool mass_consistent = false;
  std::vector<std::pair<std::size_t, std::size_t>> infeasible_slices;  // (axis, index)
  std::vector<std::vector<double>> prior_marginals;         // per axis

  bool ok() const { return mass_consistent && infeasible_slices.empty(); }
  std::string describe() const;
};

ProblemDiagnostics validate_problem(const SignedTensor& q,
                                    const MarginalTargets& targets);

/// Slice accumulations behind one scaling update: positive is the slice sum
/// of Q+ weighted by the other axes' factors, negative the slice sum of Q-
/// weighted by the inverse factors. The slice's own factor is excluded.
struct SliceSums {
  double positive = 0.0;
  double negative = 0.0;
};

SliceSums partial_sums(const SignedTensor& qplus, const SignedTensor& qminus,
                       const ScalingState& s, std::size_t axis,
                       std::size_t index);

/// Positive root of splus*a^2 - target*a - sminus = 0: the factor that
/// restores one signed marginal constraint. Reduces to target/splus when
/// sminus == 0. Throws InfeasibleError when no positive root exists.
double signed_update(double splus, double sminus, double target);

/// Classical scaling ratio target/s for all-positive slices.
double classic_update(double s, double target);

/// Replaces every factor of `axis` by the root restoring its constraint,
/// computed from the other axes' current factors (updates within one axis
/// are mutually independent). Returns the updated state.
ScalingState sweep_axis(const SignedTensor& qplus, const SignedTensor& qminus,
                        const ScalingState& s, std::size_t axis,
                        const MarginalTargets& targets);

/// Per-axis norms of (signed marginal of the assembled posterior - target).
std::vector<double> residuals(const SignedTensor& q, const ScalingState& s,
                              const MarginalTargets& targets, ResidualNorm norm);

struct CalibrationResult {
  SignedTensor posterior;
  ScalingState scaling;
  CalibrationReport report;
};

/// Cyclic axis sweeps from unit factors until the maximum per-axis residual
/// norm drops below config.tolerance or a limit is hit. On Converged the
/// posterior satisfies every axis constraint within tolerance and carries
/// the prior's sign pattern.
CalibrationResult calibrate(const SignedTensor& q, const MarginalTargets& targets,
                            const CalibrationConfig& config = {});

}  // namespace sinkcal
