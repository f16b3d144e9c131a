#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "waveinv/error_norms.hpp"

namespace waveinv {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Reciprocal condition number below which a metric is treated as singular.
inline constexpr double kSingularRcond = 1e-14;

/// One model evaluation: residual r = y - f(x) and model Jacobian J = df/dx,
/// both in physical parameter units. `relative_signal_error` is filled by
/// problems that know the reference signal (relative_2 in signal space).
struct Evaluation {
  Vector residual;
  Matrix jacobian;
  double relative_signal_error = kNaN;
};

/// Callbacks describing a least-squares problem. Every call to `evaluate`
/// counts as one forward-model evaluation. `feasible` is a cheap domain
/// check that must not evaluate the model.
struct LeastSquaresProblem {
  std::function<Evaluation(const Vector&)> evaluate;
  std::function<bool(const Vector&)> feasible;
};

// ---------------------------------------------------------------------------
// Step primitives. All of them operate in rescaled coordinates.

/// J~ = J diag(x). Throws std::invalid_argument when some x_i = 0.
Matrix rescale_jacobian(const Matrix& jacobian, const Vector& x);
/// dx = diag(x) dx~
Vector unscale_step(const Vector& scaled_step, const Vector& x);

/// Gauss-Newton projection (J~^T J~)^-1 J~^T r through an SVD of J~.
/// Throws NumericalError (with the reciprocal condition) when rank deficient.
Vector gn_step(const Matrix& jacobian, const Vector& residual);

/// Dual projection J~^T r, i.e. the gradient descent step.
Vector gd_step(const Matrix& jacobian, const Vector& residual);

struct MetricNorm {
  double value = 0.0;
  bool clamped = false;  // the quadratic form came out negative and was set to 0
};
/// g(dx) = sqrt(dx^T G dx)
MetricNorm metric_norm(const Matrix& metric, const Vector& dx);

/// lambda = sqrt((dx*^T G^-1 dx*) / (dx*^T G dx*)); scales a gradient step to the
/// metric length of the Gauss-Newton step.
double lambda_k(const Matrix& metric, const Vector& dx_star);

/// eta_bar = ||r_k|| / ||r_0||. Not clamped above 1.
double eta_bar(double residual_norm, double initial_residual_norm);

enum class StepRule { modified_lm, gauss_newton, scaled_gd };

struct OptState {
  Vector x;
  Vector residual;
  Matrix jacobian;  // physical units, df/dx
  std::uint64_t eval_count = 0;
  int iteration = 0;
  double r0_norm = 0.0;
};

struct StepReport {
  Vector dx;         // physical units
  Vector scaled_dx;  // rescaled coordinates
  double lambda = kNaN;
  double eta_bar = kNaN;
  double gn_metric_norm = kNaN;
  StepRule rule = StepRule::modified_lm;
};

/// (J~^T J~ + eta_bar / lambda I)^-1 J~^T r, mapped back through diag(x).
StepReport modified_lm_step(const OptState& state);
/// Same as modified_lm_step with an explicit damping ratio eta_bar.
StepReport modified_lm_step(const OptState& state, double eta);
/// lambda J~^T r, mapped back through diag(x).
StepReport corrected_gd_step(const OptState& state);
StepReport gauss_newton_step(const OptState& state);

// ---------------------------------------------------------------------------
// Driver.

enum class Method { modified_lm, gauss_newton, scaled_gd, bfgs };
std::string_view to_string(Method m);
Method parse_method(std::string_view name);

enum class Status { running, converged, max_iterations, stalled, error };
std::string_view to_string(Status s);

struct OptimizerOptions {
  Method method = Method::modified_lm;
  int max_iterations = 100;
  double step_tolerance = 1e-10;       // ||dx~|| below this: converged
  double objective_tolerance = 1e-12;  // ||r_k|| / ||r_0|| below this: converged
  std::uint64_t max_evaluations = 0;   // 0: unlimited
  int max_backtracks = 10;             // feasibility halvings per step
  int stall_window = 5;
  double stall_tolerance = 1e-14;
  /// When set, relative_1 against the ground truth is recorded, and the run
  /// stops as soon as it drops below success_cutoff (if positive).
  std::optional<Vector> ground_truth;
  double success_cutoff = 0.0;
  // Line search (BFGS only)
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  int max_line_search_trials = 20;
};

/// One row per model evaluation.
struct TraceRecord {
  int iteration = 0;
  std::uint64_t eval_count = 0;
  double objective = kNaN;  // 1/2 ||r||^2
  Vector x;
  double lambda = kNaN;
  double eta_bar = kNaN;
  double rel1 = kNaN;
  double rel2 = kNaN;
};

struct OptTrace {
  std::vector<TraceRecord> records;
  Status status = Status::running;
  std::string message;

  std::uint64_t evaluations() const { return records.empty() ? 0 : records.back().eval_count; }
  /// Evaluation count of the first record with rel1 < cutoff.
  std::optional<std::uint64_t> evals_to_success(double cutoff) const;
};

/// Runs the selected method from x0. Model errors never escape: they end
/// the trace with Status::error and the message attached.
OptTrace optimize(const LeastSquaresProblem& problem, const Vector& x0, const OptimizerOptions& opts);

/// Objective 1/2 ||r||^2 with gradient -J^T r for the BFGS baseline.
struct ScalarEvaluation {
  double value = 0.0;
  Vector gradient;
  double rel2 = kNaN;
};
using ScalarObjective = std::function<ScalarEvaluation(const Vector&)>;

/// BFGS with a strong-Wolfe line search (bracketing, then bisection).
/// Every trial point is one evaluation and one trace record.
OptTrace bfgs_baseline(const ScalarObjective& objective, const std::function<bool(const Vector&)>& feasible,
                       const Vector& x0, const OptimizerOptions& opts);

/// CSV columns: iter,eval_count,objective,E,nu,lambda,eta_bar,rel1,rel2,status
/// (extra parameters beyond two are appended as x2, x3, ...).
std::string trace_to_csv(const OptTrace& trace);

}  // namespace waveinv
