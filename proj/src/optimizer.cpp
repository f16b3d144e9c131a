#include "waveinv/optimizer.hpp"

#include <cmath>
#include <sstream>

#include "waveinv/io.hpp"
#include "waveinv/signal.hpp"

namespace waveinv {
namespace {

double reciprocal_condition(const Eigen::VectorXd& singular_values) {
  if (singular_values.size() == 0) return 0.0;
  const double smax = singular_values.maxCoeff();
  if (!(smax > 0.0)) return 0.0;
  return singular_values.minCoeff() / smax;
}

/// Solves a symmetric system through an SVD, rejecting near-singular matrices.
Vector solve_spd(const Matrix& a, const Vector& b, const char* what) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double rcond = reciprocal_condition(svd.singularValues());
  if (rcond < kSingularRcond) {
    std::ostringstream msg;
    msg << what << ": singular system (reciprocal condition " << rcond << ")";
    throw NumericalError(msg.str());
  }
  return svd.solve(b);
}

Vector pseudo_solve(const Matrix& a, const Vector& b) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? s.maxCoeff() : 0.0;
  svd.setThreshold(kSingularRcond);
  if (!(smax > 0.0)) return Vector::Zero(b.size());
  return svd.solve(b);
}

struct ScaledSystem {
  Matrix jt;      // J~
  Matrix metric;  // G = J~^T J~
  Vector grad;    // dx* = J~^T r
};

ScaledSystem scaled_system(const OptState& state) {
  ScaledSystem s;
  s.jt = rescale_jacobian(state.jacobian, state.x);
  s.metric = s.jt.transpose() * s.jt;
  s.grad = gd_step(s.jt, state.residual);
  return s;
}

bool is_singular(const Matrix& metric) {
  Eigen::JacobiSVD<Matrix> svd(metric);
  return reciprocal_condition(svd.singularValues()) < kSingularRcond;
}

/// lambda with a pseudo-inverse metric; dx* always lies in range(G).
double lambda_pseudo(const Matrix& metric, const Vector& dx_star) {
  const double num = dx_star.dot(pseudo_solve(metric, dx_star));
  const double den = dx_star.dot(metric * dx_star);
  if (!(den > 0.0)) throw NumericalError("lambda: metric annihilates the gradient step");
  return std::sqrt(num / den);
}

StepReport finish_step(const OptState& state, StepReport rep) {
  rep.dx = unscale_step(rep.scaled_dx, state.x);
  return rep;
}

}  // namespace

Matrix rescale_jacobian(const Matrix& jacobian, const Vector& x) {
  if (jacobian.cols() != x.size()) throw std::invalid_argument("rescale_jacobian: column count != parameter count");
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) throw std::invalid_argument("rescale_jacobian: zero parameter, rescaling undefined");
  }
  return jacobian * x.asDiagonal();
}

Vector unscale_step(const Vector& scaled_step, const Vector& x) { return x.cwiseProduct(scaled_step); }

Vector gn_step(const Matrix& jacobian, const Vector& residual) {
  Eigen::JacobiSVD<Matrix> svd(jacobian, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double rc = reciprocal_condition(svd.singularValues());
  // rcond(J^T J) = rcond(J)^2
  if (jacobian.cols() > jacobian.rows() || rc * rc < kSingularRcond) {
    std::ostringstream msg;
    msg << "gn_step: rank-deficient metric (reciprocal condition " << rc * rc << ")";
    throw NumericalError(msg.str());
  }
  return svd.solve(residual);
}

Vector gd_step(const Matrix& jacobian, const Vector& residual) {
  if (jacobian.rows() != residual.size()) throw std::invalid_argument("gd_step: shape mismatch");
  return jacobian.transpose() * residual;
}

MetricNorm metric_norm(const Matrix& metric, const Vector& dx) {
  const double q = dx.dot(metric * dx);
  if (q < 0.0) return {0.0, true};
  return {std::sqrt(q), false};
}

double lambda_k(const Matrix& metric, const Vector& dx_star) {
  if (dx_star.size() == 0 || dx_star.isZero(0.0)) throw NumericalError("lambda_k: zero gradient step");
  const double num = dx_star.dot(solve_spd(metric, dx_star, "lambda_k"));
  const double den = dx_star.dot(metric * dx_star);
  return std::sqrt(num / den);
}

double eta_bar(double residual_norm, double initial_residual_norm) {
  if (!(initial_residual_norm > 0.0)) throw std::invalid_argument("eta_bar: initial residual norm must be positive");
  return residual_norm / initial_residual_norm;
}

StepReport modified_lm_step(const OptState& state) {
  return modified_lm_step(state, eta_bar(state.residual.norm(), state.r0_norm));
}

StepReport modified_lm_step(const OptState& state, double eta) {
  const auto sys = scaled_system(state);
  StepReport rep;
  rep.rule = StepRule::modified_lm;
  rep.eta_bar = eta;
  const auto m = sys.grad.size();
  if (sys.grad.isZero(0.0)) {
    rep.scaled_dx = Vector::Zero(m);
    return finish_step(state, rep);
  }
  const bool singular = is_singular(sys.metric);
  if (singular && eta == 0.0) throw NumericalError("modified_lm_step: undamped system with rank-deficient metric");
  rep.lambda = singular ? lambda_pseudo(sys.metric, sys.grad) : lambda_k(sys.metric, sys.grad);
  if (!singular) rep.gn_metric_norm = std::sqrt(sys.grad.dot(solve_spd(sys.metric, sys.grad, "gn metric")));
  const Matrix damped = sys.metric + (eta / rep.lambda) * Matrix::Identity(m, m);
  rep.scaled_dx = solve_spd(damped, sys.grad, "modified_lm_step");
  return finish_step(state, rep);
}

StepReport corrected_gd_step(const OptState& state) {
  const auto sys = scaled_system(state);
  StepReport rep;
  rep.rule = StepRule::scaled_gd;
  if (state.r0_norm > 0.0) rep.eta_bar = eta_bar(state.residual.norm(), state.r0_norm);
  if (sys.grad.isZero(0.0)) {
    rep.scaled_dx = Vector::Zero(sys.grad.size());
    return finish_step(state, rep);
  }
  rep.lambda = lambda_k(sys.metric, sys.grad);
  rep.gn_metric_norm = std::sqrt(sys.grad.dot(solve_spd(sys.metric, sys.grad, "gn metric")));
  rep.scaled_dx = rep.lambda * sys.grad;
  return finish_step(state, rep);
}

StepReport gauss_newton_step(const OptState& state) {
  StepReport rep;
  rep.rule = StepRule::gauss_newton;
  const Matrix jt = rescale_jacobian(state.jacobian, state.x);
  if (state.r0_norm > 0.0) rep.eta_bar = eta_bar(state.residual.norm(), state.r0_norm);
  rep.scaled_dx = gn_step(jt, state.residual);
  rep.gn_metric_norm = metric_norm(jt.transpose() * jt, rep.scaled_dx).value;
  return finish_step(state, rep);
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::modified_lm: return "modified-lm";
    case Method::gauss_newton: return "gauss-newton";
    case Method::scaled_gd: return "scaled-gd";
    case Method::bfgs: return "bfgs";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "modified-lm") return Method::modified_lm;
  if (name == "gauss-newton") return Method::gauss_newton;
  if (name == "scaled-gd") return Method::scaled_gd;
  if (name == "bfgs") return Method::bfgs;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

std::string_view to_string(Status s) {
  switch (s) {
    case Status::running: return "running";
    case Status::converged: return "converged";
    case Status::max_iterations: return "max-iters";
    case Status::stalled: return "stalled";
    case Status::error: return "error";
  }
  return "unknown";
}

std::optional<std::uint64_t> OptTrace::evals_to_success(double cutoff) const {
  for (const auto& r : records) {
    if (r.rel1 < cutoff) return r.eval_count;
  }
  return std::nullopt;
}

namespace {

class TraceBuilder {
 public:
  TraceBuilder(OptTrace& trace, const OptimizerOptions& opts) : trace_(trace), opts_(opts) {}

  /// Appends a record; returns true when the success cutoff was reached.
  bool add(int iteration, std::uint64_t evals, double objective, const Vector& x, double lambda, double eta,
           double rel2) {
    TraceRecord rec;
    rec.iteration = iteration;
    rec.eval_count = evals;
    rec.objective = objective;
    rec.x = x;
    rec.lambda = lambda;
    rec.eta_bar = eta;
    rec.rel2 = rel2;
    if (opts_.ground_truth) rec.rel1 = relative_1(*opts_.ground_truth, x);
    trace_.records.push_back(std::move(rec));
    return opts_.ground_truth && opts_.success_cutoff > 0.0 && trace_.records.back().rel1 < opts_.success_cutoff;
  }

  bool budget_exhausted(std::uint64_t evals) const {
    return opts_.max_evaluations != 0 && evals >= opts_.max_evaluations;
  }

 private:
  OptTrace& trace_;
  const OptimizerOptions& opts_;
};

bool feasible_or_true(const std::function<bool(const Vector&)>& f, const Vector& x) { return !f || f(x); }

OptTrace run_step_method(const LeastSquaresProblem& problem, const Vector& x0, const OptimizerOptions& opts) {
  OptTrace trace;
  TraceBuilder tb(trace, opts);
  std::uint64_t evals = 0;
  try {
    if (!feasible_or_true(problem.feasible, x0)) {
      trace.status = Status::error;
      trace.message = "initial estimate outside the feasible region";
      return trace;
    }
    OptState state;
    state.x = x0;
    auto e = problem.evaluate(state.x);
    ++evals;
    state.residual = std::move(e.residual);
    state.jacobian = std::move(e.jacobian);
    state.eval_count = evals;
    state.r0_norm = state.residual.norm();
    double objective = 0.5 * state.residual.squaredNorm();
    if (tb.add(0, evals, objective, state.x, kNaN, 1.0, e.relative_signal_error) || state.r0_norm == 0.0) {
      trace.status = Status::converged;
      return trace;
    }

    int stall = 0;
    for (int k = 0; k < opts.max_iterations; ++k) {
      if (tb.budget_exhausted(evals)) {
        trace.status = Status::max_iterations;
        trace.message = "evaluation budget exhausted";
        return trace;
      }
      StepReport step;
      switch (opts.method) {
        case Method::modified_lm: step = modified_lm_step(state); break;
        case Method::gauss_newton: step = gauss_newton_step(state); break;
        case Method::scaled_gd: step = corrected_gd_step(state); break;
        case Method::bfgs: throw std::logic_error("bfgs is not a step rule");
      }
      if (step.scaled_dx.norm() < opts.step_tolerance) {
        trace.status = Status::converged;
        trace.message = "step below tolerance";
        return trace;
      }

      Vector dx = step.dx;
      Vector x_new = state.x + dx;
      for (int h = 0; h < opts.max_backtracks && !feasible_or_true(problem.feasible, x_new); ++h) {
        dx *= 0.5;
        x_new = state.x + dx;
      }
      if (!feasible_or_true(problem.feasible, x_new)) {
        trace.status = Status::stalled;
        trace.message = "step could not be pulled back into the feasible region";
        return trace;
      }

      e = problem.evaluate(x_new);
      ++evals;
      state.x = x_new;
      state.residual = std::move(e.residual);
      state.jacobian = std::move(e.jacobian);
      state.eval_count = evals;
      state.iteration = k + 1;
      const double prev = objective;
      objective = 0.5 * state.residual.squaredNorm();
      if (tb.add(k + 1, evals, objective, state.x, step.lambda, step.eta_bar, e.relative_signal_error)) {
        trace.status = Status::converged;
        return trace;
      }
      if (state.residual.norm() < opts.objective_tolerance * state.r0_norm) {
        trace.status = Status::converged;
        trace.message = "objective below tolerance";
        return trace;
      }
      const double decrease = prev > 0.0 ? (prev - objective) / prev : 0.0;
      stall = decrease < opts.stall_tolerance ? stall + 1 : 0;
      if (stall >= opts.stall_window) {
        trace.status = Status::stalled;
        trace.message = "no objective decrease over the stall window";
        return trace;
      }
    }
    trace.status = Status::max_iterations;
  } catch (const std::exception& ex) {
    trace.status = Status::error;
    trace.message = ex.what();
  }
  return trace;
}

}  // namespace

OptTrace bfgs_baseline(const ScalarObjective& objective, const std::function<bool(const Vector&)>& feasible,
                       const Vector& x0, const OptimizerOptions& opts) {
  OptTrace trace;
  TraceBuilder tb(trace, opts);
  std::uint64_t evals = 0;
  const auto m = x0.size();

  try {
    if (!feasible_or_true(feasible, x0)) {
      trace.status = Status::error;
      trace.message = "initial estimate outside the feasible region";
      return trace;
    }
    Vector x = x0;
    auto cur = objective(x);
    ++evals;
    const double f0 = cur.value;
    if (tb.add(0, evals, cur.value, x, kNaN, kNaN, cur.rel2) || cur.gradient.isZero(0.0) || f0 == 0.0) {
      trace.status = Status::converged;
      return trace;
    }

    Matrix h = Matrix::Identity(m, m);
    bool first_update = true;
    int stall = 0;

    for (int iter = 1; iter <= opts.max_iterations; ++iter) {
      Vector p = -h * cur.gradient;
      double d0 = cur.gradient.dot(p);
      if (!(d0 < 0.0)) {
        h.setIdentity();
        p = -cur.gradient;
        d0 = -cur.gradient.squaredNorm();
      }

      // Strong-Wolfe search: expand by doubling until bracketed, then bisect.
      int trials = 0;
      bool accepted = false;
      bool stop = false;
      double a_lo = 0.0, f_lo = cur.value;
      double a_hi = -1.0;  // < 0: not bracketed yet
      double a = 1.0;
      ScalarEvaluation next;
      Vector x_next;
      while (trials < opts.max_line_search_trials) {
        ++trials;
        x_next = x + a * p;
        if (!feasible_or_true(feasible, x_next)) {
          a_hi = a;
          a = 0.5 * (a_lo + a_hi);
          continue;
        }
        if (tb.budget_exhausted(evals)) {
          trace.status = Status::max_iterations;
          trace.message = "evaluation budget exhausted";
          stop = true;
          break;
        }
        next = objective(x_next);
        ++evals;
        if (tb.add(iter, evals, next.value, x_next, kNaN, kNaN, next.rel2)) {
          trace.status = Status::converged;
          stop = true;
          break;
        }
        const double da = next.gradient.dot(p);
        if (next.value > cur.value + opts.wolfe_c1 * a * d0 || (a_lo > 0.0 && next.value >= f_lo)) {
          a_hi = a;
        } else if (std::abs(da) <= -opts.wolfe_c2 * d0) {
          accepted = true;
          break;
        } else {
          if (a_hi >= 0.0 ? da * (a_hi - a_lo) >= 0.0 : da >= 0.0) {
            a_hi = a_lo;
          }
          a_lo = a;
          f_lo = next.value;
        }
        a = a_hi >= 0.0 ? 0.5 * (a_lo + a_hi) : 2.0 * a;
      }
      if (stop) return trace;
      if (!accepted) {
        trace.status = Status::stalled;
        trace.message = "line search failed to satisfy the strong Wolfe conditions";
        return trace;
      }

      const Vector s = x_next - x;
      const Vector y = next.gradient - cur.gradient;
      const double sy = s.dot(y);
      if (sy > 0.0) {
        if (first_update) {
          h = Matrix::Identity(m, m) * (sy / y.squaredNorm());
          first_update = false;
        }
        const double rho = 1.0 / sy;
        const Matrix i = Matrix::Identity(m, m);
        h = (i - rho * s * y.transpose()) * h * (i - rho * y * s.transpose()) + rho * s * s.transpose();
      }
      const double prev = cur.value;
      x = x_next;
      cur = std::move(next);

      if (s.norm() < opts.step_tolerance || cur.gradient.isZero(0.0) ||
          std::sqrt(cur.value / f0) < opts.objective_tolerance) {
        trace.status = Status::converged;
        return trace;
      }
      const double decrease = prev > 0.0 ? (prev - cur.value) / prev : 0.0;
      stall = decrease < opts.stall_tolerance ? stall + 1 : 0;
      if (stall >= opts.stall_window) {
        trace.status = Status::stalled;
        trace.message = "no objective decrease over the stall window";
        return trace;
      }
    }
    trace.status = Status::max_iterations;
  } catch (const std::exception& ex) {
    trace.status = Status::error;
    trace.message = ex.what();
  }
  return trace;
}

OptTrace optimize(const LeastSquaresProblem& problem, const Vector& x0, const OptimizerOptions& opts) {
  if (!problem.evaluate) throw std::invalid_argument("optimize: problem has no evaluate callback");
  if (opts.method != Method::bfgs) return run_step_method(problem, x0, opts);

  // BFGS runs in coordinates normalized by the initial estimate, z = x / x0.
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    if (x0[i] == 0.0) throw std::invalid_argument("optimize: bfgs normalization needs nonzero x0");
  }
  const Vector scale = x0;
  ScalarObjective scalar = [&](const Vector& z) {
    auto e = problem.evaluate(z.cwiseProduct(scale));
    ScalarEvaluation out;
    out.value = 0.5 * e.residual.squaredNorm();
    out.gradient = -(e.jacobian * scale.asDiagonal()).transpose() * e.residual;
    out.rel2 = e.relative_signal_error;
    return out;
  };
  std::function<bool(const Vector&)> feasible;
  if (problem.feasible) feasible = [&](const Vector& z) { return problem.feasible(z.cwiseProduct(scale)); };

  OptimizerOptions zopts = opts;
  if (opts.ground_truth) zopts.ground_truth = opts.ground_truth->cwiseQuotient(scale);
  auto trace = bfgs_baseline(scalar, feasible, Vector::Ones(x0.size()), zopts);
  for (auto& r : trace.records) {
    r.x = r.x.cwiseProduct(scale);
    if (opts.ground_truth) r.rel1 = relative_1(*opts.ground_truth, r.x);
  }
  return trace;
}

std::string trace_to_csv(const OptTrace& trace) {
  std::ostringstream os;
  std::size_t m = trace.records.empty() ? 2 : static_cast<std::size_t>(trace.records.front().x.size());
  os << "iter,eval_count,objective,E,nu";
  for (std::size_t i = 2; i < m; ++i) os << ",x" << i;
  os << ",lambda,eta_bar,rel1,rel2,status\n";
  for (std::size_t r = 0; r < trace.records.size(); ++r) {
    const auto& rec = trace.records[r];
    os << rec.iteration << ',' << rec.eval_count << ',' << io::format_double(rec.objective);
    for (Eigen::Index i = 0; i < rec.x.size(); ++i) os << ',' << io::format_double(rec.x[i]);
    for (std::size_t i = static_cast<std::size_t>(rec.x.size()); i < 2; ++i) os << ",nan";
    os << ',' << io::format_double(rec.lambda) << ',' << io::format_double(rec.eta_bar) << ','
       << io::format_double(rec.rel1) << ',' << io::format_double(rec.rel2) << ','
       << (r + 1 == trace.records.size() ? to_string(trace.status) : std::string_view("running")) << '\n';
  }
  return os.str();
}

}  // namespace waveinv
