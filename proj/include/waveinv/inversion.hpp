#pragma once

#include <span>
#include <vector>

#include "waveinv/forward.hpp"
#include "waveinv/objective.hpp"
#include "waveinv/optimizer.hpp"

namespace waveinv {

/// Objective configuration matching a forward configuration (bandwidth b).
ObjectiveConfig objective_for(const ForwardConfig& cfg, ObjectiveKind kind, double damping_c = 1.0);

/// d r / d(E, nu) for r = ref_feature - feature(sim): columns carry
/// -d feature / dp. Throws NumericalError when a phase derivative is undefined.
Matrix residual_jacobian(const MaterialParams& m, const ForwardConfig& cfg, const ObjectiveConfig& obj,
                         std::span<const double> ref_feature);

/// Recovers (E, nu) at fixed density from a reference signal. The parameter
/// vector is x = [E, nu] in SI units. Owns its model and evaluation counter.
class WaveguideInversion {
 public:
  WaveguideInversion(ForwardConfig cfg, ObjectiveConfig obj, Signal reference, double density);

  /// Residual, model Jacobian and relative signal error at x; one evaluation.
  Evaluation evaluate(const Vector& x);
  /// 1/2 ||r||^2 without derivatives; one evaluation.
  double objective(const Vector& x);
  std::vector<double> residual(const Vector& x);

  /// Physical bounds plus the window-fit check; never evaluates the model.
  bool feasible(const Vector& x) const;

  LeastSquaresProblem problem();

  const std::vector<double>& reference_features() const { return ref_features_; }
  const Signal& reference() const { return reference_; }
  std::uint64_t evaluations() const { return model_.evaluations(); }
  double density() const { return density_; }
  MaterialParams material(const Vector& x) const;

 private:
  WaveguideModel model_;
  ObjectiveConfig obj_;
  Signal reference_;
  Vector reference_vec_;
  std::vector<double> ref_features_;
  double density_;
};

}  // namespace waveinv
