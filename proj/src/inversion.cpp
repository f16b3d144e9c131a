#include "waveinv/inversion.hpp"

#include <array>

namespace waveinv {
namespace {

Vector to_vector(std::span<const double> v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Matrix feature_jacobian(const ForwardJacobian& fj, const ObjectiveConfig& obj) {
  const std::array<Signal, 2> dirs{fj.d_youngs, fj.d_poisson};
  const auto cols = transform_derivatives(fj.output.signal, dirs, obj);
  Matrix j(static_cast<Eigen::Index>(cols[0].size()), 2);
  for (std::size_t c = 0; c < 2; ++c) j.col(static_cast<Eigen::Index>(c)) = to_vector(cols[c]);
  return j;
}

}  // namespace

ObjectiveConfig objective_for(const ForwardConfig& cfg, ObjectiveKind kind, double damping_c) {
  return ObjectiveConfig{kind, cfg.bandwidth, damping_c};
}

Matrix residual_jacobian(const MaterialParams& m, const ForwardConfig& cfg, const ObjectiveConfig& obj,
                         std::span<const double> ref_feature) {
  const auto fj = forward_jacobian(m, cfg);
  Matrix j = -feature_jacobian(fj, obj);
  if (static_cast<std::size_t>(j.rows()) != ref_feature.size()) {
    throw std::invalid_argument("residual_jacobian: reference feature length does not match the objective");
  }
  return j;
}

WaveguideInversion::WaveguideInversion(ForwardConfig cfg, ObjectiveConfig obj, Signal reference, double density)
    : model_(cfg), obj_(obj), reference_(std::move(reference)), density_(density) {
  if (reference_.size() != cfg.samples || reference_.dt() != cfg.dt) {
    throw std::invalid_argument("reference signal does not match the forward configuration grid");
  }
  if (!(density_ > 0.0)) throw std::invalid_argument("density must be positive");
  reference_vec_ = to_vector(reference_.samples());
  ref_features_ = transform_pipeline(reference_, obj_);
}

MaterialParams WaveguideInversion::material(const Vector& x) const {
  if (x.size() != 2) throw std::invalid_argument("parameter vector must be [E, nu]");
  return MaterialParams{x[0], x[1], density_};
}

bool WaveguideInversion::feasible(const Vector& x) const {
  return x.size() == 2 && fits_window(material(x), model_.config());
}

Evaluation WaveguideInversion::evaluate(const Vector& x) {
  const auto fj = model_.jacobian(material(x));
  const auto feat = transform_pipeline(fj.output.signal, obj_);
  Evaluation e;
  e.residual = to_vector(ref_features_) - to_vector(feat);
  e.jacobian = feature_jacobian(fj, obj_);
  e.relative_signal_error = relative_2(reference_vec_, to_vector(fj.output.signal.samples()));
  return e;
}

std::vector<double> WaveguideInversion::residual(const Vector& x) {
  const auto out = model_.response(material(x));
  const auto feat = transform_pipeline(out.signal, obj_);
  std::vector<double> r(feat.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = ref_features_[i] - feat[i];
  return r;
}

double WaveguideInversion::objective(const Vector& x) {
  const auto r = residual(x);
  double s = 0.0;
  for (double v : r) s += v * v;
  return 0.5 * s;
}

LeastSquaresProblem WaveguideInversion::problem() {
  return LeastSquaresProblem{[this](const Vector& x) { return evaluate(x); },
                             [this](const Vector& x) { return feasible(x); }};
}

}  // namespace waveinv
