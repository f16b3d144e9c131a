#include <doctest.h>

#include <cmath>

#include "waveinv/fft.hpp"
#include "waveinv/forward.hpp"
#include "waveinv/inversion.hpp"

using namespace waveinv;

namespace {

const MaterialParams kPeek{3.9559e9, 0.40079, 1400.3};

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("material invariants") {
  CHECK(kPeek.valid());
  CHECK_FALSE(MaterialParams{0.0, 0.3, 1000}.valid());
  CHECK_FALSE(MaterialParams{1e9, 0.5, 1000}.valid());
  CHECK_FALSE(MaterialParams{1e9, 0.3, 0}.valid());
  CHECK_THROWS(MaterialParams{1e9, -0.1, 1000}.validate());
}

TEST_CASE("wave speeds") {
  const auto c = wave_speeds(kPeek);
  CHECK(c.longitudinal == doctest::Approx(1680.785).epsilon(1e-6));
  CHECK(c.longitudinal == doctest::Approx(1680.9).epsilon(1e-4));
  CHECK(c.transverse == doctest::Approx(1004.18).epsilon(1e-5));
  CHECK(c.transverse == doctest::Approx(1004.3).epsilon(2e-4));
  CHECK(c.transverse < c.longitudinal);

  // nu -> 0.5 limit, evaluated just inside the open interval
  const auto h = wave_speeds(MaterialParams{2e9, 0.5 - 1e-12, 1000});
  CHECK(h.transverse == doctest::Approx(h.longitudinal / std::sqrt(3.0)).epsilon(1e-9));

  const auto d = wave_speeds(MaterialParams{kPeek.youngs_modulus, kPeek.poisson_ratio, 2 * kPeek.density});
  CHECK(d.longitudinal == doctest::Approx(c.longitudinal / std::sqrt(2.0)));
  CHECK(d.transverse == doctest::Approx(c.transverse / std::sqrt(2.0)));
}

TEST_CASE("arrival times and sensitivities") {
  const auto cfg = ForwardConfig::desk_preset();
  const auto tau = arrival_times(kPeek, cfg);
  CHECK(tau[0] < tau[1]);
  CHECK(tau[1] < tau[2]);
  CHECK(tau[1] == doctest::Approx(0.5 * (tau[0] + tau[2])));
  const auto s = arrival_sensitivity(kPeek, cfg);
  CHECK(s.d_poisson[0] == 0.0);
  CHECK(s.d_youngs[0] == doctest::Approx(-tau[0] / (2 * kPeek.youngs_modulus)));
  CHECK(s.d_youngs[0] < 0.0);
  const double h = 1e-6;
  auto nu_plus = kPeek, nu_minus = kPeek;
  nu_plus.poisson_ratio += h;
  nu_minus.poisson_ratio -= h;
  const double fd = (arrival_times(nu_plus, cfg)[2] - arrival_times(nu_minus, cfg)[2]) / (2 * h);
  CHECK(s.d_poisson[2] == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("excitation") {
  auto cfg = ForwardConfig::desk_preset();
  CHECK(cfg.bandwidth == doctest::Approx(0.65 * cfg.center_frequency));
  const auto p = excitation(cfg);
  CHECK(max_abs(p.samples()) <= 1.0);
  // f t_c = 9 is an integer and t_c falls on sample 150
  const auto i = static_cast<std::size_t>(std::lround(cfg.packet_center / cfg.dt));
  CHECK(std::abs(p[i]) < 1e-9);
  CHECK(cfg.sigma() == doctest::Approx(1.0 / (M_PI * cfg.bandwidth)));
}

TEST_CASE("presets") {
  CHECK(ForwardConfig::preset("desk").center_frequency == 3e6);
  CHECK(ForwardConfig::preset("mhz1").center_frequency == 1e6);
  const auto g = ForwardConfig::preset("ghz");
  CHECK(g.center_frequency == 1e9);
  CHECK(g.samples == (1u << 20));
  CHECK_THROWS(ForwardConfig::preset("nope"));
  for (const char* name : {"desk", "mhz1", "ghz"}) CHECK_NOTHROW(ForwardConfig::preset(name).validate());
}

TEST_CASE("single packet response is a delayed excitation") {
  auto cfg = ForwardConfig::desk_preset();
  cfg.amplitudes = {1.0, 0.0, 0.0};
  const auto y = forward_response(kPeek, cfg).signal;
  const auto p = excitation(cfg);
  const auto tau = arrival_times(kPeek, cfg);
  std::size_t best_lag = 0;
  double best = -1e300;
  for (std::size_t lag = 0; lag < y.size() / 2; ++lag) {
    double c = 0.0;
    for (std::size_t i = 0; i + lag < y.size(); ++i) c += y[i + lag] * p[i];
    if (c > best) {
      best = c;
      best_lag = lag;
    }
  }
  CHECK(best_lag == static_cast<std::size_t>(std::lround(tau[0] / cfg.dt)));
}

TEST_CASE("primary packet does not depend on nu") {
  auto cfg = ForwardConfig::desk_preset();
  cfg.amplitudes = {1.0, 0.0, 0.0};
  auto other = kPeek;
  other.poisson_ratio = 0.35;
  const auto a = forward_response(kPeek, cfg).signal;
  const auto b = forward_response(other, cfg).signal;
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("output signal equals the inverse DFT of its spectrum") {
  const auto cfg = ForwardConfig::desk_preset();
  const auto out = forward_response(kPeek, cfg);
  CHECK(out.eval_count_delta == 1);
  const auto back = dft_inverse(out.spectrum, cfg.dt);
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i] == doctest::Approx(out.signal[i]).epsilon(1e-12));
}

TEST_CASE("linearity in the excitation amplitudes") {
  auto cfg = ForwardConfig::desk_preset();
  const auto a = forward_response(kPeek, cfg).signal;
  for (auto& amp : cfg.amplitudes) amp *= 2.5;
  const auto b = forward_response(kPeek, cfg).signal;
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(b[i] - 2.5 * a[i]) <= 1e-12 * 2.5 * max_abs(a.samples()));
}

TEST_CASE("truncated packets are rejected") {
  auto cfg = ForwardConfig::desk_preset();
  cfg.samples = 1024;
  CHECK_FALSE(fits_window(kPeek, cfg));
  CHECK_THROWS_AS(forward_response(kPeek, cfg), ModelError);
}

TEST_CASE("evaluation accounting") {
  WaveguideModel model(ForwardConfig::desk_preset());
  CHECK(model.evaluations() == 0);
  (void)model.response(kPeek);
  CHECK(model.evaluations() == 1);
  (void)model.jacobian(kPeek);
  CHECK(model.evaluations() == 2);
  model.reset_evaluations();
  CHECK(model.evaluations() == 0);
}

TEST_CASE("forward jacobian matches central differences") {
  const auto cfg = ForwardConfig::desk_preset();
  const auto j = forward_jacobian(kPeek, cfg);
  auto fd = [&](bool youngs) {
    auto plus = kPeek, minus = kPeek;
    double& pp = youngs ? plus.youngs_modulus : plus.poisson_ratio;
    double& pm = youngs ? minus.youngs_modulus : minus.poisson_ratio;
    const double h = 1e-6 * pp;
    pp += h;
    pm -= h;
    const auto yp = forward_response(plus, cfg).signal;
    const auto ym = forward_response(minus, cfg).signal;
    std::vector<double> d(yp.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = (yp[i] - ym[i]) / (2 * h);
    return d;
  };
  for (bool youngs : {true, false}) {
    const auto d = fd(youngs);
    const auto& an = youngs ? j.d_youngs : j.d_poisson;
    double err = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) err = std::max(err, std::abs(d[i] - an[i]));
    CHECK(err <= 1e-5 * max_abs(an.samples()));
  }
}

TEST_CASE("residual jacobian matches central differences of the pipeline") {
  const auto cfg = ForwardConfig::desk_preset();
  for (auto kind : {ObjectiveKind::signal, ObjectiveKind::envelope, ObjectiveKind::autocorr_phase}) {
    const auto obj = objective_for(cfg, kind);
    const auto ref = transform_pipeline(forward_response(kPeek, cfg).signal, obj);
    const MaterialParams at{3.8e9, 0.41, kPeek.density};
    const Matrix jr = residual_jacobian(at, cfg, obj, ref);
    Matrix fd(jr.rows(), 2);
    for (int c = 0; c < 2; ++c) {
      auto plus = at, minus = at;
      double& pp = c == 0 ? plus.youngs_modulus : plus.poisson_ratio;
      double& pm = c == 0 ? minus.youngs_modulus : minus.poisson_ratio;
      const double h = 1e-6 * pp;
      pp += h;
      pm -= h;
      const auto fp = transform_pipeline(forward_response(plus, cfg).signal, obj);
      const auto fm = transform_pipeline(forward_response(minus, cfg).signal, obj);
      for (Eigen::Index i = 0; i < jr.rows(); ++i) fd(i, c) = -(fp[i] - fm[i]) / (2 * h);
    }
    for (int c = 0; c < 2; ++c) {
      INFO(to_string(kind), " column ", c);
      CHECK((jr.col(c) - fd.col(c)).cwiseAbs().maxCoeff() / jr.col(c).cwiseAbs().maxCoeff() < 1e-4);
    }
    CHECK(residual_jacobian(at, cfg, obj, ref) == jr);
    CHECK_THROWS(residual_jacobian(at, cfg, obj, std::vector<double>(3)));
  }
}

TEST_CASE("phase jacobian is invariant to amplitude scaling") {
  auto cfg = ForwardConfig::desk_preset();
  const auto obj = objective_for(cfg, ObjectiveKind::autocorr_phase);
  const auto ref = transform_pipeline(forward_response(kPeek, cfg).signal, obj);
  const Matrix a = residual_jacobian(kPeek, cfg, obj, ref);
  for (auto& amp : cfg.amplitudes) amp *= 3.0;
  const Matrix b = residual_jacobian(kPeek, cfg, obj, ref);
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-9 * a.cwiseAbs().maxCoeff());
}

TEST_CASE("waveguide inversion wiring") {
  const auto cfg = ForwardConfig::desk_preset();
  const auto ref = forward_response(kPeek, cfg).signal;
  WaveguideInversion inv(cfg, objective_for(cfg, ObjectiveKind::autocorr_phase), ref, kPeek.density);
  const Vector truth{{kPeek.youngs_modulus, kPeek.poisson_ratio}};
  CHECK(inv.objective(truth) < 1e-20);
  const auto e = inv.evaluate(truth);
  CHECK(e.residual.norm() == 0.0);
  CHECK(e.relative_signal_error == 0.0);
  CHECK(inv.evaluations() == 2);
  CHECK(inv.feasible(truth));
  CHECK_FALSE(inv.feasible(Vector{{kPeek.youngs_modulus, 0.6}}));
  CHECK_THROWS(WaveguideInversion(cfg, objective_for(cfg, ObjectiveKind::signal), Signal::zeros(16, 1.0), 1.0));
}
