#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "waveinv/fft.hpp"
#include "waveinv/forward.hpp"
#include "waveinv/io.hpp"
#include "waveinv/objective.hpp"

using namespace waveinv;
using std::numbers::pi;

namespace {

Signal random_signal(std::size_t n, unsigned seed, bool zero_mean = true, double dt = 1e-3) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  std::vector<double> v(n);
  double mean = 0.0;
  for (auto& x : v) {
    x = nd(gen);
    mean += x;
  }
  if (zero_mean) {
    for (auto& x : v) x -= mean / static_cast<double>(n);
  }
  return Signal(std::move(v), dt);
}

Signal tone(std::size_t n, int k, double amp, bool cosine) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double arg = 2.0 * pi * k * static_cast<double>(i) / static_cast<double>(n);
    v[i] = amp * (cosine ? std::cos(arg) : std::sin(arg));
  }
  return Signal(std::move(v), 1.0 / static_cast<double>(n));
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("signal invariants") {
  CHECK_THROWS_AS(Signal(std::vector<double>(3, 0.0), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(Signal(std::vector<double>(1, 0.0), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(Signal(std::vector<double>(4, 0.0), 0.0), std::invalid_argument);
  Signal s(std::vector<double>(8, 1.0), 0.5);
  CHECK(s.duration() == doctest::Approx(4.0));
}

TEST_CASE("dft of an impulse is flat") {
  const auto spec = dft_forward(Signal({1, 0, 0, 0}, 1.0));
  REQUIRE(spec.size() == 3);
  for (const auto& c : spec.coeffs) CHECK(std::abs(c - Complex(1.0, 0.0)) < 1e-15);
  CHECK(spec.df == doctest::Approx(0.25));
}

TEST_CASE("dft of zeros is zero") {
  const auto spec = dft_forward(Signal::zeros(16, 1.0));
  for (const auto& c : spec.coeffs) CHECK(std::abs(c) == 0.0);
}

TEST_CASE("dft round trip and Parseval") {
  const auto s = random_signal(1024, 7, false);
  const auto spec = dft_forward(s);
  CHECK(spec.coeffs[0].imag() == 0.0);
  const auto back = dft_inverse(spec, s.dt());
  double err = 0.0, ref = 0.0, energy = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    err = std::max(err, std::abs(back[i] - s[i]));
    ref = std::max(ref, std::abs(s[i]));
    energy += s[i] * s[i];
  }
  CHECK(err / ref < 1e-12);
  const std::size_t h = s.size() / 2;
  double spectral = std::norm(spec.coeffs[0]) + std::norm(spec.coeffs[h]);
  for (std::size_t k = 1; k < h; ++k) spectral += 2.0 * std::norm(spec.coeffs[k]);
  spectral /= static_cast<double>(s.size());
  CHECK(std::abs(spectral - energy) / energy < 1e-10);
}

TEST_CASE("analytic signal of cosine and sine") {
  const std::size_t n = 256;
  const int k = 5;
  const auto ac = analytic_signal(tone(n, k, 1.0, true));
  const auto as = analytic_signal(tone(n, k, 1.0, false));
  double ec = 0.0, es = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Complex rot = std::exp(Complex(0.0, 2.0 * pi * k * static_cast<double>(i) / n));
    ec = std::max(ec, std::abs(ac[i] - rot));
    es = std::max(es, std::abs(as[i] - Complex(0.0, -1.0) * rot));
  }
  CHECK(ec < 1e-10);
  CHECK(es < 1e-10);
}

TEST_CASE("analytic signal keeps the (mean removed) input as real part") {
  const auto s = random_signal(512, 3);
  const auto a = analytic_signal(s);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(a[i].real() - s[i]) < 1e-12);
}

TEST_CASE("envelope examples") {
  const auto e = envelope(tone(256, 9, 2.5, true));
  for (std::size_t i = 10; i < 246; ++i) CHECK(std::abs(e[i] - 2.5) < 1e-9);

  const auto z = envelope(Signal::zeros(64, 1.0));
  CHECK(max_abs(z.samples()) == 0.0);

  // Gaussian envelope of the excitation packet.
  const auto cfg = ForwardConfig::desk_preset();
  const auto p = excitation(cfg);
  const auto env = envelope(p);
  const double sigma = cfg.sigma();
  double dev = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double t = p.time(i);
    if (std::abs(t - cfg.packet_center) > 2.0 * sigma) continue;
    const double g = std::exp(-(t - cfg.packet_center) * (t - cfg.packet_center) / (2.0 * sigma * sigma));
    dev = std::max(dev, std::abs(env[i] - g));
  }
  CHECK(dev <= 0.02);
}

TEST_CASE("residual_envelope examples") {
  const auto a = random_signal(128, 11);
  std::vector<double> neg(a.samples().begin(), a.samples().end());
  for (auto& x : neg) x = -x;
  CHECK(max_abs(residual_envelope(a, Signal(neg, a.dt()))) < 1e-12);
  const auto r = residual_envelope(tone(256, 7, 2.0, true), tone(256, 7, 1.0, true));
  for (std::size_t i = 10; i < 246; ++i) CHECK(std::abs(r[i] - 1.0) < 1e-9);
}

TEST_CASE("residual_signal examples") {
  const auto r = residual_signal(Signal({1, 2}, 1.0), Signal({0, 1}, 1.0));
  CHECK(r == std::vector<double>{1.0, 1.0});
  CHECK_THROWS(residual_signal(Signal({1, 2}, 1.0), Signal({1, 2}, 2.0)));
  const auto ref = random_signal(16, 2);
  CHECK(max_abs(residual_signal(ref, ref)) == 0.0);
}

TEST_CASE("autocorr_spectrum hand examples") {
  const std::vector<Complex> u{{1, 0}, {0, 1}};
  const auto e = autocorr_spectrum(u);
  REQUIRE(e.size() == 2);
  CHECK(std::abs(e[0] - Complex(2, 0)) < 1e-15);
  CHECK(std::abs(e[1] - Complex(0, 1)) < 1e-15);
  const std::vector<Complex> single{{3, 4}};
  CHECK(std::abs(autocorr_spectrum(single)[0] - Complex(25, 0)) < 1e-12);
  CHECK_THROWS(autocorr_spectrum(std::span<const Complex>{}));
}

TEST_CASE("fast autocorrelation matches the literal sum and E0 is real") {
  const auto spec = dft_forward(random_signal(256, 5));
  const auto u = positive_coefficients(spec);
  const auto slow = autocorr_spectrum(u);
  const auto fast = autocorr_spectrum_fast(u);
  double scale = 0.0, err = 0.0;
  for (std::size_t k = 0; k < slow.size(); ++k) {
    scale = std::max(scale, std::abs(slow[k]));
    err = std::max(err, std::abs(slow[k] - fast[k]));
  }
  CHECK(err / scale < 1e-12);
  CHECK(slow[0].imag() == 0.0);
  CHECK(fast[0].imag() == 0.0);
  CHECK(slow[0].real() > 0.0);
}

// Unnormalized DFT convention: DFT(e^2)_k = (4 / n) E_k. The identity needs
// U_0 = 0 and U_{n/2} = 0, so the alternating component is removed as well.
TEST_CASE("squared envelope spectrum equals four times the autocorrelation") {
  for (std::size_t n : {256u, 1024u}) {
    for (unsigned seed = 0; seed < 20; ++seed) {
      auto s = random_signal(n, 100 + seed);
      double alt = 0.0;
      for (std::size_t i = 0; i < n; ++i) alt += (i % 2 ? -s[i] : s[i]);
      for (std::size_t i = 0; i < n; ++i) s.mutable_samples()[i] -= (i % 2 ? -alt : alt) / static_cast<double>(n);
      const auto env = envelope(s);
      std::vector<double> sq(n);
      for (std::size_t i = 0; i < n; ++i) sq[i] = env[i] * env[i];
      const auto lhs = dft_forward(Signal(sq, s.dt()));
      const auto e = autocorr_spectrum_fast(positive_coefficients(dft_forward(s)));
      double scale = 0.0, err = 0.0;
      for (std::size_t k = 0; k < e.size(); ++k) {
        scale = std::max(scale, std::abs(lhs.coeffs[k]));
        err = std::max(err, std::abs(lhs.coeffs[k] - 4.0 / static_cast<double>(n) * e[k]));
      }
      CHECK(err / scale < 1e-9);
    }
  }
}

TEST_CASE("unwrap examples and properties") {
  const std::vector<double> a{0.0, 0.1, 0.2};
  CHECK(unwrap(a) == a);
  const auto b = unwrap(std::vector<double>{3.0, -3.0});
  CHECK(b[0] == 3.0);
  CHECK(b[1] == doctest::Approx(3.0 + (2 * pi - 6.0)).epsilon(1e-14));
  const auto c = unwrap(std::vector<double>{0.0, pi});
  CHECK(c[1] == pi);

  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> ud(-pi, pi);
  std::vector<double> r(200);
  for (auto& x : r) x = ud(gen);
  const auto u1 = unwrap(r);
  CHECK(unwrap(u1) == u1);
  for (std::size_t i = 1; i < u1.size(); ++i) {
    const double d = u1[i] - u1[i - 1];
    CHECK(d > -pi);
    CHECK(d <= pi);
    const double m = std::remainder(u1[i] - r[i], 2 * pi);
    CHECK(std::abs(m) < 1e-9);
  }
}

TEST_CASE("damping weights") {
  const auto g = damping_weights(50, 10.0, 1.0, 1.0);
  CHECK(g[0] == 1.0);
  for (std::size_t k = 1; k < g.size(); ++k) CHECK(g[k] < g[k - 1]);
  CHECK(g[10] == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("stable_arg examples") {
  const std::size_t m = 8;
  std::vector<Complex> y(m);
  for (std::size_t k = 0; k < m; ++k) y[k] = (k % 2 == 0) ? 1.0 : -1.0;
  CHECK(y[0] == Complex(1, 0));
  CHECK(y[1] == Complex(-1, 0));
  CHECK(y[2] == Complex(1, 0));
  CHECK(y[3] == Complex(-1, 0));
  const auto f = stable_arg(y, 3.0, 2.0, 1.0);
  REQUIRE(f.values.size() == m);
  CHECK(f.gamma[0] == 1.0);
  for (std::size_t k = 0; k < m; ++k) CHECK(f.values[k] == doctest::Approx(-f.gamma[k] * pi * k));

  CHECK_THROWS(stable_arg(y, 3.0, 2.0, 0.5));
  CHECK_THROWS(stable_arg(y, 3.0, 2.0, 11.0));
  CHECK_THROWS(stable_arg(y, 0.0, 2.0, 1.0));
  std::vector<Complex> zeros(4);
  CHECK_THROWS(stable_arg(zeros, 1.0, 1.0, 1.0));

  // zero coefficients take phase 0
  std::vector<Complex> partial{{1, 0}, {0, 0}, {1, 0}};
  const auto fp = stable_arg(partial, 1e3, 1.0, 1.0);
  CHECK(std::isfinite(fp.values[1]));
}

TEST_CASE("phase residual properties") {
  const auto cfg = ForwardConfig::desk_preset();
  const auto ref = forward_response(MaterialParams{3.9559e9, 0.40079, 1400.3}, cfg).signal;
  const auto fr = phase_feature(ref, cfg.bandwidth, 1.0);

  CHECK(max_abs(phase_residual(fr, fr)) == 0.0);

  std::vector<double> scaled(ref.samples().begin(), ref.samples().end());
  for (auto& x : scaled) x *= 3.7;
  const auto fs = phase_feature(Signal(scaled, ref.dt()), cfg.bandwidth, 1.0);
  CHECK(max_abs(phase_residual(fr, fs)) < 1e-9);

  const auto other = forward_response(MaterialParams{3.8e9, 0.41, 1400.3}, cfg).signal;
  const auto fo = phase_feature(other, cfg.bandwidth, 1.0);
  const auto ab = phase_residual(fr, fo);
  const auto ba = phase_residual(fo, fr);
  for (std::size_t k = 0; k < ab.size(); ++k) CHECK(ab[k] == -ba[k]);

  const auto f_other_c = phase_feature(other, cfg.bandwidth, 2.0);
  CHECK_THROWS(phase_residual(fr, f_other_c));
  PhaseFeature shorter{{0.0}, {1.0}};
  CHECK_THROWS(phase_residual(fr, shorter));
}

TEST_CASE("time shift maps to a linear phase residual") {
  const auto cfg = ForwardConfig::desk_preset();
  const auto ref = excitation(cfg);
  const std::size_t n = ref.size();
  const int shift = 3;
  // sim[i] = ref[i + shift] (circular)
  std::vector<double> sim(n);
  for (std::size_t i = 0; i < n; ++i) sim[i] = ref[(i + shift) % n];
  const auto fr = phase_feature(ref, cfg.bandwidth, 1.0);
  const auto fs = phase_feature(Signal(sim, ref.dt()), cfg.bandwidth, 1.0);
  const auto r = phase_residual(fr, fs);
  const double T = ref.duration();
  for (std::size_t k = 1; k < 400; ++k) {
    const double omega = 2.0 * pi * static_cast<double>(k) / T;
    CHECK(std::abs(r[k] - (-fr.gamma[k] * omega * shift * ref.dt())) < 1e-6);
  }
}

TEST_CASE("transform_pipeline examples") {
  const auto cfg = ForwardConfig::desk_preset();
  const ObjectiveConfig obj{ObjectiveKind::autocorr_phase, cfg.bandwidth, 1.0};
  CHECK_THROWS_AS(transform_pipeline(Signal::zeros(64, 1.0), obj), NumericalError);

  const auto p = excitation(cfg);
  const auto f1 = transform_pipeline(p, obj);
  const auto f2 = transform_pipeline(p, obj);
  CHECK(f1 == f2);
  const auto feat = phase_feature(p, cfg.bandwidth, 1.0);
  const double np = static_cast<double>(feat.values.size());
  for (std::size_t k = 0; k < feat.values.size(); ++k) {
    CHECK(std::isfinite(feat.values[k]));
    CHECK(std::abs(feat.values[k]) <= feat.gamma[k] * (pi * np + pi) + 1e-12);
  }

  std::vector<double> rev(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) rev[i] = p[p.size() - 1 - i];
  CHECK(transform_pipeline(Signal(rev, p.dt()), obj) != f1);

  CHECK(parse_objective_kind("autocorr-phase") == ObjectiveKind::autocorr_phase);
  CHECK(to_string(ObjectiveKind::envelope) == "envelope");
  CHECK_THROWS(parse_objective_kind("bogus"));
}

TEST_CASE("transform derivatives match finite differences") {
  const auto cfg = ForwardConfig::desk_preset();
  const auto fj = forward_jacobian(MaterialParams{3.9559e9, 0.40079, 1400.3}, cfg);
  const auto& s = fj.output.signal;
  const auto& dir = fj.d_poisson;
  for (auto kind : {ObjectiveKind::signal, ObjectiveKind::envelope, ObjectiveKind::autocorr_phase}) {
    const ObjectiveConfig obj{kind, cfg.bandwidth, 1.0};
    const auto d = transform_derivative(s, dir, obj);
    const double h = 1e-7 * max_abs(s.samples()) / max_abs(dir.samples());
    std::vector<double> plus(s.samples().begin(), s.samples().end()), minus = plus;
    for (std::size_t i = 0; i < plus.size(); ++i) {
      plus[i] += h * dir[i];
      minus[i] -= h * dir[i];
    }
    const auto fp = transform_pipeline(Signal(plus, s.dt()), obj);
    const auto fm = transform_pipeline(Signal(minus, s.dt()), obj);
    double err = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) err = std::max(err, std::abs((fp[k] - fm[k]) / (2 * h) - d[k]));
    INFO(to_string(kind));
    CHECK(err / max_abs(d) < 1e-4);
  }
}

TEST_CASE("signal csv and binary round trips") {
  const auto s = random_signal(32, 4);
  std::ostringstream os;
  io::write_signal_csv(os, s);
  CHECK(os.str().rfind("t_seconds,amplitude\n", 0) == 0);

  const auto dir = std::filesystem::temp_directory_path() / "waveinv_io_test";
  std::filesystem::create_directories(dir);
  io::write_signal_binary(dir / "s.bin", s);
  const auto b = io::read_signal_binary(dir / "s.bin");
  CHECK(b.dt() == s.dt());
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(b[i] == s[i]);
  io::write_signal_csv(dir / "s.csv", s);
  const auto c = io::read_signal_csv(dir / "s.csv");
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(c[i] == s[i]);
  CHECK(c.dt() == doctest::Approx(s.dt()).epsilon(1e-12));
  std::filesystem::remove_all(dir);

  std::ostringstream fs;
  io::write_feature_csv(fs, PhaseFeature{{0.5, 0.25}, {1.0, 0.9}}, 2.0);
  CHECK(fs.str().rfind("k,omega_rad_per_s,value,gamma\n", 0) == 0);
}

TEST_CASE("key value parsing") {
  const auto kv = io::parse_key_values("# comment\na = 1\n b=two # trailing\n\n");
  CHECK(kv.at("a") == "1");
  CHECK(kv.at("b") == "two");
  CHECK_THROWS_AS(io::parse_key_values("novalue\n"), std::invalid_argument);
  CHECK(io::checksum_hex("").size() == 16);
  CHECK(io::fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}
