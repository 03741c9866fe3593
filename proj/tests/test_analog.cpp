#include <catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "tactwin/analog.hpp"
#include "tactwin/error.hpp"
#include "tactwin/fft.hpp"
#include "tactwin/siggen.hpp"

using namespace tactwin;
using namespace tactwin::analog;
using Catch::Approx;
using std::numbers::pi;

namespace {

Errc codeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::InvalidArgument;
}

// Amplitude and phase (deg) of the component at f, by projection over whole cycles.
std::pair<double, double> project(const std::vector<double>& y, double f, double dt, std::size_t from,
                                  std::size_t count) {
  double s = 0.0, c = 0.0;
  for (std::size_t i = from; i < from + count; ++i) {
    const double t = static_cast<double>(i) * dt;
    s += y[i] * std::sin(2 * pi * f * t);
    c += y[i] * std::cos(2 * pi * f * t);
  }
  s *= 2.0 / static_cast<double>(count);
  c *= 2.0 / static_cast<double>(count);
  return {std::hypot(s, c), std::atan2(c, s) * 180.0 / pi};
}

}  // namespace

TEST_CASE("Sallen-Key design values") {
  const auto sk = sallenKeyDesign(1300.0);
  CHECK(sk.R == Approx(9996.1128).margin(1e-3));
  CHECK(std::abs(sk.R - 10e3) < 5.0);
  CHECK(sk.Q() == Approx(0.6123724).margin(1e-6));
  CHECK(sk.f0() == Approx(1300.0).epsilon(1e-13));
  CHECK(sallenKeyDesign(2600.0).R == Approx(sk.R / 2.0).epsilon(1e-14));
  CHECK(codeOf([] { sallenKeyDesign(0.0); }) == Errc::NonPositiveInput);
  CHECK(codeOf([] { sallenKeyDesign(1300.0, -1e-9); }) == Errc::NonPositiveInput);
}

TEST_CASE("Sallen-Key transfer function") {
  SallenKeySpec spec;
  spec.R = 10e3;
  const auto tf = sallenKeyTf(spec);
  CHECK(tf.denominator() == std::vector<double>{1.0, 2.0 * spec.C2 * spec.R, spec.C1 * spec.C2 * spec.R * spec.R});
  CHECK(std::abs(tf.response(0.0)) == Approx(1.0));
  // Closed form: arg H(jw) = -atan2(2 C2 R w, 1 - C1 C2 R^2 w^2)
  const double w = 2 * pi * 1000.0;
  const double oracle =
      -std::atan2(2 * spec.C2 * spec.R * w, 1 - spec.C1 * spec.C2 * spec.R * spec.R * w * w) * 180.0 / pi;
  CHECK(tf.phaseDeg(1000.0) == Approx(oracle).margin(1e-9));
  CHECK(tf.phaseDeg(1000.0) == Approx(-72.01).margin(0.05));
  CHECK(tf.magnitude(spec.f0()) == Approx(spec.Q()).epsilon(1e-12));
}

TEST_CASE("second-order stages are low-pass from 0 to -180 degrees") {
  const auto sk = sallenKeyTf(sallenKeyDesign(1300.0));
  HBridgeFilterSpec hb;
  hb.L = hbridgeInductance(1000.0, hb.C_p);
  hb.R_d = dampingFor(0.6, hb.L, hb.C_p, hb.R_L).R_d;
  const auto h = hbridgeTf(hb);
  for (const auto* tf : {&sk, &h}) {
    CHECK(tf->phaseDeg(1e-6) == Approx(0.0).margin(1e-6));
    CHECK(tf->phaseDeg(1e9) == Approx(-180.0).margin(0.01));
    const double f0 = tf->naturalFrequency();
    double last = tf->magnitude(f0 / 10.0);
    double lastPhase = tf->phaseDeg(f0 / 10.0);
    for (double f = f0 / 10.0; f <= 10.0 * f0; f *= 1.01) {
      REQUIRE(tf->magnitude(f) <= last + 1e-15);
      REQUIRE(tf->phaseDeg(f) <= lastPhase + 1e-12);
      last = tf->magnitude(f);
      lastPhase = tf->phaseDeg(f);
    }
    CHECK(tf->stable());
  }
}

TEST_CASE("H-bridge design values") {
  const double L = hbridgeInductance(1000.0, 120e-9);
  CHECK(L == Approx(1.0 / (2 * 120e-9 * std::pow(2 * pi * 1000.0, 2))).epsilon(1e-14));
  CHECK(L * 1e3 == Approx(105.5).margin(0.05));
  HBridgeFilterSpec closed;
  closed.L = L;
  CHECK(closed.f0() == Approx(1000.0).epsilon(1e-13));
  CHECK(hbridgeTf(closed).naturalFrequency() == Approx(1000.0).epsilon(1e-12));

  const auto d = dampingFor(0.6, 0.1, 120e-9, 90.0);
  CHECK_FALSE(d.clamped);
  CHECK(d.R_d == Approx(std::sqrt(0.1) / (0.6 * std::sqrt(2 * 120e-9)) - 90.0).epsilon(1e-14));
  CHECK(d.R_d == Approx(985.7).margin(0.5));
  HBridgeFilterSpec check{0.1, 90.0, d.R_d};
  CHECK(check.Q() == Approx(0.6).epsilon(1e-12));

  const auto inf = dampingFor(1e9, 0.1, 120e-9, 90.0);
  CHECK(inf.clamped);
  CHECK(inf.R_d == 0.0);
  CHECK(codeOf([] { hbridgeInductance(-1.0, 1e-9); }) == Errc::NonPositiveInput);
  CHECK(codeOf([] { dampingFor(0.6, 0.0, 1e-9, 1.0); }) == Errc::NonPositiveInput);
}

TEST_CASE("H-bridge phase at the implied 13.95 mH") {
  HBridgeFilterSpec s{13.95e-3, 90.0, 0.0};
  CHECK(hbridgeTf(s).phaseDeg(1000.0) == Approx(-8.89).margin(0.01));
  s.R_d = 1000.0;
  CHECK(hbridgeTf(s).phaseDeg(1000.0) == Approx(-62.16).margin(0.01));
  CHECK(hbridgeTf(s).magnitude(0.0) == Approx(1.0));
}

TEST_CASE("design-filter report") {
  const auto j = designFilter({});
  CHECK(j["sallen_key"]["R"].get<double>() == Approx(9996.11).margin(0.01));
  CHECK(j["hbridge"]["R_d"].get<double>() == Approx(985.83).margin(0.01));
  CHECK(j["hbridge"]["phase_table"].size() == 2);
}

TEST_CASE("identity and unstable filters") {
  const RationalTransferFunction one({1.0}, {1.0});
  const std::vector<double> x{1.0, -2.0, 3.5, 0.0, 7.0};
  CHECK(applyToSamples(one, x, 1e-3) == x);
  const RationalTransferFunction unstable({1.0}, {1.0, -1.0, 1.0});
  CHECK_FALSE(unstable.stable());
  CHECK(codeOf([&] { applyToSamples(unstable, x, 1e-3); }) == Errc::UnstableFilter);
  CHECK(codeOf([] { RationalTransferFunction({1.0, 1.0, 1.0}, {1.0, 1.0}); }) == Errc::InvalidArgument);
  CHECK(codeOf([] { RationalTransferFunction({1.0}, {0.0, 0.0}); }) == Errc::InvalidArgument);
}

namespace {

struct Steady {
  double f, amp, phase;
};

// Steady-state response to a long sine with a whole number of samples per cycle.
Steady steady(const RationalTransferFunction& tf, double f, double fs) {
  const std::size_t perCycle = static_cast<std::size_t>(std::llround(fs / f));
  const double fx = fs / static_cast<double>(perCycle);
  const std::size_t cycles = std::max<std::size_t>(40, static_cast<std::size_t>(fx * 0.05));
  const std::size_t n = perCycle * cycles * 2;
  const double dt = 1.0 / fs;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(2 * pi * fx * static_cast<double>(i) * dt);
  const auto y = applyToSamples(tf, x, dt);
  const auto [amp, ph] = project(y, fx, dt, n / 2, n / 2);
  return {fx, amp, ph};
}

}  // namespace

TEST_CASE("discretized filter is the f0-prewarped bilinear map of the analytic one") {
  const auto tf = sallenKeyTf(sallenKeyDesign(1300.0));
  const double fs = 200e3, dt = 1.0 / fs;
  const double w0 = 2 * pi * tf.naturalFrequency();
  const double K = w0 / std::tan(w0 * dt / 2);
  for (double f : {50.0, 1300.0, 5000.0, 20000.0, 50000.0}) {
    const auto r = steady(tf, f, fs);
    const double warped = K * std::tan(pi * r.f * dt) / (2 * pi);
    const auto e = evaluate(tf, warped);
    INFO("f = " << r.f);
    CHECK(r.amp == Approx(e.magnitude).epsilon(2e-3));
    CHECK(std::remainder(r.phase - e.phaseDeg, 360.0) == Approx(0.0).margin(0.1));
  }
}

TEST_CASE("discretized filter tracks the analytic response well below Nyquist") {
  const auto tf = sallenKeyTf(sallenKeyDesign(1300.0));
  const double fs = 200e3;
  // Magnitude within 1 % up to Fs/30; beyond that the bilinear warp of a
  // 40 dB/decade slope exceeds it (6.6 % at Fs/10). Phase holds to Fs/10.
  for (double f : {50.0, 250.0, 1000.0, 1300.0, 5000.0, 6600.0, 20000.0}) {
    const auto r = steady(tf, f, fs);
    const auto e = evaluate(tf, r.f);
    INFO("f = " << r.f);
    if (r.f <= fs / 30) CHECK(r.amp == Approx(e.magnitude).epsilon(0.01));
    CHECK(std::remainder(r.phase - e.phaseDeg, 360.0) == Approx(0.0).margin(1.0));
  }
}

TEST_CASE("PWM carrier is attenuated at least as much as the analytic curve says") {
  const auto tf = sallenKeyTf(sallenKeyDesign(1300.0));
  const std::vector<std::uint16_t> duties(4096, 1024);  // 25% duty, constant
  const auto pwm = siggen::pwmEdgeStream(duties, 25000.0, 12);
  const int os = 64;
  const auto x = pwm.rasterize(os);
  const double dt = 1.0 / (25000.0 * os);
  const auto y = applyToSamples(tf, x, dt);
  const std::size_t half = x.size() / 2;
  const std::vector<double> xs(x.begin() + half, x.end()), ys(y.begin() + half, y.end());
  const auto X = fft::forward(xs), Y = fft::forward(ys);
  const std::size_t k = half / os;  // 25 kHz bin: one cycle per carrier period
  const double ratio = std::abs(Y[k]) / std::abs(X[k]);
  CHECK(ratio <= tf.magnitude(25000.0) * 1.01);
  CHECK(ratio > 0.0);
}

TEST_CASE("Bode CSV") {
  std::ostringstream out;
  writeBodeCsv(out, sallenKeyTf(sallenKeyDesign(1300.0)), 1.0, 1e5, 11);
  std::istringstream in(out.str());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 12);
  CHECK_THROWS_AS(writeBodeCsv(out, sallenKeyTf(sallenKeyDesign(1300.0)), 10.0, 1.0, 11), Error);
}
