#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "tactwin/actuator.hpp"
#include "tactwin/error.hpp"

using namespace tactwin;
using namespace tactwin::actuator;
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

// Symmetric three-layer laminate by the parallel-axis theorem.
double laminateEI(const BimorphGeometry& g) {
  const double hs = g.shimThickness, tp = g.piezoThickness;
  const double arm = hs / 2.0 + tp / 2.0;
  return g.width * (g.shimModulus * hs * hs * hs / 12.0 +
                    2.0 * g.piezoModulus * (tp * tp * tp / 12.0 + tp * arm * arm));
}

std::vector<double> logGrid(double lo, double hi, int n) {
  std::vector<double> f;
  for (int i = 0; i < n; ++i) f.push_back(lo * std::pow(hi / lo, i / double(n - 1)));
  return f;
}

const BearingParams kStiff{1e12, 1e-3, 1e9, 1e-9};

}  // namespace

TEST_CASE("laminate properties") {
  const BimorphGeometry g;
  CHECK(g.bendingStiffness() == Approx(laminateEI(g)).epsilon(1e-12));
  CHECK(g.massPerLength() ==
        Approx(g.width * (2 * g.piezoDensity * g.piezoThickness + g.shimDensity * g.shimThickness)));
  BimorphGeometry bad = g;
  bad.width = 0.0;
  CHECK(codeOf([&] { bad.validate(); }) == Errc::InvalidArgument);
}

TEST_CASE("zero volts gives zero deflection and response is linear in volts") {
  const BimorphGeometry g;
  const BearingParams b;
  const auto load = defaultDisplayConfig().lowerImpedance;
  CHECK(tipResponse(g, b, MaxwellLoad::none(), 120.0, 0.0) == 0.0);
  for (double f : {5.0, 80.0, 150.0, 700.0}) {
    const auto w1 = tipDeflection(g, b, load, f, 1.0);
    const auto w7 = tipDeflection(g, b, load, f, 7.0);
    CHECK(std::abs(w7 - 7.0 * w1) <= 1e-10 * std::abs(w7));
  }
}

TEST_CASE("quasi-static tip deflection is M L^2 / 2EI for any bearing") {
  const BimorphGeometry g;
  const double M = g.piezoModulus * g.d31 * g.width * (g.shimThickness + g.piezoThickness) * 20.0;
  const double oracle =
      M * g.length * g.length / (2.0 * laminateEI(g) * std::hypot(1.0, g.lossFactor));
  for (const BearingParams& b : {BearingParams{}, kStiff, BearingParams{100.0, 0.1, 0.05, 1e-6}}) {
    CHECK(tipResponse(g, b, MaxwellLoad::none(), 1e-3, 20.0) == Approx(oracle).epsilon(1e-4));
  }
}

TEST_CASE("stiff bearing approaches the clamped cantilever") {
  const BimorphGeometry g;
  const double oracle = 1.8751040687119611 * 1.8751040687119611 / (2 * pi * g.length * g.length) *
                        std::sqrt(laminateEI(g) / g.massPerLength());
  CHECK(rigidCantileverResonance(g) == Approx(oracle).epsilon(1e-9));
  CHECK(firstResonance(g, kStiff) == Approx(oracle).epsilon(1e-4));
}

TEST_CASE("first resonance rises with bearing stiffness") {
  const BimorphGeometry g;
  const BearingParams b;
  const double base = firstResonance(g, b);
  CHECK(base < rigidCantileverResonance(g));
  double last = 0.0;
  for (double s : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    BearingParams p = b;
    p.kt *= s;
    const double f = firstResonance(g, p);
    CHECK(f > last);
    last = f;
  }
  last = 0.0;
  for (double s : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    BearingParams p = b;
    p.kr *= s;
    const double f = firstResonance(g, p);
    CHECK(f > last);
    last = f;
  }
}

TEST_CASE("Maxwell load is passive and matches the branch formula") {
  const auto load = defaultDisplayConfig().lowerImpedance;
  const auto& br = load.branches.front();
  for (double f = 1.0; f <= 1e4; f *= 1.7) {
    const double w = 2 * pi * f;
    const std::complex<double> jwd(0.0, w * br.damping);
    const auto oracle = load.parallelStiffness + br.stiffness * jwd / (br.stiffness + jwd);
    CHECK(std::abs(load.dynamicStiffness(w) - oracle) <= 1e-9 * std::abs(oracle));
    CHECK(load.impedance(w).real() >= 0.0);
  }
  const auto upper = load.scaled(3.0, LoadLabel::UpperImpedance);
  CHECK(std::abs(upper.impedance(100.0) - 3.0 * load.impedance(100.0)) < 1e-9);
  MaxwellLoad neg;
  neg.parallelStiffness = -1.0;
  CHECK(codeOf([&] { neg.validate(); }) == Errc::InvalidArgument);
}

TEST_CASE("amplitude table") {
  const auto cfg = defaultDisplayConfig();
  const std::array loads{MaxwellLoad::none(), cfg.lowerImpedance, cfg.upperImpedance};
  const std::array volts{60.0, 200.0};
  const auto rows = amplitudeTable(cfg.geometry, cfg.bearing, loads, volts);
  REQUIRE(rows.size() == 6);
  for (std::size_t b = 0; b < 3; ++b) {
    CHECK(rows[3].amplitude[b] == Approx(rows[0].amplitude[b] * 200.0 / 60.0).epsilon(1e-12));
    CHECK(rows[1].amplitude[b] <= rows[0].amplitude[b]);
    CHECK(rows[2].amplitude[b] <= rows[1].amplitude[b]);
  }
  // band maxima agree with a direct sweep
  double peak = 0.0;
  for (double f = 50.0; f <= 300.0; f += 1.0) {
    peak = std::max(peak, tipResponse(cfg.geometry, cfg.bearing, MaxwellLoad::none(), f, 60.0));
  }
  CHECK(rows[0].amplitude[1] == Approx(peak).epsilon(1e-9));
  std::ostringstream out;
  writeAmplitudeCsv(out, rows);
  CHECK(out.str().rfind("voltage_V,load,", 0) == 0);
}

TEST_CASE("bearing fit recovers noiseless parameters and is locally optimal") {
  const BimorphGeometry g;
  const BearingParams truth;
  const auto meas = simulateResponse(g, truth, MaxwellLoad::none(), logGrid(20.0, 1000.0, 40), 20.0);
  FitOptions opt;
  opt.center = BearingParams{truth.kt * 1.5, truth.dt * 0.7, truth.kr * 1.4, truth.dr * 0.6};
  opt.weighting = FitWeighting::Relative;
  const auto fit = fitBearing(g, meas, opt);
  REQUIRE(fit.converged);
  CHECK(fit.params.kt == Approx(truth.kt).epsilon(1e-3));
  CHECK(fit.params.dt == Approx(truth.dt).epsilon(1e-3));
  CHECK(fit.params.kr == Approx(truth.kr).epsilon(1e-3));
  CHECK(fit.params.dr == Approx(truth.dr).epsilon(1e-3));
  CHECK(fit.rmsRelative < 1e-4);

  // noisy data: the reported optimum beats every +-1 % single-axis move
  auto noisy = meas;
  for (std::size_t i = 0; i < noisy.amplitude.size(); ++i) {
    noisy.amplitude[i] *= 1.0 + 0.02 * std::sin(7.3 * double(i));
  }
  const auto nf = fitBearing(g, noisy, opt);
  REQUIRE(nf.converged);
  const double at = fitResidual(g, noisy, nf.params, opt);
  CHECK(at == Approx(nf.residual).epsilon(1e-9));
  for (std::size_t c = 0; c < 4; ++c) {
    for (double s : {0.99, 1.01}) {
      auto a = nf.params.asArray();
      a[c] *= s;
      CHECK(fitResidual(g, noisy, BearingParams::fromArray(a), opt) >= at);
    }
  }
}

TEST_CASE("bearing fit error paths") {
  const BimorphGeometry g;
  auto few = simulateResponse(g, BearingParams{}, MaxwellLoad::none(), logGrid(20.0, 1000.0, 5), 20.0);
  CHECK(codeOf([&] { fitBearing(g, few); }) == Errc::InsufficientData);
  // peak on the upper edge: data stops below resonance
  auto low = simulateResponse(g, BearingParams{}, MaxwellLoad::none(), logGrid(1.0, 20.0, 20), 20.0);
  CHECK(codeOf([&] { fitBearing(g, low); }) == Errc::InsufficientData);
  auto mism = simulateResponse(g, BearingParams{}, MaxwellLoad::none(), logGrid(20.0, 1000.0, 20), 20.0);
  mism.amplitude.pop_back();
  CHECK(codeOf([&] { fitBearing(g, mism); }) == Errc::LengthMismatch);
}

TEST_CASE("componentwise median") {
  const std::vector<BearingParams> fits{{1, 10, 100, 1000}, {3, 30, 300, 3000}, {2, 20, 200, 2000}};
  CHECK(medianParams(fits) == BearingParams{2, 20, 200, 2000});
  const std::vector<BearingParams> even{{4, 1, 7, 2}, {1, 4, 2, 7}, {2, 3, 9, 1}, {3, 2, 1, 9}};
  CHECK(medianParams(even) == BearingParams{2, 2, 2, 2});
  auto perm = even;
  std::sort(perm.begin(), perm.end(), [](auto& a, auto& b) { return a.dr < b.dr; });
  do {
    CHECK(medianParams(perm) == medianParams(even));
  } while (std::next_permutation(perm.begin(), perm.end(),
                                 [](auto& a, auto& b) { return a.dr < b.dr; }));
  CHECK(codeOf([] { medianParams({}); }) == Errc::EmptyInput);
}

TEST_CASE("response CSV round trip and voltage rescaling") {
  FrequencyResponse r{{10.0, 20.0}, {1e-6, 2e-6}, 20.0};
  std::ostringstream out;
  writeResponseCsv(out, r);
  std::istringstream in(out.str());
  const auto back = readResponseCsv(in);
  CHECK(back.f == r.f);
  CHECK(back.amplitude[1] == Approx(2e-6));
  std::istringstream mixed("f_Hz,amplitude_um,voltage_V\n10,1,20\n20,4,40\n");
  const auto m = readResponseCsv(mixed);
  CHECK(m.voltage == 20.0);
  CHECK(m.amplitude[1] == Approx(2e-6));
  std::istringstream backwards("10,1,20\n5,1,20\n");
  CHECK(codeOf([&] { readResponseCsv(backwards); }) == Errc::ParseError);
  std::istringstream junk("f,a,v\n10,x,20\n");
  CHECK(codeOf([&] { readResponseCsv(junk); }) == Errc::ParseError);
}

TEST_CASE("shipped display configuration equals the defaults") {
  const auto cfg = loadDisplayConfig(std::string(TACTWIN_DATA_DIR) + "/display.json");
  CHECK(toJson(cfg) == toJson(defaultDisplayConfig()));
  const auto partial = displayConfigFromJson(nlohmann::json{{"bearing", {{"kt", 5000.0}}}});
  CHECK(partial.bearing.kt == 5000.0);
  CHECK(partial.bearing.kr == BearingParams{}.kr);
  CHECK(codeOf([] { loadDisplayConfig("/nonexistent/display.json"); }) == Errc::Io);
}
