#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>

#include "tactwin/error.hpp"
#include "tactwin/interconnect.hpp"
#include "tactwin/metrology.hpp"
#include "tactwin/report.hpp"
#include "tactwin/runner.hpp"
#include "tactwin/scene.hpp"

using namespace tactwin;
using namespace tactwin::runner;
using scene::parseScene;
using Catch::Approx;
namespace fs = std::filesystem;

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

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("tactwin_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Straight line along +x at the given speed, m/s.
PoseSource line(double speed, double duration, const host::PoseCalibration& cal) {
  PoseSource s;
  const auto n = static_cast<std::size_t>(std::llround(duration * cal.frameRate));
  const double step = speed / cal.frameRate * cal.countsPerMeter1;
  for (std::size_t k = 0; k < n; ++k) {
    s.frames.push_back({static_cast<double>(k + 1) / cal.frameRate, {step, 0}, {step, 0}});
  }
  return s;
}

const char* kPatch = R"(
[scenario s]
bounds = 0 0 400 300
start = 150 150
[area patch]
model = velocity-scaled
rect = 100 100 200 100
params.gain = 25
)";

}  // namespace

TEST_CASE("scene file basics") {
  const auto sc = parseScene("format = 1\n# nothing here\n");
  CHECK(sc.scenarios.empty());
  CHECK(sc.warnings.empty());

  const auto demo = scene::loadScene(std::string(TACTWIN_DATA_DIR) + "/demo.scene");
  const auto& s = demo.scenario("demo");
  CHECK(s.seed == 42);
  REQUIRE(s.areas.size() == 3);
  CHECK(s.areas[1].neutral);
  CHECK(s.areas[2].randomized);
  CHECK(s.locate(100, 130) == &s.areas[0]);
  CHECK(s.locate(1, 1) == nullptr);
  CHECK(s.areas[0].param("gain", 0.0) == 25.0);
  CHECK(s.areas[0].param("missing", 3.0) == 3.0);
  CHECK(codeOf([&] { demo.scenario("nope"); }) == Errc::InvalidArgument);

  const auto defaults = parseScene("[scenario d]\n");
  CHECK(defaults.scenarios[0].startX == 200.0);
  CHECK(defaults.scenarios[0].startY == 150.0);
}

TEST_CASE("random placement is seeded, in bounds and disjoint") {
  auto text = [](int seed) {
    std::ostringstream s;
    s << "[scenario r]\nseed = " << seed << "\nbounds = 0 0 200 100\n";
    for (int i = 0; i < 6; ++i) s << "[area a" << i << "]\nrandom = 30 20\n";
    return s.str();
  };
  const auto a = parseScene(text(7)), b = parseScene(text(7)), c = parseScene(text(8));
  bool differs = false;
  const auto& areas = a.scenarios[0].areas;
  for (std::size_t i = 0; i < areas.size(); ++i) {
    CHECK(areas[i].rect == b.scenarios[0].areas[i].rect);
    differs |= !(areas[i].rect == c.scenarios[0].areas[i].rect);
    const auto& r = areas[i].rect;
    CHECK(r.x >= 0.0);
    CHECK(r.y >= 0.0);
    CHECK(r.x + r.w <= 200.0);
    CHECK(r.y + r.h <= 100.0);
    for (std::size_t j = 0; j < i; ++j) CHECK_FALSE(r.overlaps(areas[j].rect));
  }
  CHECK(differs);
  CHECK(scene::unitInterval(0) == 0.0);
  CHECK(scene::unitInterval(~0ull) < 1.0);
}

TEST_CASE("scene parse errors") {
  CHECK(codeOf([] { parseScene("[scenario a]\n[scenario a]\n"); }) == Errc::DuplicateId);
  CHECK(codeOf([] { parseScene("[scenario a]\n[area x]\nrect=0 0 1 1\n[scenario b]\n[area x]\nrect=0 0 1 1\n"); }) ==
        Errc::DuplicateId);
  CHECK(codeOf([] { parseScene("[scenario a]\n[area x]\nrect = 0 0 10 10\n[area y]\nrect = 5 5 10 10\n"); }) ==
        Errc::OverlapError);
  CHECK(codeOf([] { parseScene("[scenario a]\nbounds = 0 0 10 10\n[area x]\nrandom = 20 20\n"); }) ==
        Errc::OverlapError);
  CHECK(codeOf([] { parseScene("[scenario a]\nbounds = 0 0 20 20\n[area x]\nrect = 0 0 20 20\n[area y]\nrandom = 5 5\n"); }) ==
        Errc::OverlapError);
  CHECK(codeOf([] { parseScene("[area x]\n"); }) == Errc::ParseError);
  CHECK(codeOf([] { parseScene("[scenario a]\n[area x]\n"); }) == Errc::ParseError);
  CHECK(codeOf([] { parseScene("format = 2\n"); }) == Errc::ParseError);
  CHECK(codeOf([] { parseScene("[scenario a]\nseed = -1\n"); }) == Errc::ParseError);
  CHECK(codeOf([] { parseScene("[scenario a]\n[area x]\nrect = 1 2 3\n"); }) == Errc::ParseError);
  CHECK(codeOf([] { parseScene("[scenario a\n"); }) == Errc::ParseError);
  CHECK(codeOf([] { scene::loadScene("/nonexistent.scene"); }) == Errc::Io);
  try {
    parseScene("[scenario a]\n\n[area x]\nrect = 1 2 3\n");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(": line 4:") != std::string::npos);
  }
  const auto w = parseScene("colour = red\n[scenario a]\nfoo = 1\n[area x]\nrect = 0 0 1 1\nbar = 2\n");
  CHECK(w.warnings.size() == 3);
}

TEST_CASE("stationary pose gives frequency 0 and a constant duty") {
  const auto sc = parseScene(kPatch);
  interconnect::Bus bus(interconnect::BusTopology::uniform(1));
  host::SignalManager m(bus);
  m.initializeBoards();
  auto models = ModelRegistry::builtin();
  RunOptions opt;
  opt.duration = 0.5;
  const auto r = runScenario(sc.scenarios[0], models, m, PoseSource::stationary(0.5, opt.calibration), opt);
  CHECK(r.ticks == 500);
  CHECK(r.droppedFrames == 0);
  CHECK(bus.unit(0).machine.oscillator(0, 0).targetFreqCode == 0);
  REQUIRE(r.captures.size() == 4);
  const auto& d = r.captures[0].duty;
  REQUIRE(d.size() == 12500);
  for (std::size_t i = 10000; i < d.size(); ++i) REQUIRE(d[i] == d.back());
  CHECK(d.back() > 2048);
  REQUIRE(r.log.events.size() == 2);
  CHECK(r.log.events[0].kind == EventKind::EnterArea);
  CHECK(r.log.events[1].kind == EventKind::RunEnd);
  CHECK(r.log.events[1].meanVelocity == 0.0);
}

TEST_CASE("10 cm/s in a velocity-scaled area plays the 250 Hz grid tone") {
  const auto sc = parseScene(kPatch);
  interconnect::Bus bus(interconnect::BusTopology::uniform(1));
  host::SignalManager m(bus);
  m.initializeBoards();
  auto models = ModelRegistry::builtin();
  RunOptions opt;
  opt.duration = 1.0;
  const auto r = runScenario(sc.scenarios[0], models, m, line(0.10, 1.0, opt.calibration), opt);
  const double q = wiretab::quantizedFrequency(250.0, 25000.0);
  CHECK(q == Approx(249.48).margin(0.005));
  CHECK(bus.unit(0).machine.oscillator(0, 0).targetFreqCode == wiretab::frequencyCode(250.0, 25000.0));

  metrology::SampledSignal sig;
  sig.dt = 1.0 / 25000.0;
  const auto& d = r.captures[0].duty;
  for (std::size_t i = d.size() - 12500; i < d.size(); ++i) sig.samples.push_back(d[i] - 2048.0);
  const auto fit = metrology::fitSine(sig, 250.0);
  REQUIRE(fit.converged);
  CHECK(fit.f == Approx(q).margin(1e-3));
  CHECK(r.log.events.back().meanVelocity == Approx(10.0).epsilon(0.01));
}

TEST_CASE("enter and leave events nest") {
  const auto sc = scene::loadScene(std::string(TACTWIN_DATA_DIR) + "/demo.scene");
  interconnect::Bus bus(interconnect::BusTopology::uniform(2));
  host::SignalManager m(bus);
  m.initializeBoards();
  auto models = ModelRegistry::builtin();
  RunOptions opt;
  opt.duration = 4.0;
  opt.capture = false;
  opt.buttonPresses = {1.0, 2.5};
  const auto r = runScenario(sc.scenario("demo"), models, m,
                             PoseSource::circle(0.05, 1.0, 4.0, opt.calibration), opt);
  std::string inside;
  int enters = 0, presses = 0;
  for (const auto& e : r.log.events) {
    if (e.kind == EventKind::EnterArea) {
      CHECK(inside.empty());
      inside = e.areaId;
      ++enters;
    } else if (e.kind == EventKind::LeaveArea) {
      CHECK(e.areaId == inside);
      CHECK(e.meanVelocity > 0.0);
      inside.clear();
    } else if (e.kind == EventKind::ButtonPress) {
      ++presses;
    }
  }
  CHECK(enters >= 2);
  CHECK(presses == 2);
  CHECK(r.log.events.front().kind == EventKind::RandomChoice);
  CHECK(r.log.events.back().kind == EventKind::RunEnd);
  CHECK(r.captures.empty());
  CHECK(r.overBudgetTicks == 0);
}

TEST_CASE("invalid model output is dropped and the last table keeps playing") {
  class Ramp final : public TactileModel {
   public:
    wiretab::FrequencyTable operator()(const ModelInput& in) const override {
      wiretab::FrequencyTable t;
      t.at(0, 0) = {100.0 + in.x, in.x < 160.0 ? 0.5 : 2.0};
      return t;
    }
  };
  const auto sc = parseScene("[scenario s]\nstart = 150 150\n[area a]\nmodel = ramp\nrect = 100 100 200 100\n");
  interconnect::Bus bus(interconnect::BusTopology::uniform(1));
  host::SignalManager m(bus);
  m.initializeBoards();
  auto models = ModelRegistry::builtin();
  models.add("ramp", [] { return std::make_unique<Ramp>(); });
  RunOptions opt;
  opt.duration = 0.3;
  const auto r = runScenario(sc.scenarios[0], models, m, line(0.10, 0.3, opt.calibration), opt);
  CHECK(r.droppedFrames > 100);
  CHECK(r.droppedFrames < r.ticks);
  REQUIRE_FALSE(r.diagnostics.empty());
  CHECK(r.diagnostics.front().find("ModelOutputInvalid") != std::string::npos);
  const auto code = bus.unit(0).machine.oscillator(0, 0).targetFreqCode;
  CHECK(code >= wiretab::frequencyCode(255.0, 25000.0));
  CHECK(code <= wiretab::frequencyCode(260.0, 25000.0));
  const auto& d = r.captures[0].duty;
  CHECK(*std::min_element(d.end() - 500, d.end()) < *std::max_element(d.end() - 500, d.end()));

  auto unknown = parseScene("[scenario s]\n[area a]\nmodel = nope\nrect = 0 0 1 1\n");
  CHECK(codeOf([&] { runScenario(unknown.scenarios[0], models, m, PoseSource{}, opt); }) ==
        Errc::InvalidArgument);
}

TEST_CASE("repeated runs write identical bytes and the neutral marker") {
  const auto sc = scene::loadScene(std::string(TACTWIN_DATA_DIR) + "/demo.scene");
  auto once = [&](const fs::path& dir) {
    interconnect::Bus bus(interconnect::BusTopology::uniform(2));
    host::SignalManager m(bus);
    m.initializeBoards();
    auto models = ModelRegistry::builtin();
    RunOptions opt;
    opt.duration = 1.0;
    writeRun(runScenario(sc.scenario("demo"), models, m, PoseSource::circle(0.05, 0.25, 1.0, opt.calibration), opt),
             dir);
  };
  const auto a = scratch("det_a"), b = scratch("det_b");
  once(a);
  once(b);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    ++files;
    CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
  }
  CHECK(files == 2 + 8);
  const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
  CHECK(manifest["areas"][1]["image"] == std::string(scene::kNeutralImage));
  CHECK(manifest["areas"][0]["image"] == "surfaces/rough.png");
  CHECK(slurp(a / "study_log.csv").rfind("t_s,event,area,mean_velocity_cm_s\n", 0) == 0);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("report needs captures") {
  const auto empty = scratch("empty");
  CHECK(codeOf([&] { report::table1(empty); }) == Errc::MissingCaptures);
  CHECK(codeOf([&] { report::report(empty, empty / "out"); }) == Errc::MissingCaptures);
  fs::remove_all(empty);
}

TEST_CASE("tone run feeds the frequency table") {
  interconnect::Bus bus(interconnect::BusTopology::uniform(1));
  host::SignalManager m(bus);
  m.initializeBoards();
  const std::vector<double> targets{50.0, 250.0};
  pipeline::AsgChain chain;
  chain.record = 16384;
  const auto dir = scratch("tones");
  REQUIRE(report::writeToneRun(m, targets, 0.9, chain, dir));
  const auto rows = report::table1(dir, chain);
  REQUIRE(rows.size() == 2);
  const auto& ref = report::referenceTones();
  CHECK(rows[0].measured == Approx(ref[1].asgMeasured).margin(0.2));
  CHECK(rows[1].measured == Approx(ref[3].asgMeasured).margin(0.2));
  for (const auto& row : rows) {
    CHECK(row.converged);
    CHECK(row.measured == Approx(row.quantized).margin(1e-3));
    CHECK(row.thdn1k < 1.0);
  }
  fs::remove_all(dir);

  interconnect::Bus none(interconnect::BusTopology{});
  host::SignalManager idle(none);
  idle.initializeBoards();
  CHECK_FALSE(report::writeToneRun(idle, targets, 0.9, chain, scratch("idle")));
}
