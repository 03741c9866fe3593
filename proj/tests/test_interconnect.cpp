#include <catch_amalgamated.hpp>

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "tactwin/error.hpp"
#include "tactwin/interconnect.hpp"

using namespace tactwin;
using namespace tactwin::interconnect;
using Catch::Approx;

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

BusTopology dips(std::initializer_list<int> list) {
  BusTopology t;
  for (int d : list) t.units.push_back({d, UnitKind::ASG, 4});
  return t;
}

wiretab::EncodedTable tone(double f) {
  wiretab::FrequencyTable t;
  t.at(0, 0) = {f, 0.5};
  return wiretab::encode(t, 25000.0);
}

void bringUp(Bus& bus) {
  for (const auto& e : bus.enumerate()) {
    bus.configCommand(e.configAddr, config::setSamplingRate(25000.0));
    bus.configCommand(e.configAddr, std::vector<std::uint8_t>{config::kStart});
  }
}

}  // namespace

TEST_CASE("selection routes a write to exactly one unit") {
  Bus bus(dips({3, 7}));
  bringUp(bus);
  bus.select(3);
  const auto r = bus.bulkWrite(tone(100.0));
  CHECK(r.delivered == 1);
  CHECK(bus.unit(*bus.indexOfDip(3)).machine.hasPendingTable());
  CHECK_FALSE(bus.unit(*bus.indexOfDip(7)).machine.hasPendingTable());
}

TEST_CASE("writes to an absent address are dropped with a diagnostic") {
  Bus bus(dips({3, 7}));
  bringUp(bus);
  bus.select(5);
  const auto r = bus.bulkWrite(tone(100.0));
  CHECK(r.delivered == 0);
  const auto diag = bus.diagnostics();
  REQUIRE(diag.size() == 1);
  CHECK(diag[0].find("NoSuchAddress") != std::string::npos);
}

TEST_CASE("duplicate dips are rejected on select and enumerate") {
  Bus bus(dips({4, 4}));
  CHECK(codeOf([&] { bus.select(4); }) == Errc::DuplicateDip);
  CHECK(codeOf([&] { bus.enumerate(); }) == Errc::DuplicateDip);
}

TEST_CASE("bulk write without a selection") {
  Bus bus(dips({1}));
  CHECK(codeOf([&] { bus.bulkWrite(tone(1.0)); }) == Errc::NoSelection);
  bus.select(1);
  bus.clearSelection();
  CHECK(codeOf([&] { bus.bulkWrite(tone(1.0)); }) == Errc::NoSelection);
}

TEST_CASE("broadcast delivers identical content and costs one transfer") {
  for (int n : {1, 2, 8, 40}) {
    Bus bus(BusTopology::uniform(n));
    bringUp(bus);
    bus.broadcast(true);
    const auto r = bus.bulkWrite(tone(321.0));
    CHECK(r.delivered == static_cast<std::size_t>(n));
    CHECK(r.duration == Approx(bus.latencyModel().transferTime(kDefaultBulkClock)).epsilon(1e-15));
    std::vector<std::vector<std::uint16_t>> outs;
    for (std::size_t i = 0; i < bus.unitCount(); ++i) outs.push_back(bus.render(i, 64).duty[0]);
    for (const auto& o : outs) REQUIRE(o == outs.front());
  }
}

TEST_CASE("transfer durations follow the latency model") {
  Bus bus(BusTopology::uniform(8));
  bringUp(bus);
  bus.setBulkClock(15.6e6);
  bus.select(0);
  const double one = bus.bulkWrite(tone(1.0)).duration;
  CHECK(one * 1e6 == Approx(98.0).margin(1.0));
  double eight = 0.0;
  for (int d = 0; d < 8; ++d) {
    bus.select(d);
    eight += bus.bulkWrite(tone(1.0)).duration;
  }
  CHECK(eight == Approx(8.0 * one).epsilon(1e-14));

  bus.setBulkClock(967e3);
  double slow = 0.0;
  for (int d = 0; d < 8; ++d) {
    bus.select(d);
    slow += bus.bulkWrite(tone(1.0)).duration;
  }
  CHECK(slow * 1e6 == Approx(11840.0).epsilon(0.01));
}

TEST_CASE("config channel replies, refusals and timing") {
  Bus bus(dips({9}));
  const auto reg = bus.enumerate();
  REQUIRE(reg.size() == 1);
  const int a = reg[0].configAddr;
  const auto ping = bus.configCommand(a, std::vector<std::uint8_t>{config::kPing});
  CHECK(ping == std::vector<std::uint8_t>{config::kAck, 9});

  const double before = bus.now();
  bus.configCommand(a, config::setSamplingRate(25000.0));
  const double d = bus.now() - before;
  CHECK(d >= 80e-6);
  CHECK(d == Approx((5 + 1 + 1) * 8.0 / 400e3));

  const auto start = bus.configCommand(a, std::vector<std::uint8_t>{config::kStart});
  CHECK(start[1] == static_cast<std::uint8_t>(siggen::RunLevel::Running));
  // Configuration is refused while Running.
  CHECK(codeOf([&] { bus.configCommand(a, config::setSamplingRate(20000.0)); }) == Errc::Nack);
  CHECK(codeOf([&] { bus.configCommand(a, std::vector<std::uint8_t>{0x7f}); }) == Errc::Nack);
  CHECK(codeOf([&] { bus.configCommand(a, std::vector<std::uint8_t>{config::kPing, 1}); }) == Errc::Nack);
  CHECK(codeOf([&] { bus.configCommand(a + 1, std::vector<std::uint8_t>{config::kPing}); }) == Errc::Timeout);
  const auto status = bus.configCommand(a, std::vector<std::uint8_t>{config::kStatus});
  CHECK(status.size() == 3);
  CHECK(status[1] == static_cast<std::uint8_t>(siggen::RunLevel::Running));
}

TEST_CASE("enumeration assigns distinct stable addresses") {
  CHECK(Bus(BusTopology{}).enumerate().empty());

  Bus three(dips({111, 0, 17}));
  const auto reg = three.enumerate();
  REQUIRE(reg.size() == 3);
  CHECK(reg[0].dip == 0);
  CHECK(reg[1].dip == 17);
  CHECK(reg[2].dip == 111);
  CHECK(three.enumerate() == reg);

  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> all(112);
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    const auto n = static_cast<std::size_t>(rng() % 113);
    BusTopology t;
    for (std::size_t i = 0; i < n; ++i) t.units.push_back({all[i], UnitKind::HVA, 1 + static_cast<int>(rng() % 4)});
    Bus bus(t);
    const auto r = bus.enumerate();
    REQUIRE(r.size() == n);
    std::set<int> addrs;
    for (const auto& e : r) addrs.insert(e.configAddr);
    REQUIRE(addrs.size() == n);
    for (const auto& e : r) {
      REQUIRE(bus.unit(*bus.indexOfDip(e.dip)).machine.runLevel() == siggen::RunLevel::Enumerated);
    }
  }
}

TEST_CASE("112 units expose 448 channels") {
  Bus bus(BusTopology::uniform(112));
  const auto reg = bus.enumerate();
  int channels = 0;
  for (const auto& e : reg) channels += e.channels;
  CHECK(reg.size() == 112);
  CHECK(channels == 448);
  CHECK_THROWS_AS(Bus(BusTopology::uniform(113)), Error);
}

TEST_CASE("latency calibration") {
  SECTION("two exact points are interpolated") {
    const double B = 1500.0, t0 = 4e-6;
    const std::vector<LatencySample> s{{1e6, B / 1e6 + t0}, {8e6, B / 8e6 + t0}};
    for (auto w : {LatencyWeighting::Absolute, LatencyWeighting::Relative}) {
      const auto m = calibrateLatency(s, w);
      CHECK(m.effectiveBits == Approx(B).epsilon(1e-10));
      CHECK(m.fixedOverhead == Approx(t0).epsilon(1e-8));
    }
  }
  SECTION("reference column") {
    const auto m = calibrateLatency(referenceSingleBoard());
    CHECK(m.effectiveBits >= 1280.0);
    CHECK(m.fixedOverhead >= 0.0);
    for (const auto& s : referenceSingleBoard()) {
      CHECK(std::abs(m.transferTime(s.clock) / s.measured - 1.0) < 0.02);
    }
    // Unweighted least squares lands near 1425 bits.
    const auto a = calibrateLatency(referenceSingleBoard(), LatencyWeighting::Absolute);
    CHECK(a.effectiveBits == Approx(1425.0).margin(1.0));
  }
  SECTION("degenerate inputs") {
    const std::vector<LatencySample> one{{1e6, 1e-3}};
    CHECK(codeOf([&] { calibrateLatency(one); }) == Errc::DegenerateFit);
    const std::vector<LatencySample> same{{1e6, 1e-3}, {1e6, 1.1e-3}};
    CHECK(codeOf([&] { calibrateLatency(same); }) == Errc::DegenerateFit);
  }
}

TEST_CASE("topology files") {
  const auto t = BusTopology::parse(
      "# demo\n"
      "bulk_clock 7.8M\n"
      "config_clock 100k   # slow\n"
      "unit 0 ASG\n"
      "unit 5 HVA 1\n");
  CHECK(t.bulkClock == 7.8e6);
  CHECK(t.configClock == 100e3);
  REQUIRE(t.units.size() == 2);
  CHECK(t.units[1].kind == UnitKind::HVA);
  CHECK(t.units[1].channels == 1);
  const auto again = BusTopology::parse(t.toText());
  CHECK(again.units.size() == 2);
  CHECK(again.bulkClock == t.bulkClock);

  CHECK(codeOf([] { BusTopology::parse("unit 0 XYZ\n"); }) == Errc::ParseError);
  CHECK(codeOf([] { BusTopology::parse("unit 112 ASG\n"); }) == Errc::ParseError);
  CHECK(codeOf([] { BusTopology::parse("speed 3\n"); }) == Errc::ParseError);
  try {
    BusTopology::parse("unit 1 ASG\n\nunit 2 ASG 9\n");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  const auto shipped = BusTopology::load(std::string(TACTWIN_DATA_DIR) + "/topology_demo.txt");
  CHECK(shipped.units.size() == 8);
}

TEST_CASE("concurrent writers observe one monotone clock") {
  Bus bus(BusTopology::uniform(4));
  bringUp(bus);
  bus.broadcast(true);
  std::vector<std::thread> threads;
  for (int i = 0; i < 4; ++i) {
    threads.emplace_back([&] {
      for (int k = 0; k < 100; ++k) bus.bulkWrite(tone(50.0));
    });
  }
  for (auto& t : threads) t.join();
  const auto trace = bus.trace();
  double last = -1.0;
  std::size_t bulk = 0;
  for (const auto& e : trace) {
    REQUIRE(e.timestamp >= last);
    last = e.timestamp;
    bulk += e.address == -1;
  }
  CHECK(bulk == 400);
  std::ostringstream csv;
  bus.writeTraceCsv(csv);
  CHECK(csv.str().rfind("timestamp_s,address,bytes,duration_s", 0) == 0);
}

TEST_CASE("raw byte escape hatch") {
  Bus bus(dips({2}));
  bus.enumerate();
  bus.select(2);
  const std::vector<std::uint8_t> payload{1, 2, 3, 4, 5};
  const auto r = bus.bulkWriteBytes(payload);
  CHECK(r.delivered == 1);
  CHECK(bus.unit(0).machine.userBuffer() == payload);
  CHECK(r.duration < bus.latencyModel().transferTime(kDefaultBulkClock));
}
