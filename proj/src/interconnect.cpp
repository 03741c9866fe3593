#include "tactwin/interconnect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "tactwin/error.hpp"
#include "tactwin/quantity.hpp"

namespace tactwin::interconnect {
namespace {

std::uint32_t readU32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

void requirePayload(std::span<const std::uint8_t> cmd, std::size_t n) {
  if (cmd.size() != n + 1) throw Error(Errc::LengthMismatch, "config payload length");
}

UnitKind parseKind(const std::string& word, int line) {
  if (word == "ASG" || word == "asg") return UnitKind::ASG;
  if (word == "HVA" || word == "hva") return UnitKind::HVA;
  throw Error(Errc::ParseError, "line " + std::to_string(line) + ": unknown unit kind '" + word + "'");
}

}  // namespace

std::string_view to_string(UnitKind kind) noexcept {
  return kind == UnitKind::ASG ? "ASG" : "HVA";
}

BusTopology BusTopology::parse(std::string_view text) {
  BusTopology topo;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineNo = 0;
  while (std::getline(in, raw)) {
    ++lineNo;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    std::istringstream line(raw);
    std::string key;
    if (!(line >> key)) continue;
    auto fail = [&](const std::string& what) {
      throw Error(Errc::ParseError, "line " + std::to_string(lineNo) + ": " + what);
    };
    if (key == "bulk_clock" || key == "config_clock") {
      std::string value;
      if (!(line >> value)) fail("missing value for " + key);
      const double hz = parseQuantity(value);
      if (!(hz > 0.0)) fail(key + " must be positive");
      (key == "bulk_clock" ? topo.bulkClock : topo.configClock) = hz;
    } else if (key == "unit") {
      UnitSpec spec;
      std::string kind;
      if (!(line >> spec.dip >> kind)) fail("expected: unit <dip> <ASG|HVA> [channels]");
      spec.kind = parseKind(kind, lineNo);
      if (int ch; line >> ch) spec.channels = ch;
      if (spec.dip < 0 || spec.dip > kMaxDip) fail("dip out of range 0..111");
      if (spec.channels < 1 || spec.channels > 4) fail("channels must be 1..4");
      topo.units.push_back(spec);
    } else {
      fail("unknown key '" + key + "'");
    }
    if (std::string extra; line >> extra) fail("trailing token '" + extra + "'");
  }
  return topo;
}

BusTopology BusTopology::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string BusTopology::toText() const {
  std::ostringstream out;
  out.precision(12);
  out << "bulk_clock " << bulkClock << "\nconfig_clock " << configClock << '\n';
  for (const UnitSpec& u : units) {
    out << "unit " << u.dip << ' ' << to_string(u.kind) << ' ' << u.channels << '\n';
  }
  return out.str();
}

BusTopology BusTopology::uniform(int n, UnitKind kind) {
  BusTopology topo;
  for (int i = 0; i < n; ++i) topo.units.push_back({i, kind, 4});
  return topo;
}

double LatencyModel::transferTime(double clock) const {
  return effectiveBits / clock + fixedOverhead;
}

double LatencyModel::transferTime(double clock, std::size_t bytes) const {
  return effectiveBits * (static_cast<double>(bytes) / wiretab::kPackageSize) / clock +
         fixedOverhead;
}

LatencyModel calibrateLatency(std::span<const LatencySample> samples, LatencyWeighting weighting) {
  if (samples.size() < 2) throw Error(Errc::DegenerateFit, "need at least two samples");
  // Normal equations for t = B*x + t0 with x = 1/clock and weights w.
  double sww = 0, swx = 0, swxx = 0, swt = 0, swxt = 0;
  for (const LatencySample& s : samples) {
    if (!(s.clock > 0.0) || !(s.measured > 0.0)) {
      throw Error(Errc::InvalidArgument, "clock and measured time must be positive");
    }
    const double x = 1.0 / s.clock;
    const double w = weighting == LatencyWeighting::Relative ? 1.0 / (s.measured * s.measured) : 1.0;
    sww += w;
    swx += w * x;
    swxx += w * x * x;
    swt += w * s.measured;
    swxt += w * x * s.measured;
  }
  const double det = swxx * sww - swx * swx;
  if (!(std::abs(det) > 1e-12 * swxx * sww)) {
    throw Error(Errc::DegenerateFit, "clocks are not distinct");
  }
  LatencyModel m;
  m.effectiveBits = (swxt * sww - swx * swt) / det;
  m.fixedOverhead = (swxx * swt - swx * swxt) / det;
  return m;
}

const std::array<ReferenceRow, 5>& referenceTransferTimes() {
  static const std::array<ReferenceRow, 5> rows{{
      {967e3, 1480e-6, 2960e-6, 11840e-6},
      {1.953e6, 742e-6, 1484e-6, 5931e-6},
      {3.9e6, 374e-6, 746e-6, 2980e-6},
      {7.8e6, 190e-6, 377e-6, 1503e-6},
      {15.6e6, 98e-6, 196e-6, 779e-6},
  }};
  return rows;
}

std::vector<LatencySample> referenceSingleBoard() {
  std::vector<LatencySample> out;
  for (const ReferenceRow& r : referenceTransferTimes()) out.push_back({r.clock, r.boards1});
  return out;
}

namespace config {

std::vector<std::uint8_t> setSamplingRate(double hz) {
  const auto v = static_cast<std::uint32_t>(std::lround(hz));
  return {kSetSamplingRate, static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
          static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 24)};
}

std::vector<std::uint8_t> setSmoothing(double alpha) {
  const auto q = static_cast<std::uint32_t>(std::lround(alpha * 32768.0)) & 0xFFFF;
  return {kSetSmoothing, static_cast<std::uint8_t>(q), static_cast<std::uint8_t>(q >> 8)};
}

}  // namespace config

Bus::Bus(BusTopology topology, LatencyModel model)
    : topology_(std::move(topology)), model_(model) {
  if (topology_.units.size() > static_cast<std::size_t>(kMaxUnits)) {
    throw Error(Errc::InvalidArgument, "at most 112 units per bus");
  }
  if (!(topology_.bulkClock > 0.0) || !(topology_.configClock > 0.0)) {
    throw Error(Errc::InvalidArgument, "bus clocks must be positive");
  }
  for (const UnitSpec& spec : topology_.units) {
    if (spec.dip < 0 || spec.dip > kMaxDip) throw Error(Errc::InvalidArgument, "dip 0..111");
    units_.push_back(std::make_unique<AttachedUnit>(AttachedUnit{spec, siggen::GeneratorMachine{}, {}}));
  }
}

void Bus::setBulkClock(double hz) {
  if (!(hz > 0.0)) throw Error(Errc::InvalidArgument, "bulk clock must be positive");
  std::lock_guard lock(mutex_);
  topology_.bulkClock = hz;
}

std::vector<std::size_t> Bus::matches(int dip) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < units_.size(); ++i) {
    if (units_[i]->spec.dip == dip) out.push_back(i);
  }
  return out;
}

void Bus::select(int dip) {
  if (dip < 0 || dip > kMaxDip) throw Error(Errc::InvalidArgument, "address out of range 0..111");
  std::lock_guard lock(mutex_);
  if (matches(dip).size() > 1) {
    throw Error(Errc::DuplicateDip, "address " + std::to_string(dip) + " claimed twice");
  }
  selected_ = dip;
}

void Bus::broadcast(bool on) {
  std::lock_guard lock(mutex_);
  broadcast_ = on;
}

void Bus::clearSelection() {
  std::lock_guard lock(mutex_);
  selected_.reset();
  broadcast_ = false;
}

void Bus::record(int address, std::size_t bytes, double duration) {
  trace_.push_back({now_, address, bytes, duration});
  now_ += duration;
}

TransferReport Bus::deliver(std::size_t bytes, const wiretab::EncodedTable* package,
                            std::span<const std::uint8_t> raw) {
  if (!broadcast_ && !selected_) throw Error(Errc::NoSelection, "no unit selected");
  TransferReport report;
  report.start = now_;
  report.duration = model_.transferTime(topology_.bulkClock, bytes);

  std::vector<std::size_t> targets;
  if (broadcast_) {
    for (std::size_t i = 0; i < units_.size(); ++i) targets.push_back(i);
  } else {
    targets = matches(*selected_);
    if (targets.empty()) {
      diagnostics_.push_back("NoSuchAddress: write to " + std::to_string(*selected_) + " dropped");
    }
  }
  for (std::size_t i : targets) {
    AttachedUnit& u = *units_[i];
    if (package == nullptr) {
      u.machine.receiveRaw(raw);
      ++report.delivered;
      continue;
    }
    try {
      u.machine.stageTable(*package);
      ++report.delivered;
    } catch (const Error& e) {
      diagnostics_.push_back("unit " + std::to_string(u.spec.dip) + " rejected table: " + e.what());
    }
  }
  record(broadcast_ ? -1 : *selected_, bytes, report.duration);
  return report;
}

TransferReport Bus::bulkWrite(const wiretab::EncodedTable& package) {
  std::lock_guard lock(mutex_);
  return deliver(wiretab::kPackageSize, &package, {});
}

TransferReport Bus::bulkWriteBytes(std::span<const std::uint8_t> bytes) {
  std::lock_guard lock(mutex_);
  return deliver(bytes.size(), nullptr, bytes);
}

std::vector<std::uint8_t> Bus::configCommand(int configAddr, std::span<const std::uint8_t> command) {
  std::lock_guard lock(mutex_);
  if (command.empty()) throw Error(Errc::InvalidArgument, "empty config command");
  AttachedUnit* unit = nullptr;
  for (auto& u : units_) {
    if (u->configAddr == configAddr) unit = u.get();
  }
  if (unit == nullptr) {
    // The master waits for an acknowledge that never comes.
    record(-2, command.size() + 1, (command.size() + 1) * 8.0 / topology_.configClock);
    throw Error(Errc::Timeout, "no unit at config address " + std::to_string(configAddr));
  }

  std::vector<std::uint8_t> reply{config::kAck};
  std::optional<std::string> refusal;
  auto& m = unit->machine;
  try {
    switch (command[0]) {
      case config::kPing:
        requirePayload(command, 0);
        reply.push_back(static_cast<std::uint8_t>(unit->spec.dip));
        break;
      case config::kAssignAddress:
        requirePayload(command, 1);
        m.applyCommand(siggen::cmd::AssignAddress{command[1]});
        break;
      case config::kSetSamplingRate:
        requirePayload(command, 4);
        m.applyCommand(siggen::cmd::SetSamplingRate{static_cast<double>(readU32(command, 1))});
        break;
      case config::kSetPwmDepth:
        requirePayload(command, 1);
        m.applyCommand(siggen::cmd::SetPwmDepth{command[1]});
        break;
      case config::kSetSmoothing: {
        requirePayload(command, 2);
        std::uint32_t q = command[1] | (command[2] << 8);
        if (q == 0) q = 32768;
        m.applyCommand(siggen::cmd::SetSmoothing{q / 32768.0});
        break;
      }
      case config::kStart:
        requirePayload(command, 0);
        m.applyCommand(siggen::cmd::Start{});
        reply.push_back(static_cast<std::uint8_t>(m.runLevel()));
        break;
      case config::kStop:
        requirePayload(command, 0);
        m.applyCommand(siggen::cmd::Stop{});
        break;
      case config::kReset:
        requirePayload(command, 0);
        m.applyCommand(siggen::cmd::Reset{});
        break;
      case config::kStatus:
        requirePayload(command, 0);
        reply.push_back(static_cast<std::uint8_t>(m.runLevel()));
        reply.push_back(static_cast<std::uint8_t>(m.errorReason()));
        break;
      default:
        refusal = "unknown opcode " + std::to_string(command[0]);
    }
  } catch (const Error& e) {
    refusal = e.what();
  }
  if (refusal) reply = {config::kNack};
  record(-2, command.size() + reply.size() + 1,
         (command.size() + reply.size() + 1) * 8.0 / topology_.configClock);
  if (refusal) {
    throw Error(Errc::Nack, "unit " + std::to_string(unit->spec.dip) + ": " + *refusal);
  }
  return reply;
}

std::vector<RegistryEntry> Bus::enumerate() {
  std::lock_guard lock(mutex_);
  registry_.clear();
  for (auto& u : units_) u->configAddr.reset();
  for (int dip = 0; dip <= kMaxDip; ++dip) {
    const auto found = matches(dip);
    if (found.size() > 1) {
      registry_.clear();
      throw Error(Errc::DuplicateDip, "address " + std::to_string(dip) + " claimed twice");
    }
    if (found.empty()) continue;
    AttachedUnit& u = *units_[found.front()];
    const int addr = static_cast<int>(registry_.size());
    // Enumeration starts every unit from a clean Boot state.
    u.machine.applyCommand(siggen::cmd::Reset{});
    u.machine.applyCommand(siggen::cmd::AssignAddress{static_cast<std::uint8_t>(addr)});
    u.configAddr = addr;
    record(-2, 4, 4 * 8.0 / topology_.configClock);
    registry_.push_back({dip, addr, u.spec.channels, u.spec.kind});
  }
  return registry_;
}

std::optional<std::size_t> Bus::indexOfDip(int dip) const {
  std::lock_guard lock(mutex_);
  const auto m = matches(dip);
  if (m.size() != 1) return std::nullopt;
  return m.front();
}

std::optional<std::size_t> Bus::indexOfConfigAddr(int configAddr) const {
  std::lock_guard lock(mutex_);
  for (std::size_t i = 0; i < units_.size(); ++i) {
    if (units_[i]->configAddr == configAddr) return i;
  }
  return std::nullopt;
}

siggen::RenderedBlock Bus::render(std::size_t index, std::size_t samples) {
  std::lock_guard lock(mutex_);
  return units_.at(index)->machine.renderSamples(samples);
}

double Bus::now() const {
  std::lock_guard lock(mutex_);
  return now_;
}

std::vector<TraceEntry> Bus::trace() const {
  std::lock_guard lock(mutex_);
  return trace_;
}

std::vector<std::string> Bus::diagnostics() const {
  std::lock_guard lock(mutex_);
  return diagnostics_;
}

void Bus::clearDiagnostics() {
  std::lock_guard lock(mutex_);
  diagnostics_.clear();
}

void Bus::writeTraceCsv(std::ostream& out) const {
  std::lock_guard lock(mutex_);
  out << "timestamp_s,address,bytes,duration_s\n";
  for (const TraceEntry& t : trace_) {
    out << t.timestamp << ',' << t.address << ',' << t.bytes << ',' << t.duration << '\n';
  }
}

}  // namespace tactwin::interconnect
