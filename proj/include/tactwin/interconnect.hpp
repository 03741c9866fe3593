#pragma once

// Virtual backplane.
//
// A 7-bit address bus selects one unit (or all, with the broadcast line) for
// bulk writes on the fast unidirectional channel. A slower bidirectional
// config channel addresses units by the runtime address they receive during
// enumeration. Transfer time comes from a two-parameter latency model instead
// of bit-level simulation.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tactwin/siggen.hpp"
#include "tactwin/wiretab.hpp"

namespace tactwin::interconnect {

inline constexpr int kMaxUnits = 112;
inline constexpr int kMaxDip = 111;
inline constexpr double kDefaultConfigClock = 400e3;
inline constexpr double kDefaultBulkClock = 15.6e6;
inline constexpr double kPayloadBits = 8.0 * wiretab::kPackageSize;

enum class UnitKind { ASG, HVA };
std::string_view to_string(UnitKind kind) noexcept;

struct UnitSpec {
  int dip = 0;
  UnitKind kind = UnitKind::ASG;
  int channels = 4;
};

struct BusTopology {
  std::vector<UnitSpec> units;
  double bulkClock = kDefaultBulkClock;
  double configClock = kDefaultConfigClock;

  /// Line format:
  ///   # comment
  ///   bulk_clock 15.6M
  ///   config_clock 400k
  ///   unit <dip> <ASG|HVA> [channels]
  static BusTopology parse(std::string_view text);
  static BusTopology load(const std::string& path);
  std::string toText() const;

  /// n units with dips 0..n-1.
  static BusTopology uniform(int n, UnitKind kind = UnitKind::ASG);
};

struct LatencyModel {
  double effectiveBits = 1431.8;
  double fixedOverhead = 6.3e-6;  // s

  /// Duration of one 160-byte transfer at the given bulk clock.
  double transferTime(double clock) const;
  /// Duration of an arbitrary-length transfer, bits scaled by bytes/160.
  double transferTime(double clock, std::size_t bytes) const;
};

struct LatencySample {
  double clock = 0.0;     // Hz
  double measured = 0.0;  // s
};

/// Absolute minimizes sum (t - model)^2. Relative minimizes
/// sum ((t - model)/t)^2, which balances the slow and fast clocks.
enum class LatencyWeighting { Relative, Absolute };

LatencyModel calibrateLatency(std::span<const LatencySample> samples,
                              LatencyWeighting weighting = LatencyWeighting::Relative);

/// Published single-transfer times for the five reference clocks, and the
/// same clocks for 2 and 8 boards addressed one after another.
struct ReferenceRow {
  double clock;
  double boards1;
  double boards2;
  double boards8;
};
const std::array<ReferenceRow, 5>& referenceTransferTimes();
std::vector<LatencySample> referenceSingleBoard();

struct RegistryEntry {
  int dip = 0;
  int configAddr = 0;
  int channels = 4;
  UnitKind kind = UnitKind::ASG;

  friend bool operator==(const RegistryEntry&, const RegistryEntry&) = default;
};

struct TransferReport {
  double start = 0.0;     // simulated bus time, s
  double duration = 0.0;  // s
  std::size_t delivered = 0;
};

struct TraceEntry {
  double timestamp = 0.0;
  int address = -1;  // dip, -1 for broadcast, -2 for config traffic
  std::size_t bytes = 0;
  double duration = 0.0;
};

namespace config {
inline constexpr std::uint8_t kPing = 0x01;
inline constexpr std::uint8_t kAssignAddress = 0x02;
inline constexpr std::uint8_t kSetSamplingRate = 0x03;  // u32 LE, Hz
inline constexpr std::uint8_t kSetPwmDepth = 0x04;
inline constexpr std::uint8_t kStart = 0x05;
inline constexpr std::uint8_t kStop = 0x06;
inline constexpr std::uint8_t kReset = 0x07;
inline constexpr std::uint8_t kStatus = 0x08;
inline constexpr std::uint8_t kSetSmoothing = 0x09;  // u16 LE, alpha * 32768 (32768 stored as 0)
inline constexpr std::uint8_t kAck = 0x06;
inline constexpr std::uint8_t kNack = 0x15;

std::vector<std::uint8_t> setSamplingRate(double hz);
std::vector<std::uint8_t> setSmoothing(double alpha);
}  // namespace config

struct AttachedUnit {
  UnitSpec spec;
  siggen::GeneratorMachine machine;
  std::optional<int> configAddr;
};

/// All transfers take the bus mutex, so concurrent callers observe one total
/// order and one monotone simulated clock.
class Bus {
 public:
  explicit Bus(BusTopology topology, LatencyModel model = {});

  const BusTopology& topology() const noexcept { return topology_; }
  const LatencyModel& latencyModel() const noexcept { return model_; }
  void setBulkClock(double hz);

  /// Drives the address bus. Throws DuplicateDip when two units share the
  /// address. An address with no unit is accepted; writes to it are dropped
  /// and recorded in diagnostics.
  void select(int dip);
  void broadcast(bool on);
  void clearSelection();

  TransferReport bulkWrite(const wiretab::EncodedTable& package);
  /// Escape hatch for user-defined payloads.
  TransferReport bulkWriteBytes(std::span<const std::uint8_t> bytes);

  /// Throws Timeout when no unit owns the address and Nack when the unit
  /// refuses the command.
  std::vector<std::uint8_t> configCommand(int configAddr, std::span<const std::uint8_t> command);

  /// Scans dips 0..111 and assigns config addresses in scan order.
  std::vector<RegistryEntry> enumerate();
  const std::vector<RegistryEntry>& registry() const noexcept { return registry_; }

  std::size_t unitCount() const noexcept { return units_.size(); }
  /// Index into the topology order.
  const AttachedUnit& unit(std::size_t index) const { return *units_.at(index); }
  std::optional<std::size_t> indexOfDip(int dip) const;
  std::optional<std::size_t> indexOfConfigAddr(int configAddr) const;

  /// Advances one unit's signal loop.
  siggen::RenderedBlock render(std::size_t index, std::size_t samples);

  double now() const;
  std::vector<TraceEntry> trace() const;
  std::vector<std::string> diagnostics() const;
  void clearDiagnostics();
  void writeTraceCsv(std::ostream& out) const;

 private:
  std::vector<std::size_t> matches(int dip) const;
  void record(int address, std::size_t bytes, double duration);
  TransferReport deliver(std::size_t bytes, const wiretab::EncodedTable* package,
                         std::span<const std::uint8_t> raw);

  BusTopology topology_;
  LatencyModel model_;
  std::vector<std::unique_ptr<AttachedUnit>> units_;
  std::vector<RegistryEntry> registry_;
  std::optional<int> selected_;
  bool broadcast_ = false;
  double now_ = 0.0;
  std::vector<TraceEntry> trace_;
  std::vector<std::string> diagnostics_;
  mutable std::mutex mutex_;
};

}  // namespace tactwin::interconnect
