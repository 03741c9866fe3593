#pragma once

// Run directories and the tables derived from them.
//
// A run directory holds manifest.json plus raw u16 duty captures. Captures
// that carry "target_hz" are tone measurements and feed the THD+N table.

#include <array>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "tactwin/actuator.hpp"
#include "tactwin/host.hpp"
#include "tactwin/interconnect.hpp"
#include "tactwin/pipeline.hpp"

namespace tactwin::report {

struct ReferenceTone {
  double target;
  double asgMeasured;
  double hvaMeasured;
};
/// Measured frequencies of the reference ASG and HVA boards.
const std::array<ReferenceTone, 7>& referenceTones();

/// Plays each target on the first running unit and captures channel 0.
/// Returns false when no unit is running (nothing captured).
bool writeToneRun(host::SignalManager& manager, std::span<const double> targets, double amplitude,
                  const pipeline::AsgChain& chain, const std::filesystem::path& dir);

struct Table1Row {
  double target = 0.0;
  double quantized = 0.0;
  double measured = 0.0;
  double thdn1k = 0.0;
  double thdn20k = 0.0;
  double thdnFull = 0.0;
  bool converged = false;
};

/// Throws MissingCaptures when the directory has no manifest or captures.
std::vector<Table1Row> table1(const std::filesystem::path& runDir, const pipeline::AsgChain& chain = {});
void writeTable1Csv(std::ostream& out, std::span<const Table1Row> rows);

struct Table3Cell {
  double clock = 0.0;
  int boards = 0;
  double model = 0.0;      // s
  double reference = 0.0;  // s
  double relativeError = 0.0;
};
std::vector<Table3Cell> table3(const interconnect::LatencyModel& model);
void writeTable3Csv(std::ostream& out, std::span<const Table3Cell> cells);

std::vector<actuator::AmplitudeRow> table4(const actuator::DisplayConfig& config,
                                           std::span<const double> voltages = std::array{60.0, 200.0});

struct ReportFiles {
  std::filesystem::path table1;
  std::filesystem::path table3;
  std::filesystem::path table4;
};

/// Writes table1.csv, table3.csv and table4.csv into outDir. table3.csv uses the
/// latency model recorded in the manifest.
ReportFiles report(const std::filesystem::path& runDir, const std::filesystem::path& outDir,
                   const actuator::DisplayConfig& config = actuator::defaultDisplayConfig());

}  // namespace tactwin::report
