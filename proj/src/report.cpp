#include "tactwin/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "tactwin/error.hpp"
#include "tactwin/wiretab.hpp"

namespace tactwin::report {

namespace fs = std::filesystem;

namespace {

nlohmann::json readManifest(const fs::path& runDir) {
  const fs::path path = runDir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw Error(Errc::MissingCaptures, "no manifest in " + runDir.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
}

std::ofstream openOut(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  return out;
}

}  // namespace

const std::array<ReferenceTone, 7>& referenceTones() {
  static const std::array<ReferenceTone, 7> rows{{
      {10.0, 9.92, 10.68},
      {50.0, 49.59, 50.35},
      {125.0, 124.36, 125.88},
      {250.0, 249.47, 249.47},
      {500.0, 499.70, 499.68},
      {750.0, 749.90, 749.89},
      {1000.0, 999.34, 998.86},
  }};
  return rows;
}

bool writeToneRun(host::SignalManager& manager, std::span<const double> targets, double amplitude,
                  const pipeline::AsgChain& chain, const fs::path& dir) {
  std::optional<std::size_t> unit;
  for (std::size_t i = 0; i < manager.unitCount() && !unit; ++i) {
    if (manager.mirroredLevel(i) == siggen::RunLevel::Running) unit = i;
  }
  if (!unit) return false;
  interconnect::Bus& bus = manager.bus();
  const auto busIndex = *bus.indexOfDip(manager.entry(*unit).dip);
  const double rate = manager.samplingRate(*unit);
  const auto periods = static_cast<std::size_t>(
      static_cast<double>(chain.record * static_cast<std::size_t>(chain.decimation)) / chain.oversample + 0.5);

  fs::create_directories(dir);
  nlohmann::json m;
  m["format"] = 1;
  m["kind"] = "tones";
  m["dip"] = manager.entry(*unit).dip;
  m["amplitude"] = amplitude;
  m["warmup_samples"] = chain.warmup;
  m["latency_model"] = {{"effective_bits", bus.latencyModel().effectiveBits},
                        {"fixed_overhead_s", bus.latencyModel().fixedOverhead}};
  m["captures"] = nlohmann::json::array();
  for (std::size_t k = 0; k < targets.size(); ++k) {
    wiretab::FrequencyTable table;
    table.at(0, 0) = {targets[k], amplitude};
    manager.sendTo(*unit, table);
    const auto block = bus.render(busIndex, chain.warmup + periods);
    const std::string file = "tone_" + std::to_string(k) + ".u16";
    std::ofstream out(dir / file, std::ios::binary);
    if (!out) throw Error(Errc::Io, "cannot write " + (dir / file).string());
    siggen::writeRawSamples(out, block.duty[0]);
    m["captures"].push_back({{"file", file},
                             {"dip", manager.entry(*unit).dip},
                             {"channel", 0},
                             {"sampling_rate_hz", rate},
                             {"target_hz", targets[k]},
                             {"samples", block.duty[0].size()}});
  }
  openOut(dir / "manifest.json") << m.dump(2) << '\n';
  return true;
}

std::vector<Table1Row> table1(const fs::path& runDir, const pipeline::AsgChain& chainIn) {
  const auto m = readManifest(runDir);
  if (!m.contains("captures") || m["captures"].empty()) {
    throw Error(Errc::MissingCaptures, "run has no captures");
  }
  const std::size_t warmup = m.value("warmup_samples", chainIn.warmup);
  std::vector<Table1Row> rows;
  for (const auto& c : m["captures"]) {
    const fs::path file = runDir / c.at("file").get<std::string>();
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(Errc::MissingCaptures, "missing capture " + file.string());
    if (!c.contains("target_hz")) continue;
    pipeline::AsgChain chain = chainIn;
    chain.samplingRate = c.at("sampling_rate_hz").get<double>();
    const auto duties = siggen::readRawSamples(in);
    const auto sig = pipeline::asgOutput(duties, chain, warmup);
    Table1Row r;
    r.target = c["target_hz"].get<double>();
    r.quantized = wiretab::quantizedFrequency(r.target, chain.samplingRate);
    const auto rep = metrology::analyze(sig, r.quantized > 0.0 ? r.quantized : r.target);
    r.measured = rep.measuredFreq;
    r.thdn1k = rep.thdn1k;
    r.thdn20k = rep.thdn20k;
    r.thdnFull = rep.thdnFull;
    r.converged = rep.fit.converged;
    rows.push_back(r);
  }
  return rows;
}

void writeTable1Csv(std::ostream& out, std::span<const Table1Row> rows) {
  out << "target_hz,quantized_hz,measured_hz,thdn_1k_pct,thdn_20k_pct,thdn_full_pct,converged\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%g,%.4f,%.4f,%.4f,%.4f,%.4f,%d\n", r.target, r.quantized, r.measured,
                  r.thdn1k, r.thdn20k, r.thdnFull, r.converged ? 1 : 0);
    out << buf;
  }
}

std::vector<Table3Cell> table3(const interconnect::LatencyModel& model) {
  std::vector<Table3Cell> cells;
  for (const auto& row : interconnect::referenceTransferTimes()) {
    const std::array<std::pair<int, double>, 3> cols{{{1, row.boards1}, {2, row.boards2}, {8, row.boards8}}};
    for (const auto& [boards, ref] : cols) {
      Table3Cell c;
      c.clock = row.clock;
      c.boards = boards;
      c.model = boards * model.transferTime(row.clock);
      c.reference = ref;
      c.relativeError = (c.model - ref) / ref;
      cells.push_back(c);
    }
  }
  return cells;
}

void writeTable3Csv(std::ostream& out, std::span<const Table3Cell> cells) {
  out << "clock_hz,boards,model_us,reference_us,relative_error\n";
  char buf[160];
  for (const auto& c : cells) {
    std::snprintf(buf, sizeof buf, "%.0f,%d,%.1f,%.0f,%.5f\n", c.clock, c.boards, c.model * 1e6,
                  c.reference * 1e6, c.relativeError);
    out << buf;
  }
}

std::vector<actuator::AmplitudeRow> table4(const actuator::DisplayConfig& config,
                                           std::span<const double> voltages) {
  const std::array loads{actuator::MaxwellLoad::none(), config.lowerImpedance};
  return actuator::amplitudeTable(config.geometry, config.bearing, loads, voltages);
}

ReportFiles report(const fs::path& runDir, const fs::path& outDir, const actuator::DisplayConfig& config) {
  const auto m = readManifest(runDir);
  if (!m.contains("captures") || m["captures"].empty()) {
    throw Error(Errc::MissingCaptures, "run has no captures");
  }
  interconnect::LatencyModel model;
  if (m.contains("latency_model")) {
    model.effectiveBits = m["latency_model"].value("effective_bits", model.effectiveBits);
    model.fixedOverhead = m["latency_model"].value("fixed_overhead_s", model.fixedOverhead);
  }
  fs::create_directories(outDir);
  ReportFiles files{outDir / "table1.csv", outDir / "table3.csv", outDir / "table4.csv"};
  const auto rows1 = table1(runDir);
  {
    auto out = openOut(files.table1);
    writeTable1Csv(out, rows1);
  }
  const auto cells = table3(model);
  {
    auto out = openOut(files.table3);
    writeTable3Csv(out, cells);
  }
  const auto rows4 = table4(config);
  auto out = openOut(files.table4);
  actuator::writeAmplitudeCsv(out, rows4);
  return files;
}

}  // namespace tactwin::report
