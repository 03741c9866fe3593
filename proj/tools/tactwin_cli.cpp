// tactwin: command-line front end for the tactile display twin.
//
// Exit status: 0 on success, 1 when a generator unit ended in Error,
// 2 on any other failure.

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tactwin/actuator.hpp"
#include "tactwin/analog.hpp"
#include "tactwin/error.hpp"
#include "tactwin/host.hpp"
#include "tactwin/interconnect.hpp"
#include "tactwin/metrology.hpp"
#include "tactwin/pipeline.hpp"
#include "tactwin/quantity.hpp"
#include "tactwin/report.hpp"
#include "tactwin/runner.hpp"
#include "tactwin/scene.hpp"

using namespace tactwin;
using nlohmann::json;

namespace {

std::vector<double> parseList(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!trim(item).empty()) out.push_back(parseQuantity(item));
  }
  return out;
}

actuator::DisplayConfig displayConfig(const std::string& path) {
  return path.empty() ? actuator::defaultDisplayConfig() : actuator::loadDisplayConfig(path);
}

interconnect::BusTopology topology(const std::string& path, int units) {
  if (!path.empty()) return interconnect::BusTopology::load(path);
  return interconnect::BusTopology::uniform(units);
}

std::map<int, host::UnitOverrides> overridesFor(const interconnect::BusTopology& topo,
                                                 const std::string& rate, int depth) {
  std::map<int, host::UnitOverrides> out;
  for (const auto& u : topo.units) {
    host::UnitOverrides o;
    if (!rate.empty()) o.samplingRate = parseQuantity(rate);
    if (depth > 0) o.pwmDepth = depth;
    out[u.dip] = o;
  }
  return out;
}

json unitsJson(const host::SignalManager& m) {
  json units = json::array();
  for (const auto& u : m.status()) {
    units.push_back({{"dip", u.entry.dip},
                     {"config_addr", u.entry.configAddr},
                     {"level", std::string(siggen::to_string(u.level))},
                     {"sampling_rate_hz", u.samplingRate},
                     {"diagnostic", u.diagnostic}});
  }
  return units;
}

void writeOrPrint(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Software twin of a tactile display control stack"};
  app.require_subcommand(1);
  int status = 0;

  // design-filter
  analog::DesignFilterInputs filt;
  std::string bodePath;
  auto* design = app.add_subcommand("design-filter", "Sallen-Key and H-bridge output filter design");
  design->add_option("--sk-cutoff", filt.sallenKeyCutoff, "Sallen-Key cutoff, Hz");
  design->add_option("--c1", filt.C1, "Sallen-Key C1, F");
  design->add_option("--c2", filt.C2, "Sallen-Key C2, F");
  design->add_option("--hb-cutoff", filt.hbridgeCutoff, "H-bridge cutoff, Hz");
  design->add_option("--cp", filt.C_p, "piezo capacitance, F");
  design->add_option("--q", filt.Q, "H-bridge target Q");
  design->add_option("--rl", filt.R_L, "inductor series resistance, ohm");
  design->add_option("--inductor", filt.inductorUsed, "inductor fitted, H");
  design->add_option("--bode", bodePath, "write the Sallen-Key Bode CSV here");
  design->callback([&] {
    std::cout << analog::designFilter(filt).dump(2) << '\n';
    if (!bodePath.empty()) {
      std::ofstream out(bodePath);
      if (!out) throw Error(Errc::Io, "cannot write " + bodePath);
      const auto spec = analog::sallenKeyDesign(filt.sallenKeyCutoff, filt.C1, filt.C2);
      analog::writeBodeCsv(out, analog::sallenKeyTf(spec), 1.0, 1e6, 400);
    }
  });

  // emulate
  std::string emuTopo, emuRate, emuOut, emuFreqs = "10,50,125,250,500,750,1000";
  int emuUnits = 1, emuDepth = 0;
  double emuAmp = 0.9;
  auto* emulate = app.add_subcommand("emulate", "Play target tones through the emulated generators");
  emulate->add_option("--topology", emuTopo, "bus topology file");
  emulate->add_option("--units", emuUnits, "uniform ASG bus size when no topology is given");
  emulate->add_option("--rate", emuRate, "sampling rate for every unit, e.g. 25k");
  emulate->add_option("--depth", emuDepth, "PWM bit depth for every unit");
  emulate->add_option("--freqs", emuFreqs, "comma-separated target frequencies");
  emulate->add_option("--amplitude", emuAmp, "tone amplitude, 0..1");
  emulate->add_option("--out", emuOut, "run directory")->required();
  emulate->callback([&] {
    const auto topo = topology(emuTopo, emuUnits);
    interconnect::Bus bus(topo);
    host::SignalManager manager(bus);
    manager.initializeBoards(overridesFor(topo, emuRate, emuDepth));
    const auto targets = parseList(emuFreqs);
    pipeline::AsgChain chain;
    if (emuDepth > 0) chain.pwmDepth = emuDepth;
    const bool played = report::writeToneRun(manager, targets, emuAmp, chain, emuOut);
    json out{{"units", unitsJson(manager)}, {"captured", played}, {"warnings", manager.warnings()}};
    json tones = json::array();
    for (std::size_t i = 0; i < manager.unitCount() && played; ++i) {
      if (manager.mirroredLevel(i) != siggen::RunLevel::Running) continue;
      for (double f : targets) {
        tones.push_back({{"target_hz", f}, {"realized_hz", wiretab::quantizedFrequency(f, manager.samplingRate(i))}});
      }
      break;
    }
    out["tones"] = tones;
    std::cout << out.dump(2) << '\n';
    if (manager.anyError()) status = 1;
  });

  // thdn
  std::string thdnDuty, thdnSamples, thdnBandsArg = "1k,20k,1M", thdnRate = "25k", thdnNorm = "amplitude";
  double thdnTarget = 0.0, thdnDt = metrology::kDefaultDt, thdnSynth = 0.0, thdnHarm = 0.005, thdnNoise = 0.0;
  std::size_t thdnWarmup = pipeline::AsgChain{}.warmup;
  unsigned thdnSeed = 1;
  auto* thdn = app.add_subcommand("thdn", "THD+N of a capture, a sample file or a synthetic sine");
  auto* dutyOpt = thdn->add_option("--duty", thdnDuty, "raw u16 duty capture, played through the ASG chain");
  auto* samplesOpt = thdn->add_option("--samples", thdnSamples, "one value per line");
  auto* synthOpt = thdn->add_option("--synthetic", thdnSynth, "synthetic sine frequency, Hz");
  dutyOpt->excludes(samplesOpt)->excludes(synthOpt);
  samplesOpt->excludes(synthOpt);
  thdn->add_option("--rate", thdnRate, "generator sampling rate for --duty");
  thdn->add_option("--warmup", thdnWarmup, "duty samples to skip for --duty");
  thdn->add_option("--dt", thdnDt, "sample spacing for --samples and --synthetic, s");
  thdn->add_option("--target", thdnTarget, "expected fundamental, Hz (0: spectral peak)");
  thdn->add_option("--harmonic", thdnHarm, "relative 2nd-harmonic amplitude for --synthetic");
  thdn->add_option("--noise", thdnNoise, "white noise rms for --synthetic");
  thdn->add_option("--seed", thdnSeed, "noise seed for --synthetic");
  thdn->add_option("--bands", thdnBandsArg, "comma-separated band edges; 'full' or >= Nyquist is full band");
  thdn->add_option("--norm", thdnNorm, "amplitude or rms")->check(CLI::IsMember({"amplitude", "rms"}));
  thdn->callback([&] {
    metrology::SampledSignal sig;
    if (!thdnDuty.empty()) {
      std::ifstream in(thdnDuty, std::ios::binary);
      if (!in) throw Error(Errc::Io, "cannot open " + thdnDuty);
      pipeline::AsgChain chain;
      chain.samplingRate = parseQuantity(thdnRate);
      sig = pipeline::asgOutput(siggen::readRawSamples(in), chain, thdnWarmup);
    } else if (!thdnSamples.empty()) {
      std::ifstream in(thdnSamples);
      if (!in) throw Error(Errc::Io, "cannot open " + thdnSamples);
      sig.dt = thdnDt;
      for (double v; in >> v;) sig.samples.push_back(v);
    } else if (thdnSynth > 0.0) {
      sig.dt = thdnDt;
      std::mt19937_64 rng(thdnSeed);
      std::normal_distribution<double> noise(0.0, thdnNoise);
      for (std::size_t i = 0; i < 32768; ++i) {
        const double t = static_cast<double>(i) * thdnDt;
        const double w = 2.0 * std::acos(-1.0) * thdnSynth;
        sig.samples.push_back(std::sin(w * t) + thdnHarm * std::sin(2.0 * w * t) +
                              (thdnNoise > 0.0 ? noise(rng) : 0.0));
      }
      if (thdnTarget <= 0.0) thdnTarget = thdnSynth;
    } else {
      throw Error(Errc::InvalidArgument, "give --duty, --samples or --synthetic");
    }
    const auto norm = thdnNorm == "rms" ? metrology::Normalization::Rms : metrology::Normalization::Amplitude;
    const auto fit = thdnTarget > 0.0 ? metrology::fitSine(sig, thdnTarget) : metrology::fitSine(sig);
    if (!fit.converged) throw Error(Errc::NoConvergence, "sine fit did not converge");
    const auto bands = metrology::parseBands(thdnBandsArg, sig.nyquist());
    std::vector<std::optional<double>> edges;
    for (const auto& b : bands) edges.push_back(b.edgeHz);
    const auto values = metrology::thdnBands(sig, fit, edges, norm);
    json out{{"fit", {{"A", fit.A}, {"f", fit.f}, {"phi", fit.phi}, {"iterations", fit.iterations}}},
             {"thdn_percent", metrology::thdnPercent(sig, fit, norm)}};
    json rows = json::array();
    for (std::size_t i = 0; i < bands.size(); ++i) {
      rows.push_back({{"band", bands[i].label}, {"mapped_to_full", bands[i].mappedToFull}, {"thdn_percent", values[i]}});
    }
    out["bands"] = rows;
    std::cout << out.dump(2) << '\n';
  });

  // latency
  std::string latCal, latWeight = "relative", latClock = "15.6M", latBudget = "1m";
  int latBoards = 8;
  std::size_t latMeasure = 0;
  auto* latency = app.add_subcommand("latency", "Calibrate the transfer-latency model and check a frame budget");
  latency->add_option("--calibrate", latCal, "CSV clock_hz,measured_us (default: reference single-board times)");
  latency->add_option("--weighting", latWeight, "relative or absolute")->check(CLI::IsMember({"relative", "absolute"}));
  latency->add_option("--boards", latBoards, "boards for the budget check");
  latency->add_option("--clock", latClock, "bulk clock for the budget check");
  latency->add_option("--budget", latBudget, "frame budget, s");
  latency->add_option("--measure", latMeasure, "also run the transfer loop this many times on the emulated bus");
  latency->callback([&] {
    std::vector<interconnect::LatencySample> samples;
    if (latCal.empty()) {
      samples = interconnect::referenceSingleBoard();
    } else {
      std::ifstream in(latCal);
      if (!in) throw Error(Errc::Io, "cannot open " + latCal);
      std::string line;
      while (std::getline(in, line)) {
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        double clock = 0.0, us = 0.0;
        if (row >> clock >> us) samples.push_back({clock, us * 1e-6});
      }
    }
    const auto model = interconnect::calibrateLatency(
        samples, latWeight == "absolute" ? interconnect::LatencyWeighting::Absolute
                                         : interconnect::LatencyWeighting::Relative);
    const double clock = parseQuantity(latClock);
    const double budget = parseQuantity(latBudget);
    const double frame = latBoards * model.transferTime(clock);
    json out{{"model", {{"effective_bits", model.effectiveBits}, {"fixed_overhead_us", model.fixedOverhead * 1e6}}},
             {"budget",
              {{"boards", latBoards},
               {"clock_hz", clock},
               {"frame_us", frame * 1e6},
               {"budget_us", budget * 1e6},
               {"slack_us", (budget - frame) * 1e6},
               {"within_budget", frame <= budget}}}};
    json table = json::array();
    for (const auto& c : report::table3(model)) {
      table.push_back({{"clock_hz", c.clock},
                       {"boards", c.boards},
                       {"model_us", c.model * 1e6},
                       {"reference_us", c.reference * 1e6},
                       {"relative_error", c.relativeError}});
    }
    out["table"] = table;
    if (latMeasure > 0) {
      interconnect::Bus bus(interconnect::BusTopology::uniform(latBoards), model);
      bus.enumerate();
      wiretab::FrequencyTable t;
      t.at(0, 0) = {250.0, 0.9};
      const std::array pkg{wiretab::encode(t, wiretab::kDefaultSamplingRate)};
      json loops = json::object();
      for (auto mode : {metrology::SendMode::Sequential, metrology::SendMode::Broadcast}) {
        const auto s = metrology::measureTransferLoop(bus, pkg, clock, latMeasure, mode);
        loops[mode == metrology::SendMode::Broadcast ? "broadcast" : "sequential"] = {
            {"mean_us", s.mean * 1e6}, {"min_us", s.min * 1e6}, {"max_us", s.max * 1e6}, {"iterations", s.iterations}};
      }
      out["measured"] = loops;
    }
    std::cout << out.dump(2) << '\n';
  });

  // fit-bearing
  std::string fitIn, fitConfig, fitWeight = "absolute", fitLoad = "none";
  actuator::FitOptions fitOpts;
  auto* fitb = app.add_subcommand("fit-bearing", "Fit Kelvin-Voigt bearing parameters to a frequency response");
  fitb->add_option("--input", fitIn, "CSV f_Hz,amplitude_um,voltage_V")->required();
  fitb->add_option("--config", fitConfig, "display config JSON");
  fitb->add_option("--starts", fitOpts.starts, "multi-start count");
  fitb->add_option("--spread", fitOpts.spread, "start spread factor");
  fitb->add_option("--weighting", fitWeight, "absolute or relative")->check(CLI::IsMember({"absolute", "relative"}));
  fitb->add_option("--load", fitLoad, "none, lower or upper")->check(CLI::IsMember({"none", "lower", "upper"}));
  fitb->callback([&] {
    const auto cfg = displayConfig(fitConfig);
    std::ifstream in(fitIn);
    if (!in) throw Error(Errc::Io, "cannot open " + fitIn);
    const auto measured = actuator::readResponseCsv(in);
    fitOpts.center = cfg.bearing;
    fitOpts.weighting = fitWeight == "relative" ? actuator::FitWeighting::Relative : actuator::FitWeighting::Absolute;
    fitOpts.load = fitLoad == "lower" ? cfg.lowerImpedance
                   : fitLoad == "upper" ? cfg.upperImpedance
                                        : actuator::MaxwellLoad::none();
    std::cout << actuator::toJson(actuator::fitBearing(cfg.geometry, measured, fitOpts)).dump(2) << '\n';
  });

  // amp-table
  std::string ampConfig, ampVolts = "60,200", ampOut;
  auto* amp = app.add_subcommand("amp-table", "Band-maximum tip amplitudes, unloaded and finger-loaded");
  amp->add_option("--config", ampConfig, "display config JSON");
  amp->add_option("--voltages", ampVolts, "comma-separated drive voltages");
  amp->add_option("--out", ampOut, "CSV path (default stdout)");
  amp->callback([&] {
    const auto rows = report::table4(displayConfig(ampConfig), parseList(ampVolts));
    std::ostringstream csv;
    actuator::writeAmplitudeCsv(csv, rows);
    writeOrPrint(ampOut, csv.str());
  });

  // run-scene
  std::string rsScene, rsScenario, rsTopo, rsPose, rsOut, rsRate, rsPresses;
  int rsUnits = 1;
  double rsCircle = 0.0, rsRevs = 1.0, rsDuration = 1.0;
  long long rsSeed = -1;
  bool rsNoCapture = false;
  auto* rs = app.add_subcommand("run-scene", "Run a scenario headless and log the study");
  rs->add_option("--scene", rsScene, "scene description file")->required();
  rs->add_option("--scenario", rsScenario, "scenario name (default: first)");
  rs->add_option("--topology", rsTopo, "bus topology file");
  rs->add_option("--units", rsUnits, "uniform ASG bus size when no topology is given");
  rs->add_option("--rate", rsRate, "sampling rate for every unit");
  auto* poseOpt = rs->add_option("--pose", rsPose, "sensor frame CSV to replay");
  rs->add_option("--circle", rsCircle, "synthetic circle radius, mm")->excludes(poseOpt);
  rs->add_option("--revolutions", rsRevs, "revolutions of the synthetic circle");
  rs->add_option("--duration", rsDuration, "run length, s");
  rs->add_option("--seed", rsSeed, "override the scenario seed");
  rs->add_option("--press", rsPresses, "comma-separated button press times, s");
  rs->add_flag("--no-capture", rsNoCapture, "skip signal captures");
  rs->add_option("--out", rsOut, "run directory")->required();
  rs->callback([&] {
    auto text = [&] {
      std::ifstream in(rsScene);
      if (!in) throw Error(Errc::Io, "cannot open " + rsScene);
      std::ostringstream buf;
      buf << in.rdbuf();
      return buf.str();
    }();
    if (rsSeed >= 0) {
      // Re-resolve random placements with the requested seed.
      std::string patched;
      std::istringstream lines(text);
      for (std::string l; std::getline(lines, l);) {
        if (trim(l).rfind("seed", 0) == 0) l = "seed = " + std::to_string(rsSeed);
        patched += l + '\n';
      }
      text = patched;
    }
    const auto sc = scene::parseScene(text);
    for (const auto& w : sc.warnings) std::cerr << "warning: " << w << '\n';
    if (sc.scenarios.empty()) throw Error(Errc::InvalidArgument, "scene has no scenarios");
    const auto& scenario = rsScenario.empty() ? sc.scenarios.front() : sc.scenario(rsScenario);

    const auto topo = topology(rsTopo, rsUnits);
    interconnect::Bus bus(topo);
    host::SignalManager manager(bus);
    manager.initializeBoards(overridesFor(topo, rsRate, 0));
    for (const auto& w : manager.warnings()) std::cerr << "warning: " << w << '\n';

    runner::RunOptions opts;
    opts.duration = rsDuration;
    opts.capture = !rsNoCapture;
    opts.buttonPresses = parseList(rsPresses);
    runner::PoseSource pose;
    if (!rsPose.empty()) {
      pose = runner::PoseSource::replay(rsPose);
    } else if (rsCircle > 0.0) {
      pose = runner::PoseSource::circle(rsCircle * 1e-3, rsRevs, rsDuration, opts.calibration);
    } else {
      pose = runner::PoseSource::stationary(rsDuration, opts.calibration);
    }
    auto models = runner::ModelRegistry::builtin();
    const auto result = runner::runScenario(scenario, models, manager, pose, opts);
    runner::writeRun(result, rsOut);
    json out{{"run_dir", rsOut},
             {"events", result.log.events.size()},
             {"dropped_frames", result.droppedFrames},
             {"units", unitsJson(manager)}};
    std::cout << out.dump(2) << '\n';
    if (result.anyUnitError()) status = 1;
  });

  // report
  std::string repRun, repOut, repConfig;
  auto* rep = app.add_subcommand("report", "Tables from a run directory");
  rep->add_option("--run", repRun, "run directory")->required();
  rep->add_option("--out", repOut, "output directory (default: the run directory)");
  rep->add_option("--config", repConfig, "display config JSON");
  rep->callback([&] {
    const auto files = report::report(repRun, repOut.empty() ? repRun : repOut, displayConfig(repConfig));
    std::cout << json{{"table1", files.table1.string()},
                      {"table3", files.table3.string()},
                      {"table4", files.table4.string()}}
                     .dump(2)
              << '\n';
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return status;
}
