#include "tactwin/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "tactwin/error.hpp"

namespace tactwin::runner {

namespace {

double paramOr(const scene::Area* area, const char* key, double fallback) {
  return area ? area->param(key, fallback) : fallback;
}

std::string captureName(int dip, int channel) {
  return "capture_u" + std::to_string(dip) + "_ch" + std::to_string(channel) + ".u16";
}

}  // namespace

wiretab::FrequencyTable VelocityScaledModel::operator()(const ModelInput& in) const {
  wiretab::FrequencyTable t;
  t.at(0, 0) = {in.speed * paramOr(in.area, "gain", 25.0), paramOr(in.area, "amplitude", 0.9)};
  return t;
}

wiretab::FrequencyTable ConstantModel::operator()(const ModelInput& in) const {
  wiretab::FrequencyTable t;
  t.at(0, 0) = {paramOr(in.area, "frequency", 250.0), paramOr(in.area, "amplitude", 0.5)};
  return t;
}

ModelRegistry ModelRegistry::builtin() {
  ModelRegistry r;
  r.add("velocity-scaled", [] { return std::make_unique<VelocityScaledModel>(); });
  r.add("constant", [] { return std::make_unique<ConstantModel>(); });
  r.add("silent", [] { return std::make_unique<SilentModel>(); });
  return r;
}

void ModelRegistry::add(const std::string& name, ModelFactory factory) {
  factories_[name] = std::move(factory);
  instances_.erase(name);
}

const TactileModel& ModelRegistry::get(const std::string& name) {
  if (auto it = instances_.find(name); it != instances_.end()) return *it->second;
  auto f = factories_.find(name);
  if (f == factories_.end()) throw Error(Errc::InvalidArgument, "unknown model '" + name + "'");
  return *instances_.emplace(name, f->second()).first->second;
}

std::vector<std::string> ModelRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : factories_) out.push_back(name);
  return out;
}

std::string_view to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::EnterArea: return "enterArea";
    case EventKind::LeaveArea: return "leaveArea";
    case EventKind::ButtonPress: return "buttonPress";
    case EventKind::RandomChoice: return "randomChoice";
    case EventKind::RunEnd: return "runEnd";
  }
  return "?";
}

void StudyLog::write(std::ostream& out) const {
  out << "t_s,event,area,mean_velocity_cm_s\n";
  char buf[64];
  for (const auto& e : events) {
    std::snprintf(buf, sizeof buf, "%.3f", e.t);
    out << buf << ',' << to_string(e.kind) << ',' << e.areaId << ',';
    std::snprintf(buf, sizeof buf, "%.6f", e.meanVelocity);
    out << buf << '\n';
  }
}

PoseSource PoseSource::replay(const std::string& csvPath) {
  std::ifstream in(csvPath);
  if (!in) throw Error(Errc::Io, "cannot open " + csvPath);
  return {host::readFramesCsv(in)};
}

PoseSource PoseSource::circle(double radiusM, double revolutions, double duration,
                              const host::PoseCalibration& cal) {
  return {host::circleFrames(radiusM, revolutions, duration, cal)};
}

PoseSource PoseSource::stationary(double duration, const host::PoseCalibration& cal) {
  PoseSource s;
  const auto n = static_cast<std::size_t>(std::llround(duration * cal.frameRate));
  for (std::size_t k = 0; k < n; ++k) {
    s.frames.push_back({static_cast<double>(k + 1) / cal.frameRate, {}, {}});
  }
  return s;
}

bool RunResult::anyUnitError() const {
  for (const auto& u : finalStatus) {
    if (u.level == siggen::RunLevel::Error) return true;
  }
  return false;
}

RunResult runScenario(const scene::Scenario& scenario, ModelRegistry& models,
                      host::SignalManager& manager, const PoseSource& pose, const RunOptions& options) {
  if (!(options.duration > 0.0)) throw Error(Errc::InvalidArgument, "duration must be positive");
  for (const auto& a : scenario.areas) models.get(a.model);

  interconnect::Bus& bus = manager.bus();
  host::PoseTracker tracker(options.calibration);
  RunResult result;
  StudyLog& log = result.log;

  for (const auto& a : scenario.areas) {
    if (a.randomized) log.events.push_back({0.0, EventKind::RandomChoice, a.id, 0.0});
  }

  struct Live {
    std::size_t unit;
    std::size_t busIndex;
    double rate;
    std::uint64_t rendered = 0;
  };
  std::vector<Live> live;
  std::set<double> rates;
  for (std::size_t i = 0; i < manager.unitCount(); ++i) {
    if (manager.mirroredLevel(i) != siggen::RunLevel::Running) continue;
    live.push_back({i, *bus.indexOfDip(manager.entry(i).dip), manager.samplingRate(i)});
    rates.insert(manager.samplingRate(i));
  }
  std::vector<Capture> captures;
  if (options.capture) {
    for (const auto& l : live) {
      for (int c = 0; c < manager.entry(l.unit).channels; ++c) {
        captures.push_back({manager.entry(l.unit).dip, c, l.rate, {}});
      }
    }
  }

  std::vector<double> presses = options.buttonPresses;
  std::sort(presses.begin(), presses.end());
  std::size_t nextPress = 0;
  std::size_t nextFrame = 0;

  const scene::Area* current = nullptr;
  double staySpeedSum = 0.0;
  std::size_t stayTicks = 0;
  auto stayMean = [&] { return stayTicks ? staySpeedSum / static_cast<double>(stayTicks) : 0.0; };

  const auto ticks = static_cast<std::size_t>(std::llround(options.duration * kTickRate));
  for (std::size_t k = 0; k < ticks; ++k) {
    const double t = static_cast<double>(k) / kTickRate;
    while (nextFrame < pose.frames.size() && pose.frames[nextFrame].timestamp <= t + 1e-9) {
      tracker.update(pose.frames[nextFrame++]);
    }
    const host::PoseState p = tracker.snapshot();
    ModelInput in;
    in.x = scenario.startX + 1e3 * p.x;
    in.y = scenario.startY + 1e3 * p.y;
    in.vx = 1e2 * p.vx;
    in.vy = 1e2 * p.vy;
    in.speed = 1e2 * p.speed();
    in.area = scenario.locate(in.x, in.y);

    if (in.area != current) {
      if (current) log.events.push_back({t, EventKind::LeaveArea, current->id, stayMean()});
      if (in.area) log.events.push_back({t, EventKind::EnterArea, in.area->id, 0.0});
      current = in.area;
      staySpeedSum = 0.0;
      stayTicks = 0;
    }
    staySpeedSum += in.speed;
    ++stayTicks;
    while (nextPress < presses.size() && presses[nextPress] <= t + 1e-9) {
      log.events.push_back({t, EventKind::ButtonPress, current ? current->id : "", in.speed});
      ++nextPress;
    }

    try {
      const TactileModel& model = models.get(current ? current->model : "silent");
      const wiretab::FrequencyTable table = model(in);
      for (double rate : rates) wiretab::validate(table, rate);
      const host::FrameReport report = manager.sendAll(table);
      result.busTime += report.duration;
      if (report.overBudget) ++result.overBudgetTicks;
    } catch (const Error& e) {
      // The generators keep playing the last valid table.
      ++result.droppedFrames;
      char buf[32];
      std::snprintf(buf, sizeof buf, "t=%.3f ", t);
      result.diagnostics.push_back(std::string(buf) + "ModelOutputInvalid: " + e.what());
    }

    const double tEnd = static_cast<double>(k + 1) / kTickRate;
    for (auto& l : live) {
      const auto target = static_cast<std::uint64_t>(std::floor(tEnd * l.rate + 1e-9));
      const auto n = static_cast<std::size_t>(target - l.rendered);
      if (n == 0) continue;
      auto block = bus.render(l.busIndex, n);
      l.rendered = target;
      if (!options.capture) continue;
      for (auto& cap : captures) {
        if (cap.dip != manager.entry(l.unit).dip) continue;
        const auto& d = block.duty[static_cast<std::size_t>(cap.channel)];
        cap.duty.insert(cap.duty.end(), d.begin(), d.end());
      }
    }
    ++result.ticks;
  }
  log.events.push_back({options.duration, EventKind::RunEnd, current ? current->id : "", stayMean()});

  result.captures = std::move(captures);
  result.finalStatus = manager.status();
  for (const auto& d : tracker.diagnostics()) result.diagnostics.push_back("pose: " + d);

  nlohmann::json m;
  m["format"] = 1;
  m["scenario"] = scenario.name;
  m["seed"] = scenario.seed;
  m["duration_s"] = options.duration;
  m["tick_rate_hz"] = kTickRate;
  m["areas"] = nlohmann::json::array();
  for (const auto& a : scenario.areas) {
    m["areas"].push_back({{"id", a.id},
                          {"model", a.model},
                          {"rect_mm", {a.rect.x, a.rect.y, a.rect.w, a.rect.h}},
                          {"randomized", a.randomized},
                          {"neutral", a.neutral},
                          {"image", a.neutral ? std::string(scene::kNeutralImage) : a.image},
                          {"params", a.params}});
  }
  m["units"] = nlohmann::json::array();
  for (const auto& u : result.finalStatus) {
    m["units"].push_back({{"dip", u.entry.dip},
                          {"config_addr", u.entry.configAddr},
                          {"kind", std::string(interconnect::to_string(u.entry.kind))},
                          {"level", std::string(siggen::to_string(u.level))},
                          {"sampling_rate_hz", u.samplingRate},
                          {"diagnostic", u.diagnostic}});
  }
  m["captures"] = nlohmann::json::array();
  for (const auto& c : result.captures) {
    m["captures"].push_back({{"file", captureName(c.dip, c.channel)},
                             {"dip", c.dip},
                             {"channel", c.channel},
                             {"sampling_rate_hz", c.samplingRate},
                             {"samples", c.duty.size()}});
  }
  m["latency_model"] = {{"effective_bits", bus.latencyModel().effectiveBits},
                        {"fixed_overhead_s", bus.latencyModel().fixedOverhead}};
  m["ticks"] = result.ticks;
  m["dropped_frames"] = result.droppedFrames;
  m["over_budget_ticks"] = result.overBudgetTicks;
  m["bus_time_s"] = result.busTime;
  m["diagnostics"] = result.diagnostics;
  result.manifest = std::move(m);
  return result;
}

void writeRun(const RunResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "study_log.csv", std::ios::binary);
    if (!out) throw Error(Errc::Io, "cannot write " + (dir / "study_log.csv").string());
    result.log.write(out);
  }
  for (const auto& c : result.captures) {
    std::ofstream out(dir / captureName(c.dip, c.channel), std::ios::binary);
    if (!out) throw Error(Errc::Io, "cannot write capture in " + dir.string());
    siggen::writeRawSamples(out, c.duty);
  }
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + (dir / "manifest.json").string());
  out << result.manifest.dump(2) << '\n';
}

}  // namespace tactwin::runner
