#include "tactwin/host.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "tactwin/error.hpp"

namespace tactwin::host {

namespace cfg = interconnect::config;
using siggen::RunLevel;

FrameReport SignalGenerator::send(const wiretab::FrequencyTable& table) {
  return manager_->sendTo(index_, table);
}

RunLevel SignalGenerator::runLevel() const { return manager_->mirroredLevel(index_); }

const interconnect::RegistryEntry& SignalGenerator::entry() const { return manager_->entry(index_); }

SignalManager::SignalManager(interconnect::Bus& bus, double frameBudget)
    : bus_(&bus), frameBudget_(frameBudget) {
  if (!(frameBudget > 0.0)) throw Error(Errc::InvalidArgument, "frame budget must be positive");
}

void SignalManager::mirror(UnitStatus& u, const std::vector<std::uint8_t>& cmd,
                           const std::vector<std::uint8_t>& reply) {
  switch (cmd.at(0)) {
    case cfg::kAssignAddress:
      if (u.level == RunLevel::Boot) u.level = RunLevel::Enumerated;
      break;
    case cfg::kSetSamplingRate:
      u.samplingRate = static_cast<double>(cmd[1] | (cmd[2] << 8) | (cmd[3] << 16) |
                                           (static_cast<std::uint32_t>(cmd[4]) << 24));
      u.level = RunLevel::Configured;
      break;
    case cfg::kSetPwmDepth:
    case cfg::kSetSmoothing:
    case cfg::kStop:
      u.level = RunLevel::Configured;
      break;
    case cfg::kStart:
    case cfg::kStatus:
      u.level = static_cast<RunLevel>(reply.at(1));
      break;
    case cfg::kReset:
      u.level = RunLevel::Boot;
      u.samplingRate = siggen::GeneratorConfig{}.samplingRate;
      break;
    default:
      break;
  }
}

std::vector<std::uint8_t> SignalManager::command(std::size_t unit, const std::vector<std::uint8_t>& bytes) {
  std::lock_guard lock(mutex_);
  UnitStatus& u = units_.at(unit);
  auto reply = bus_->configCommand(u.entry.configAddr, bytes);
  mirror(u, bytes, reply);
  return reply;
}

std::vector<UnitStatus> SignalManager::initializeBoards(const std::map<int, UnitOverrides>& overrides) {
  const auto registry = bus_->enumerate();
  {
    std::lock_guard lock(mutex_);
    units_.clear();
    warnings_.clear();
    for (const auto& e : registry) {
      UnitStatus s;
      s.entry = e;
      s.level = RunLevel::Enumerated;
      units_.push_back(s);
    }
    if (units_.empty()) warnings_.push_back("EmptyBus: no signal boards found");
  }
  const siggen::GeneratorConfig defaults;
  for (std::size_t i = 0; i < units_.size(); ++i) {
    UnitOverrides o;
    if (auto it = overrides.find(units_[i].entry.dip); it != overrides.end()) o = it->second;
    try {
      command(i, cfg::setSamplingRate(o.samplingRate.value_or(defaults.samplingRate)));
      command(i, {cfg::kSetPwmDepth, static_cast<std::uint8_t>(o.pwmDepth.value_or(defaults.pwmBitDepth))});
      command(i, cfg::setSmoothing(o.smoothingAlpha.value_or(defaults.smoothingAlpha)));
      const auto reply = command(i, {cfg::kStart});
      if (static_cast<RunLevel>(reply.at(1)) == RunLevel::Error) {
        const auto status = command(i, {cfg::kStatus});
        units_[i].diagnostic = std::string("start failed: ") +
                               std::string(siggen::to_string(static_cast<siggen::ErrorReason>(status.at(2))));
      }
    } catch (const Error& e) {
      units_[i].diagnostic = e.what();
    }
  }
  return units_;
}

FrameReport SignalManager::finish(FrameReport report) {
  report.overBudget = report.duration > frameBudget_;
  return report;
}

FrameReport SignalManager::sendAll(const wiretab::FrequencyTable& table, metrology::SendMode mode) {
  std::lock_guard lock(mutex_);
  FrameReport report;
  std::map<double, wiretab::EncodedTable> encoded;
  auto packageFor = [&](double rate) -> const wiretab::EncodedTable& {
    auto it = encoded.find(rate);
    if (it == encoded.end()) it = encoded.emplace(rate, wiretab::encode(table, rate)).first;
    return it->second;
  };
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < units_.size(); ++i) {
    if (units_[i].level == RunLevel::Running) {
      live.push_back(i);
    } else {
      report.rejected.push_back("unit " + std::to_string(units_[i].entry.dip) + " is " +
                                std::string(siggen::to_string(units_[i].level)));
    }
  }
  if (live.empty()) return finish(report);

  if (mode == metrology::SendMode::Broadcast) {
    const double rate = units_[live.front()].samplingRate;
    for (std::size_t i : live) {
      if (units_[i].samplingRate != rate) {
        throw Error(Errc::InvalidArgument, "broadcast needs one sampling rate on all units");
      }
    }
    bus_->broadcast(true);
    try {
      const auto t = bus_->bulkWrite(packageFor(rate));
      report.duration += t.duration;
      report.delivered += t.delivered;
      ++report.transfers;
    } catch (...) {
      bus_->broadcast(false);
      throw;
    }
    bus_->broadcast(false);
    return finish(report);
  }

  for (std::size_t i : live) {
    bus_->select(units_[i].entry.dip);
    const auto t = bus_->bulkWrite(packageFor(units_[i].samplingRate));
    report.duration += t.duration;
    report.delivered += t.delivered;
    ++report.transfers;
  }
  return finish(report);
}

FrameReport SignalManager::sendTo(std::size_t unit, const wiretab::FrequencyTable& table) {
  std::lock_guard lock(mutex_);
  FrameReport report;
  const UnitStatus& u = units_.at(unit);
  if (u.level != RunLevel::Running) {
    report.rejected.push_back("unit " + std::to_string(u.entry.dip) + " is " +
                              std::string(siggen::to_string(u.level)));
    return finish(report);
  }
  const auto package = wiretab::encode(table, u.samplingRate);
  bus_->select(u.entry.dip);
  const auto t = bus_->bulkWrite(package);
  report.duration = t.duration;
  report.delivered = t.delivered;
  report.transfers = 1;
  return finish(report);
}

std::vector<SignalGenerator> SignalManager::generators() {
  std::vector<SignalGenerator> out;
  for (std::size_t i = 0; i < units_.size(); ++i) out.emplace_back(*this, i);
  return out;
}

std::size_t SignalManager::channelCount() const {
  std::size_t n = 0;
  for (const auto& u : units_) n += static_cast<std::size_t>(u.entry.channels);
  return n;
}

bool SignalManager::anyError() const {
  return std::any_of(units_.begin(), units_.end(),
                     [](const UnitStatus& u) { return u.level == RunLevel::Error; });
}

void PoseCalibration::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(baseline) || !positive(countsPerMeter1) || !positive(countsPerMeter2) ||
      !positive(frameRate)) {
    throw Error(Errc::NonPositiveCalibration, "baseline, scales and frame rate must be positive");
  }
  if (!(emaCoeff > 0.0 && emaCoeff <= 1.0)) {
    throw Error(Errc::NonPositiveCalibration, "EMA coefficient must be in (0, 1]");
  }
}

double PoseState::speed() const { return std::hypot(vx, vy); }

PoseStep integratePose(const PoseState& prev, const SensorFrame& frame, const PoseCalibration& cal) {
  PoseStep step;
  step.pose = prev;
  const double values[] = {frame.d1.x, frame.d1.y, frame.d2.x, frame.d2.y, frame.timestamp};
  if (!std::all_of(std::begin(values), std::end(values), [](double v) { return std::isfinite(v); })) {
    step.diagnostic = "degenerate frame ignored";
    return step;
  }
  const Vec2 a{frame.d1.x / cal.countsPerMeter1, frame.d1.y / cal.countsPerMeter1};
  const Vec2 b{frame.d2.x / cal.countsPerMeter2, frame.d2.y / cal.countsPerMeter2};

  const double dTheta = (b.y - a.y) / cal.baseline;
  const Vec2 body{(a.x + b.x) / 2.0, (a.y + b.y) / 2.0};
  const double mid = prev.theta + dTheta / 2.0;
  const double c = std::cos(mid), s = std::sin(mid);
  const double dx = c * body.x - s * body.y;
  const double dy = s * body.x + c * body.y;

  double dt = prev.started ? frame.timestamp - prev.t : 0.0;
  if (!(dt > 0.0)) dt = 1.0 / cal.frameRate;

  PoseState& p = step.pose;
  p.x += dx;
  p.y += dy;
  p.theta += dTheta;
  const double k = cal.emaCoeff;
  p.vx = (1.0 - k) * p.vx + k * dx / dt;
  p.vy = (1.0 - k) * p.vy + k * dy / dt;
  p.omega = (1.0 - k) * p.omega + k * dTheta / dt;
  p.t = frame.timestamp;
  p.started = true;
  step.slip = std::abs(b.x - a.x);
  return step;
}

PoseTracker::PoseTracker(PoseCalibration cal) : cal_(cal) { cal_.validate(); }

PoseState PoseTracker::update(const SensorFrame& frame) {
  std::lock_guard lock(mutex_);
  const PoseStep step = integratePose(pose_, frame, cal_);
  pose_ = step.pose;
  slip_ = step.slip;
  if (step.diagnostic) diagnostics_.push_back(*step.diagnostic);
  return pose_;
}

PoseState PoseTracker::snapshot() const {
  std::lock_guard lock(mutex_);
  return pose_;
}

void PoseTracker::resetPose() {
  std::lock_guard lock(mutex_);
  pose_ = PoseState{};
  slip_ = 0.0;
}

void PoseTracker::setCalibration(double baseline, double countsPerMeter, double emaCoeff) {
  PoseCalibration cal = calibration();
  cal.baseline = baseline;
  cal.countsPerMeter1 = countsPerMeter;
  cal.countsPerMeter2 = countsPerMeter;
  cal.emaCoeff = emaCoeff;
  setCalibration(cal);
}

void PoseTracker::setCalibration(const PoseCalibration& cal) {
  cal.validate();
  std::lock_guard lock(mutex_);
  cal_ = cal;
}

PoseCalibration PoseTracker::calibration() const {
  std::lock_guard lock(mutex_);
  return cal_;
}

double PoseTracker::lastSlip() const {
  std::lock_guard lock(mutex_);
  return slip_;
}

std::vector<std::string> PoseTracker::diagnostics() const {
  std::lock_guard lock(mutex_);
  return diagnostics_;
}

std::vector<SensorFrame> circleFrames(double radius, double revolutions, double duration,
                                      const PoseCalibration& cal) {
  cal.validate();
  if (!(radius > 0.0) || !(duration > 0.0)) throw Error(Errc::InvalidArgument, "radius and duration must be positive");
  const auto n = static_cast<std::size_t>(std::llround(duration * cal.frameRate));
  const double total = 2.0 * std::numbers::pi * revolutions;
  const double half = cal.baseline / 2.0;

  // Body starts at the origin heading +x and turns left around (0, radius).
  auto sensorAt = [&](double phi, double xs) {
    return Vec2{radius * std::sin(phi) + xs * std::cos(phi),
                radius * (1.0 - std::cos(phi)) + xs * std::sin(phi)};
  };
  std::vector<SensorFrame> frames;
  frames.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double phi0 = total * static_cast<double>(k) / static_cast<double>(n);
    const double phi1 = total * static_cast<double>(k + 1) / static_cast<double>(n);
    const double mid = 0.5 * (phi0 + phi1);
    const double c = std::cos(mid), s = std::sin(mid);
    SensorFrame f;
    f.timestamp = static_cast<double>(k + 1) / cal.frameRate;
    const double scale[] = {cal.countsPerMeter1, cal.countsPerMeter2};
    const double xs[] = {-half, half};
    Vec2* out[] = {&f.d1, &f.d2};
    for (int i = 0; i < 2; ++i) {
      const Vec2 p0 = sensorAt(phi0, xs[i]);
      const Vec2 p1 = sensorAt(phi1, xs[i]);
      const double wx = p1.x - p0.x, wy = p1.y - p0.y;
      out[i]->x = (c * wx + s * wy) * scale[i];
      out[i]->y = (-s * wx + c * wy) * scale[i];
    }
    frames.push_back(f);
  }
  return frames;
}

std::vector<SensorFrame> readFramesCsv(std::istream& in) {
  std::vector<SensorFrame> frames;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    SensorFrame f;
    if (!(row >> f.timestamp >> f.d1.x >> f.d1.y >> f.d2.x >> f.d2.y)) {
      if (lineNo == 1) continue;
      throw Error(Errc::ParseError, "line " + std::to_string(lineNo) + ": expected t,dx1,dy1,dx2,dy2");
    }
    frames.push_back(f);
  }
  return frames;
}

void writeFramesCsv(std::ostream& out, const std::vector<SensorFrame>& frames) {
  out << "t,dx1,dy1,dx2,dy2\n";
  const auto old = out.precision(17);
  for (const auto& f : frames) {
    out << f.timestamp << ',' << f.d1.x << ',' << f.d1.y << ',' << f.d2.x << ',' << f.d2.y << '\n';
  }
  out.precision(old);
}

void writePoseCsvHeader(std::ostream& out) { out << "t,x_m,y_m,theta_rad,vx_mps,vy_mps,omega_radps,slip_m\n"; }

void writePoseCsvRow(std::ostream& out, const PoseState& p, double slip) {
  out << p.t << ',' << p.x << ',' << p.y << ',' << p.theta << ',' << p.vx << ',' << p.vy << ','
      << p.omega << ',' << slip << '\n';
}

void GraphicalDisplay::show(Icon icon, const std::string& line1, const std::string& line2) {
  static const char* names[] = {"logo", "info", "warning"};
  log_.push_back(std::string("[") + names[static_cast<int>(icon)] + "] " + line1 +
                 (line2.empty() ? "" : " | " + line2));
}

void GraphicalDisplay::show(Icon icon, const std::string& line1, double value) {
  std::ostringstream s;
  s << value;
  show(icon, line1, s.str());
}

bool GraphicalDisplay::isPressed(Button button) {
  auto it = std::find(pending_.begin(), pending_.end(), button);
  if (it == pending_.end()) return false;
  pending_.erase(it);
  return true;
}

}  // namespace tactwin::host
