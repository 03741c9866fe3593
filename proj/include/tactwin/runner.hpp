#pragma once

// Headless scenario loop: pose -> area -> tactile model -> frequency tables
// -> generators, ticked at 1 kHz, with a study log and per-channel captures.

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tactwin/host.hpp"
#include "tactwin/interconnect.hpp"
#include "tactwin/scene.hpp"
#include "tactwin/wiretab.hpp"

namespace tactwin::runner {

inline constexpr double kTickRate = 1000.0;

struct ModelInput {
  double x = 0.0;  // mm
  double y = 0.0;
  double vx = 0.0;  // cm/s
  double vy = 0.0;
  double speed = 0.0;  // cm/s
  const scene::Area* area = nullptr;
};

/// Maps the current pose and area to one table for every generator.
class TactileModel {
 public:
  virtual ~TactileModel() = default;
  virtual wiretab::FrequencyTable operator()(const ModelInput& in) const = 0;
};

/// Channel 0, tone 0: frequency = speed * gain, amplitude fixed.
/// params: gain (Hz per cm/s, default 25), amplitude (default 0.9).
class VelocityScaledModel final : public TactileModel {
 public:
  wiretab::FrequencyTable operator()(const ModelInput& in) const override;
};

/// params: frequency (default 250), amplitude (default 0.5).
class ConstantModel final : public TactileModel {
 public:
  wiretab::FrequencyTable operator()(const ModelInput& in) const override;
};

class SilentModel final : public TactileModel {
 public:
  wiretab::FrequencyTable operator()(const ModelInput&) const override { return {}; }
};

using ModelFactory = std::function<std::unique_ptr<TactileModel>()>;

class ModelRegistry {
 public:
  /// velocity-scaled, constant, silent.
  static ModelRegistry builtin();
  void add(const std::string& name, ModelFactory factory);
  bool has(const std::string& name) const { return factories_.count(name) != 0; }
  const TactileModel& get(const std::string& name);
  std::vector<std::string> names() const;

 private:
  std::map<std::string, ModelFactory> factories_;
  std::map<std::string, std::unique_ptr<TactileModel>> instances_;
};

enum class EventKind { EnterArea, LeaveArea, ButtonPress, RandomChoice, RunEnd };
std::string_view to_string(EventKind kind) noexcept;

struct StudyEvent {
  double t = 0.0;
  EventKind kind = EventKind::EnterArea;
  std::string areaId;
  double meanVelocity = 0.0;  // cm/s over the stay, for leave and run end
};

struct StudyLog {
  std::vector<StudyEvent> events;
  void write(std::ostream& out) const;
};

struct PoseSource {
  std::vector<host::SensorFrame> frames;

  static PoseSource replay(const std::string& csvPath);
  static PoseSource circle(double radiusM, double revolutions, double duration,
                           const host::PoseCalibration& cal);
  static PoseSource stationary(double duration, const host::PoseCalibration& cal);
};

struct RunOptions {
  double duration = 1.0;  // s
  host::PoseCalibration calibration;
  std::vector<double> buttonPresses;  // scripted press times, s
  bool capture = true;
};

struct Capture {
  int dip = 0;
  int channel = 0;
  double samplingRate = 0.0;
  std::vector<std::uint16_t> duty;
};

struct RunResult {
  StudyLog log;
  std::vector<Capture> captures;
  std::vector<std::string> diagnostics;
  std::size_t ticks = 0;
  std::size_t droppedFrames = 0;
  double busTime = 0.0;
  std::size_t overBudgetTicks = 0;
  std::vector<host::UnitStatus> finalStatus;
  nlohmann::json manifest;

  bool anyUnitError() const;
};

/// Drives an initialized manager through one scenario.
RunResult runScenario(const scene::Scenario& scenario, ModelRegistry& models,
                      host::SignalManager& manager, const PoseSource& pose, const RunOptions& options);

/// Writes study_log.csv, capture_u<dip>_ch<c>.u16 and manifest.json.
void writeRun(const RunResult& result, const std::filesystem::path& dir);

}  // namespace tactwin::runner
