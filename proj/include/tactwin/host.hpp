#pragma once

// High-level control surface: board manager, generator handles, the pose
// tracker for the two-sensor mouse, and a text stand-in for the OLED display.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "tactwin/interconnect.hpp"
#include "tactwin/metrology.hpp"
#include "tactwin/siggen.hpp"
#include "tactwin/wiretab.hpp"

namespace tactwin::host {

inline constexpr double kDefaultFrameBudget = 1e-3;

struct UnitOverrides {
  std::optional<double> samplingRate;
  std::optional<int> pwmDepth;
  std::optional<double> smoothingAlpha;
};

struct UnitStatus {
  interconnect::RegistryEntry entry;
  siggen::RunLevel level = siggen::RunLevel::Boot;
  double samplingRate = siggen::GeneratorConfig{}.samplingRate;
  std::string diagnostic;
};

struct FrameReport {
  double duration = 0.0;  // sum of bus transfer times, s
  std::size_t transfers = 0;
  std::size_t delivered = 0;
  bool overBudget = false;
  std::vector<std::string> rejected;
};

class SignalManager;

/// Handle to one generator unit, valid while its manager lives.
class SignalGenerator {
 public:
  SignalGenerator(SignalManager& manager, std::size_t index) : manager_(&manager), index_(index) {}
  FrameReport send(const wiretab::FrequencyTable& table);
  siggen::RunLevel runLevel() const;
  const interconnect::RegistryEntry& entry() const;
  std::size_t index() const noexcept { return index_; }

 private:
  SignalManager* manager_;
  std::size_t index_;
};

class SignalManager {
 public:
  explicit SignalManager(interconnect::Bus& bus, double frameBudget = kDefaultFrameBudget);

  /// Enumerates the bus and drives every unit to Running with defaults
  /// (or the per-dip overrides). A unit that fails stays in its state and is
  /// reported; an empty bus is a warning.
  std::vector<UnitStatus> initializeBoards(const std::map<int, UnitOverrides>& overrides = {});

  FrameReport sendAll(const wiretab::FrequencyTable& table,
                      metrology::SendMode mode = metrology::SendMode::Sequential);
  /// Index into the registry.
  FrameReport sendTo(std::size_t unit, const wiretab::FrequencyTable& table);

  /// Sends a raw config command and updates the mirror from the reply.
  std::vector<std::uint8_t> command(std::size_t unit, const std::vector<std::uint8_t>& bytes);

  std::vector<SignalGenerator> generators();
  std::size_t unitCount() const noexcept { return units_.size(); }
  std::size_t channelCount() const;
  const interconnect::RegistryEntry& entry(std::size_t unit) const { return units_.at(unit).entry; }
  siggen::RunLevel mirroredLevel(std::size_t unit) const { return units_.at(unit).level; }
  double samplingRate(std::size_t unit) const { return units_.at(unit).samplingRate; }
  const std::vector<UnitStatus>& status() const noexcept { return units_; }
  bool anyError() const;
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  double frameBudget() const noexcept { return frameBudget_; }
  interconnect::Bus& bus() noexcept { return *bus_; }

 private:
  void mirror(UnitStatus& u, const std::vector<std::uint8_t>& cmd, const std::vector<std::uint8_t>& reply);
  FrameReport finish(FrameReport report);

  interconnect::Bus* bus_;
  double frameBudget_;
  std::vector<UnitStatus> units_;
  std::vector<std::string> warnings_;
  std::mutex mutex_;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Displacements in sensor counts.
struct SensorFrame {
  double timestamp = 0.0;  // s
  Vec2 d1;
  Vec2 d2;
};

struct PoseCalibration {
  double baseline = 0.05;  // sensor separation, m; sensors at body (-b/2, 0) and (+b/2, 0)
  double countsPerMeter1 = 1.0 / 25.4e-6;  // 1000 counts per inch
  double countsPerMeter2 = 1.0 / 25.4e-6;
  double emaCoeff = 0.2;
  double frameRate = 500.0;  // nominal, used when timestamps do not advance

  /// Throws NonPositiveCalibration.
  void validate() const;
};

struct PoseState {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double omega = 0.0;
  bool started = false;

  double speed() const;
};

struct PoseStep {
  PoseState pose;
  double slip = 0.0;  // |dx2 - dx1| in m
  std::optional<std::string> diagnostic;
};

/// Small-angle rigid update with the heading taken at mid-step.
PoseStep integratePose(const PoseState& prev, const SensorFrame& frame, const PoseCalibration& cal);

/// One producer feeds frames; readers take snapshot copies.
class PoseTracker {
 public:
  explicit PoseTracker(PoseCalibration cal = {});

  PoseState update(const SensorFrame& frame);
  PoseState snapshot() const;
  void resetPose();
  void setCalibration(double baseline, double countsPerMeter, double emaCoeff);
  void setCalibration(const PoseCalibration& cal);
  PoseCalibration calibration() const;
  double lastSlip() const;
  std::vector<std::string> diagnostics() const;

 private:
  PoseCalibration cal_;
  PoseState pose_;
  double slip_ = 0.0;
  std::vector<std::string> diagnostics_;
  mutable std::mutex mutex_;
};

/// Frames of a body driven once around a circle with its heading tangent to
/// the path. The sensors report motion in their own axes.
std::vector<SensorFrame> circleFrames(double radius, double revolutions, double duration,
                                      const PoseCalibration& cal);

/// CSV columns t, dx1, dy1, dx2, dy2 (counts); header optional.
std::vector<SensorFrame> readFramesCsv(std::istream& in);
void writeFramesCsv(std::ostream& out, const std::vector<SensorFrame>& frames);
void writePoseCsvHeader(std::ostream& out);
void writePoseCsvRow(std::ostream& out, const PoseState& pose, double slip);

enum class Icon { Logo, Info, Warning };
enum class Button { Back, Up, Down, Select };

/// Text log that honours the show / detach / isPressed shape of the OLED API.
class GraphicalDisplay {
 public:
  void show(Icon icon, const std::string& line1, const std::string& line2 = {});
  void show(Icon icon, const std::string& line1, double value);
  void detach() { detached_ = true; }
  bool detached() const noexcept { return detached_; }
  bool isPressed(Button button);
  /// Queue a button press for the next isPressed query (scripted input).
  void press(Button button) { pending_.push_back(button); }
  const std::vector<std::string>& log() const noexcept { return log_; }

 private:
  bool detached_ = false;
  std::vector<Button> pending_;
  std::vector<std::string> log_;
};

}  // namespace tactwin::host
