#pragma once

// Emulation of the coprocessor signal loop.
//
// Each of the 4 channels superimposes 10 oscillators. An oscillator is a
// 15-bit phase accumulator whose top 12 bits index a Q15 cosine table; its
// increment is the frequency code from the wire package. Amplitude and
// frequency codes each pass through a first-order IIR smoother stepped once
// per sample.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tactwin/wiretab.hpp"

namespace tactwin::siggen {

inline constexpr std::size_t kLutSize = 4096;
inline constexpr std::size_t kComponentsPerChannel = wiretab::kTonesPerChannel;
inline constexpr std::size_t kTotalComponents = wiretab::kChannels * kComponentsPerChannel;

struct GeneratorConfig {
  double samplingRate = 25000.0;       // Hz
  int pwmBitDepth = 12;                // 8..16
  double smoothingAlpha = 0.05;        // (0, 1], per sample
  double componentCostBudget = 1e-6;   // seconds per component per sample
};

enum class RunLevel { Boot, Enumerated, Configured, Running, Error };
enum class ErrorReason { None, TimingViolation };

std::string_view to_string(RunLevel level) noexcept;
std::string_view to_string(ErrorReason reason) noexcept;

namespace cmd {
struct AssignAddress { std::uint8_t address = 0; };
struct SetSamplingRate { double hz = 25000.0; };
struct SetPwmDepth { int bits = 12; };
struct SetSmoothing { double alpha = 0.05; };
struct Start {};
struct Stop {};
struct Reset {};
}  // namespace cmd

using Command = std::variant<cmd::AssignAddress, cmd::SetSamplingRate, cmd::SetPwmDepth,
                             cmd::SetSmoothing, cmd::Start, cmd::Stop, cmd::Reset>;

/// Q15 cosine table, entry i = round(32767 cos(2 pi i / 4096)).
const std::array<std::int16_t, kLutSize>& cosineLut();

/// True iff the signal loop fits in one sample period.
bool timingFeasible(const GeneratorConfig& config);

struct Oscillator {
  std::uint16_t phase = 0;  // 15 bits used
  std::int32_t targetAmp = 0;
  std::int32_t smoothedAmp = 0;
  std::int32_t targetFreqCode = 0;
  std::int32_t smoothedFreqCode = 0;
};

struct RenderedBlock {
  std::uint64_t firstSample = 0;
  std::array<std::vector<std::uint16_t>, wiretab::kChannels> duty;
};

class GeneratorMachine {
 public:
  explicit GeneratorMachine(GeneratorConfig config = {});

  /// Applies a runlevel/config command. Throws IllegalTransition when the
  /// command is not allowed in the current runlevel. A failing timing check on
  /// Start is not an exception: the unit enters Error and that is returned.
  RunLevel applyCommand(const Command& command);

  RunLevel runLevel() const noexcept { return level_; }
  ErrorReason errorReason() const noexcept { return reason_; }
  const GeneratorConfig& config() const noexcept { return config_; }
  std::optional<std::uint8_t> address() const noexcept { return address_; }

  /// Stores a package; it becomes active at the next sample boundary.
  /// Requires Configured or Running, throws WrongState otherwise.
  void stageTable(const wiretab::EncodedTable& package);
  bool hasPendingTable() const noexcept { return pending_.has_value(); }

  /// Raw byte mailbox for user-defined payloads.
  void receiveRaw(std::span<const std::uint8_t> bytes);
  const std::vector<std::uint8_t>& userBuffer() const noexcept { return userBuffer_; }

  RenderedBlock renderSamples(std::size_t count);

  std::uint64_t sampleClock() const noexcept { return sampleClock_; }
  double time() const noexcept { return static_cast<double>(sampleClock_) / config_.samplingRate; }

  const Oscillator& oscillator(std::size_t channel, std::size_t component) const {
    return bank_.at(channel).at(component);
  }
  /// Largest |accumulator| seen so far; the 32-bit sum must stay below 2^31.
  std::int64_t peakAccumulator() const noexcept { return peakAccumulator_; }
  std::int32_t smoothingCoefficientQ15() const noexcept { return alphaQ15_; }

 private:
  void latchPending();
  void resetBank();
  void updateAlpha();

  GeneratorConfig config_;
  RunLevel level_ = RunLevel::Boot;
  ErrorReason reason_ = ErrorReason::None;
  std::optional<std::uint8_t> address_;
  std::array<std::array<Oscillator, kComponentsPerChannel>, wiretab::kChannels> bank_{};
  std::optional<wiretab::EncodedTable> pending_;
  std::vector<std::uint8_t> userBuffer_;
  std::uint64_t sampleClock_ = 0;
  std::int32_t alphaQ15_ = 0;
  std::int64_t peakAccumulator_ = 0;
};

/// One IIR smoothing step on an integer code. The step magnitude is
/// ceil(alpha*|gap|) so the state reaches the target exactly and never
/// overshoots.
std::int32_t smoothStep(std::int32_t state, std::int32_t target, std::int32_t alphaQ15);

/// Maps a Q15 sample to a PWM compare value around mid-scale 2^(depth-1).
std::uint16_t dutyFromQ15(std::int32_t q15, int depth);

enum class PwmAlignment { Centered, LeadingEdge };

/// Two-level PWM waveform: one carrier period per duty value, high for
/// duty/2^depth of the period.
class PwmStream {
 public:
  PwmStream(std::vector<std::uint16_t> duties, double carrier, int depth,
            PwmAlignment alignment = PwmAlignment::Centered);

  std::size_t periods() const noexcept { return duties_.size(); }
  double carrier() const noexcept { return carrier_; }
  int depth() const noexcept { return depth_; }
  PwmAlignment alignment() const noexcept { return alignment_; }

  /// High interval of period k in seconds from stream start.
  std::pair<double, double> highInterval(std::size_t k) const;
  /// Level (0 or 1) at time t.
  int level(double t) const;
  /// Mean level over period k.
  double periodMean(std::size_t k) const;
  /// Box-averaged samples, `oversample` per carrier period. Each sample is the
  /// exact fraction of its sub-interval spent high.
  std::vector<double> rasterize(int oversample) const;

 private:
  std::pair<double, double> highFraction(std::size_t k) const;

  std::vector<std::uint16_t> duties_;
  double carrier_;
  int depth_;
  PwmAlignment alignment_;
};

PwmStream pwmEdgeStream(std::span<const std::uint16_t> duties, double carrier, int depth,
                        PwmAlignment alignment = PwmAlignment::Centered);

void writeDutyCsv(std::ostream& out, const RenderedBlock& block, double samplingRate);
/// Raw little-endian u16 samples.
void writeRawSamples(std::ostream& out, std::span<const std::uint16_t> samples);
std::vector<std::uint16_t> readRawSamples(std::istream& in);

}  // namespace tactwin::siggen
