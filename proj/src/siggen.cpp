#include "tactwin/siggen.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>

#include "tactwin/error.hpp"

namespace tactwin::siggen {
namespace {

constexpr std::uint16_t kPhaseMask = 0x7FFF;
constexpr int kLutShift = 3;  // 15-bit phase -> 12-bit index
constexpr double kGuardSlack = 1e-12;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::array<std::int16_t, kLutSize> buildLut() {
  std::array<std::int16_t, kLutSize> lut{};
  for (std::size_t i = 0; i < kLutSize; ++i) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / kLutSize;
    lut[i] = static_cast<std::int16_t>(std::lround(32767.0 * std::cos(angle)));
  }
  return lut;
}

[[noreturn]] void illegal(RunLevel level, const char* what) {
  throw Error(Errc::IllegalTransition,
              std::string(what) + " not allowed in runlevel " + std::string(to_string(level)));
}

}  // namespace

std::string_view to_string(RunLevel level) noexcept {
  switch (level) {
    case RunLevel::Boot: return "Boot";
    case RunLevel::Enumerated: return "Enumerated";
    case RunLevel::Configured: return "Configured";
    case RunLevel::Running: return "Running";
    case RunLevel::Error: return "Error";
  }
  return "?";
}

std::string_view to_string(ErrorReason reason) noexcept {
  switch (reason) {
    case ErrorReason::None: return "None";
    case ErrorReason::TimingViolation: return "TimingViolation";
  }
  return "?";
}

const std::array<std::int16_t, kLutSize>& cosineLut() {
  static const auto lut = buildLut();
  return lut;
}

bool timingFeasible(const GeneratorConfig& config) {
  const double cost = static_cast<double>(kTotalComponents) * config.componentCostBudget;
  const double period = 1.0 / config.samplingRate;
  return cost <= period * (1.0 + kGuardSlack);
}

std::int32_t smoothStep(std::int32_t state, std::int32_t target, std::int32_t alphaQ15) {
  const std::int64_t gap = static_cast<std::int64_t>(target) - state;
  if (gap == 0) return state;
  const std::int64_t magnitude = gap > 0 ? gap : -gap;
  const std::int64_t step = (magnitude * alphaQ15 + 32767) >> 15;  // ceil
  return static_cast<std::int32_t>(gap > 0 ? state + step : state - step);
}

std::uint16_t dutyFromQ15(std::int32_t q15, int depth) {
  const std::int64_t mid = std::int64_t{1} << (depth - 1);
  const std::int64_t top = (std::int64_t{1} << depth) - 1;
  const std::int64_t offset = (static_cast<std::int64_t>(q15) * (mid - 1) + (1 << 14)) >> 15;
  return static_cast<std::uint16_t>(std::clamp<std::int64_t>(mid + offset, 0, top));
}

GeneratorMachine::GeneratorMachine(GeneratorConfig config) : config_(config) {
  if (!(config_.samplingRate > 0.0)) throw Error(Errc::InvalidArgument, "sampling rate <= 0");
  if (config_.pwmBitDepth < 8 || config_.pwmBitDepth > 16) {
    throw Error(Errc::InvalidArgument, "PWM bit depth must be 8..16");
  }
  if (!(config_.smoothingAlpha > 0.0 && config_.smoothingAlpha <= 1.0)) {
    throw Error(Errc::InvalidArgument, "smoothing alpha must be in (0, 1]");
  }
  updateAlpha();
}

void GeneratorMachine::updateAlpha() {
  // Rounded up so the realized coefficient is never below the configured one.
  alphaQ15_ = static_cast<std::int32_t>(std::ceil(config_.smoothingAlpha * 32768.0 - 1e-9));
  alphaQ15_ = std::clamp<std::int32_t>(alphaQ15_, 1, 32768);
}

void GeneratorMachine::resetBank() {
  bank_ = {};
  pending_.reset();
  peakAccumulator_ = 0;
}

RunLevel GeneratorMachine::applyCommand(const Command& command) {
  if (level_ == RunLevel::Error && !std::holds_alternative<cmd::Reset>(command)) {
    illegal(level_, "only Reset");
  }
  std::visit(
      Overloaded{
          [&](const cmd::AssignAddress& c) {
            if (level_ == RunLevel::Running) illegal(level_, "AssignAddress");
            address_ = c.address;
            if (level_ == RunLevel::Boot) level_ = RunLevel::Enumerated;
          },
          [&](const cmd::SetSamplingRate& c) {
            if (level_ != RunLevel::Enumerated && level_ != RunLevel::Configured) {
              illegal(level_, "SetSamplingRate");
            }
            if (!(c.hz > 0.0)) throw Error(Errc::InvalidArgument, "sampling rate <= 0");
            config_.samplingRate = c.hz;
            level_ = RunLevel::Configured;
          },
          [&](const cmd::SetPwmDepth& c) {
            if (level_ != RunLevel::Enumerated && level_ != RunLevel::Configured) {
              illegal(level_, "SetPwmDepth");
            }
            if (c.bits < 8 || c.bits > 16) throw Error(Errc::InvalidArgument, "depth 8..16");
            config_.pwmBitDepth = c.bits;
            level_ = RunLevel::Configured;
          },
          [&](const cmd::SetSmoothing& c) {
            if (level_ != RunLevel::Enumerated && level_ != RunLevel::Configured) {
              illegal(level_, "SetSmoothing");
            }
            if (!(c.alpha > 0.0 && c.alpha <= 1.0)) {
              throw Error(Errc::InvalidArgument, "alpha in (0, 1]");
            }
            config_.smoothingAlpha = c.alpha;
            updateAlpha();
            level_ = RunLevel::Configured;
          },
          [&](const cmd::Start&) {
            if (level_ != RunLevel::Configured) illegal(level_, "Start");
            level_ = RunLevel::Running;
            if (!timingFeasible(config_)) {
              level_ = RunLevel::Error;
              reason_ = ErrorReason::TimingViolation;
            }
          },
          [&](const cmd::Stop&) {
            if (level_ != RunLevel::Running) illegal(level_, "Stop");
            level_ = RunLevel::Configured;
          },
          [&](const cmd::Reset&) {
            level_ = RunLevel::Boot;
            reason_ = ErrorReason::None;
            address_.reset();
            config_ = GeneratorConfig{};
            updateAlpha();
            resetBank();
            userBuffer_.clear();
            sampleClock_ = 0;
          },
      },
      command);
  return level_;
}

void GeneratorMachine::stageTable(const wiretab::EncodedTable& package) {
  if (level_ != RunLevel::Configured && level_ != RunLevel::Running) {
    throw Error(Errc::WrongState,
                "cannot stage a table in runlevel " + std::string(to_string(level_)));
  }
  pending_ = package;
}

void GeneratorMachine::receiveRaw(std::span<const std::uint8_t> bytes) {
  userBuffer_.assign(bytes.begin(), bytes.end());
}

void GeneratorMachine::latchPending() {
  const wiretab::CodeTable codes = wiretab::unpackCodes(*pending_);
  pending_.reset();
  for (std::size_t c = 0; c < wiretab::kChannels; ++c) {
    for (std::size_t k = 0; k < kComponentsPerChannel; ++k) {
      bank_[c][k].targetAmp = codes[c][k].amplitude;
      bank_[c][k].targetFreqCode = codes[c][k].frequency;
    }
  }
}

RenderedBlock GeneratorMachine::renderSamples(std::size_t count) {
  if (level_ != RunLevel::Running) {
    throw Error(Errc::NotRunning, "render requires Running, unit is " +
                                      std::string(to_string(level_)));
  }
  const auto& lut = cosineLut();
  RenderedBlock block;
  block.firstSample = sampleClock_;
  for (auto& ch : block.duty) ch.resize(count);

  for (std::size_t n = 0; n < count; ++n) {
    if (pending_) latchPending();
    for (std::size_t c = 0; c < wiretab::kChannels; ++c) {
      std::int32_t acc = 0;
      for (Oscillator& osc : bank_[c]) {
        osc.smoothedAmp = smoothStep(osc.smoothedAmp, osc.targetAmp, alphaQ15_);
        osc.smoothedFreqCode = smoothStep(osc.smoothedFreqCode, osc.targetFreqCode, alphaQ15_);
        acc += osc.smoothedAmp * lut[osc.phase >> kLutShift];
        osc.phase = static_cast<std::uint16_t>((osc.phase + osc.smoothedFreqCode) & kPhaseMask);
      }
      peakAccumulator_ = std::max<std::int64_t>(peakAccumulator_, acc < 0 ? -std::int64_t{acc} : acc);
      const std::int32_t q15 = (acc + (1 << 14)) >> 15;
      block.duty[c][n] = dutyFromQ15(q15, config_.pwmBitDepth);
    }
    ++sampleClock_;
  }
  return block;
}

PwmStream::PwmStream(std::vector<std::uint16_t> duties, double carrier, int depth,
                     PwmAlignment alignment)
    : duties_(std::move(duties)), carrier_(carrier), depth_(depth), alignment_(alignment) {
  if (!(carrier_ > 0.0)) throw Error(Errc::InvalidArgument, "carrier must be positive");
  if (depth_ < 1 || depth_ > 16) throw Error(Errc::InvalidArgument, "depth 1..16");
}

std::pair<double, double> PwmStream::highFraction(std::size_t k) const {
  const double width = static_cast<double>(duties_.at(k)) / static_cast<double>(1u << depth_);
  if (alignment_ == PwmAlignment::LeadingEdge) return {0.0, width};
  const double start = (1.0 - width) / 2.0;
  return {start, start + width};
}

std::pair<double, double> PwmStream::highInterval(std::size_t k) const {
  const auto [a, b] = highFraction(k);
  const double period = 1.0 / carrier_;
  const double base = static_cast<double>(k) * period;
  return {base + a * period, base + b * period};
}

int PwmStream::level(double t) const {
  if (t < 0.0) return 0;
  const double pos = t * carrier_;
  const auto k = static_cast<std::size_t>(pos);
  if (k >= duties_.size()) return 0;
  const double frac = pos - static_cast<double>(k);
  const auto [a, b] = highFraction(k);
  return (frac >= a && frac < b) ? 1 : 0;
}

double PwmStream::periodMean(std::size_t k) const {
  const auto [a, b] = highFraction(k);
  return b - a;
}

std::vector<double> PwmStream::rasterize(int oversample) const {
  if (oversample < 1) throw Error(Errc::InvalidArgument, "oversample must be >= 1");
  std::vector<double> out(duties_.size() * static_cast<std::size_t>(oversample));
  const double os = oversample;
  for (std::size_t k = 0; k < duties_.size(); ++k) {
    const auto [a, b] = highFraction(k);
    const double lo = a * os;
    const double hi = b * os;
    double* row = out.data() + k * static_cast<std::size_t>(oversample);
    for (int j = 0; j < oversample; ++j) {
      const double overlap = std::min(hi, j + 1.0) - std::max(lo, static_cast<double>(j));
      row[j] = std::clamp(overlap, 0.0, 1.0);
    }
  }
  return out;
}

PwmStream pwmEdgeStream(std::span<const std::uint16_t> duties, double carrier, int depth,
                        PwmAlignment alignment) {
  return PwmStream(std::vector<std::uint16_t>(duties.begin(), duties.end()), carrier, depth,
                   alignment);
}

void writeDutyCsv(std::ostream& out, const RenderedBlock& block, double samplingRate) {
  out << "time_s,channel,duty\n";
  const std::size_t n = block.duty[0].size();
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(block.firstSample + i) / samplingRate;
    for (std::size_t c = 0; c < block.duty.size(); ++c) {
      out << t << ',' << c << ',' << block.duty[c][i] << '\n';
    }
  }
}

void writeRawSamples(std::ostream& out, std::span<const std::uint16_t> samples) {
  for (std::uint16_t s : samples) {
    const char bytes[2] = {static_cast<char>(s & 0xFF), static_cast<char>(s >> 8)};
    out.write(bytes, 2);
  }
}

std::vector<std::uint16_t> readRawSamples(std::istream& in) {
  std::vector<std::uint16_t> samples;
  char bytes[2];
  while (in.read(bytes, 2)) {
    samples.push_back(static_cast<std::uint16_t>(static_cast<std::uint8_t>(bytes[0]) |
                                                 (static_cast<std::uint8_t>(bytes[1]) << 8)));
  }
  return samples;
}

}  // namespace tactwin::siggen
