#pragma once

// THD+N by nonlinear sine fitting, and the transfer-loop latency harness.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tactwin/interconnect.hpp"

namespace tactwin::metrology {

inline constexpr double kDefaultDt = 5e-6;
inline constexpr std::size_t kMinSamples = 64;

struct SampledSignal {
  std::vector<double> samples;
  double dt = kDefaultDt;

  /// Throws InsufficientData or InvalidArgument.
  void validate() const;
  double nyquist() const { return 0.5 / dt; }
};

/// Model A sin(2 pi f i dt + phi).
struct SineFit {
  double A = 0.0;
  double f = 0.0;
  double phi = 0.0;
  double residualPower = 0.0;  // cost / N
  bool converged = false;
  int iterations = 0;
};

double sineCost(const SampledSignal& sig, double A, double f, double phi);

/// The hint must be within 20% of the fundamental. The search for the
/// starting frequency is restricted to that window.
SineFit fitSine(const SampledSignal& sig, double f0Hint);
/// Starting frequency from the global spectral peak.
SineFit fitSine(const SampledSignal& sig);

std::vector<double> residual(const SampledSignal& sig, const SineFit& fit);

/// Amplitude: 100/A sqrt(sum r^2 / N). Rms: same with A/sqrt(2) in the
/// denominator.
enum class Normalization { Amplitude, Rms };

/// Full band, time-domain sum.
double thdnPercent(const SampledSignal& sig, const SineFit& fit,
                   Normalization norm = Normalization::Amplitude);

/// Residual with every DFT bin above bandHz zeroed. Throws BandAboveNyquist.
std::vector<double> bandLimitedResidual(const SampledSignal& sig, const SineFit& fit, double bandHz);

/// THD+N per band edge; an empty optional means full band. Computed from one
/// residual spectrum as nested partial sums, so narrower bands never report
/// more than wider ones. Throws BandAboveNyquist and NoConvergence.
std::vector<double> thdnBands(const SampledSignal& sig, const SineFit& fit,
                              std::span<const std::optional<double>> bandsHz,
                              Normalization norm = Normalization::Amplitude);

struct ThdnReport {
  double targetFreq = 0.0;
  double measuredFreq = 0.0;
  double thdnFull = 0.0;
  double thdn20k = 0.0;
  double thdn1k = 0.0;
  SineFit fit;
};

ThdnReport analyze(const SampledSignal& sig, double targetFreq,
                   Normalization norm = Normalization::Amplitude);
nlohmann::json toJson(const ThdnReport& report);

/// Parses "1k", "20k", "full", "1M"; a band at or above Nyquist maps to full.
struct BandSpec {
  std::string label;
  std::optional<double> edgeHz;
  bool mappedToFull = false;
};
std::vector<BandSpec> parseBands(const std::string& list, double nyquist);

enum class SendMode { Sequential, Broadcast };

struct LoopStats {
  std::size_t iterations = 0;
  std::size_t boards = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Repeats the staging loop (one table per enumerated unit) and timestamps
/// each iteration on the simulated bus clock.
LoopStats measureTransferLoop(interconnect::Bus& bus,
                              std::span<const wiretab::EncodedTable> tablesPerBoard, double clock,
                              std::size_t iterations = 500,
                              SendMode mode = SendMode::Sequential);

}  // namespace tactwin::metrology
