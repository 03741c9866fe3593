#pragma once

// ASG signal chain: generator duty stream -> PWM -> Sallen-Key -> samples
// the THD+N analyzer can take.

#include <cstdint>
#include <span>
#include <vector>

#include "tactwin/metrology.hpp"
#include "tactwin/siggen.hpp"

namespace tactwin::pipeline {

struct AsgChain {
  double samplingRate = 25000.0;  // PWM carrier equals the sample clock
  int pwmDepth = 12;
  siggen::PwmAlignment alignment = siggen::PwmAlignment::Centered;
  int oversample = 64;   // raster points per carrier period
  int decimation = 8;    // 25 kHz * 64 / 8 -> 5 us output spacing
  double cutoff = 1300.0;
  double C1 = 15e-9;
  double C2 = 10e-9;
  std::size_t warmup = 2500;  // generator samples discarded ahead of the record
  std::size_t record = 32768; // output samples kept

  double outputDt() const { return static_cast<double>(decimation) / (samplingRate * oversample); }
};

/// Filtered analog output of a duty stream, with the 0.5 mid-scale removed.
/// The first `skip` carrier periods are dropped after filtering.
metrology::SampledSignal asgOutput(std::span<const std::uint16_t> duties, const AsgChain& chain,
                                   std::size_t skip = 0);

/// Duty values for one channel of a fresh generator playing a single tone.
std::vector<std::uint16_t> renderTone(double frequency, double amplitude, const AsgChain& chain,
                                      double smoothingAlpha = 0.05);

struct ToneResult {
  double target = 0.0;
  double quantized = 0.0;
  metrology::ThdnReport report;
};

/// Full emulation of one target tone through the ASG chain.
ToneResult measureTone(double frequency, double amplitude, const AsgChain& chain = {});

}  // namespace tactwin::pipeline
