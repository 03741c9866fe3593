#include "tactwin/pipeline.hpp"

#include "tactwin/analog.hpp"
#include "tactwin/error.hpp"
#include "tactwin/wiretab.hpp"

namespace tactwin::pipeline {

metrology::SampledSignal asgOutput(std::span<const std::uint16_t> duties, const AsgChain& chain,
                                   std::size_t skip) {
  if (chain.oversample < 1 || chain.decimation < 1 || chain.oversample % chain.decimation != 0) {
    throw Error(Errc::InvalidArgument, "oversample must be a positive multiple of decimation");
  }
  if (skip >= duties.size()) throw Error(Errc::InsufficientData, "nothing left after warm-up");

  const siggen::PwmStream pwm(std::vector<std::uint16_t>(duties.begin(), duties.end()),
                              chain.samplingRate, chain.pwmDepth, chain.alignment);
  const auto raster = pwm.rasterize(chain.oversample);
  const double dtFine = 1.0 / (chain.samplingRate * chain.oversample);
  const auto tf = analog::sallenKeyTf(analog::sallenKeyDesign(chain.cutoff, chain.C1, chain.C2));
  const auto filtered = analog::applyToSamples(tf, raster, dtFine);

  metrology::SampledSignal out;
  out.dt = chain.outputDt();
  const std::size_t first = skip * static_cast<std::size_t>(chain.oversample);
  out.samples.reserve((filtered.size() - first) / static_cast<std::size_t>(chain.decimation) + 1);
  for (std::size_t i = first; i < filtered.size(); i += static_cast<std::size_t>(chain.decimation)) {
    out.samples.push_back(filtered[i] - 0.5);
  }
  return out;
}

std::vector<std::uint16_t> renderTone(double frequency, double amplitude, const AsgChain& chain,
                                      double smoothingAlpha) {
  siggen::GeneratorMachine unit;
  unit.applyCommand(siggen::cmd::AssignAddress{0});
  unit.applyCommand(siggen::cmd::SetSamplingRate{chain.samplingRate});
  unit.applyCommand(siggen::cmd::SetPwmDepth{chain.pwmDepth});
  unit.applyCommand(siggen::cmd::SetSmoothing{smoothingAlpha});
  if (unit.applyCommand(siggen::cmd::Start{}) != siggen::RunLevel::Running) {
    throw Error(Errc::InvalidArgument, "generator failed its timing check");
  }
  wiretab::FrequencyTable table;
  table.at(0, 0) = {frequency, amplitude};
  unit.stageTable(wiretab::encode(table, chain.samplingRate));

  const auto periods = static_cast<std::size_t>(
      static_cast<double>(chain.record * static_cast<std::size_t>(chain.decimation)) / chain.oversample + 0.5);
  auto block = unit.renderSamples(chain.warmup + periods);
  return std::move(block.duty[0]);
}

ToneResult measureTone(double frequency, double amplitude, const AsgChain& chain) {
  const auto duties = renderTone(frequency, amplitude, chain);
  const auto sig = asgOutput(duties, chain, chain.warmup);
  ToneResult r;
  r.target = frequency;
  r.quantized = wiretab::quantizedFrequency(frequency, chain.samplingRate);
  // A target that quantizes to DC has no fundamental to fit.
  r.report = metrology::analyze(sig, r.quantized > 0.0 ? r.quantized : frequency);
  r.report.targetFreq = frequency;
  return r;
}

}  // namespace tactwin::pipeline
