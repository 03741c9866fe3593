#include "tactwin/wiretab.hpp"

#include <cmath>
#include <sstream>

#include "tactwin/error.hpp"

namespace tactwin::wiretab {
namespace {

// Slack for floor() so that re-encoding a decoded frequency lands on the same
// code despite the rounding of code*Fs/2^15.
constexpr double kCodeSlack = 1e-9;
constexpr double kSumSlack = 1e-12;

void putU16(std::uint8_t* dst, std::uint16_t v) {
  dst[0] = static_cast<std::uint8_t>(v & 0xFF);
  dst[1] = static_cast<std::uint8_t>(v >> 8);
}

std::uint16_t getU16(const std::uint8_t* src) {
  return static_cast<std::uint16_t>(src[0] | (src[1] << 8));
}

void requireRate(double samplingRate) {
  if (!(samplingRate > 0.0) || !std::isfinite(samplingRate)) {
    throw Error(Errc::InvalidArgument, "sampling rate must be positive");
  }
}

}  // namespace

double frequencyStep(double samplingRate) {
  requireRate(samplingRate);
  return samplingRate / static_cast<double>(kPhaseRange);
}

std::uint16_t frequencyCode(double frequency, double samplingRate) {
  requireRate(samplingRate);
  if (!(frequency >= 0.0) || frequency > samplingRate / 2.0) {
    std::ostringstream msg;
    msg << "frequency " << frequency << " Hz outside [0, " << samplingRate / 2.0 << "]";
    throw Error(Errc::FrequencyOutOfRange, msg.str());
  }
  const double scaled = frequency * static_cast<double>(kPhaseRange) / samplingRate;
  return static_cast<std::uint16_t>(std::floor(scaled + kCodeSlack));
}

std::uint16_t amplitudeCode(double amplitude) {
  if (!(amplitude >= 0.0) || amplitude > 1.0) {
    throw Error(Errc::AmplitudeOutOfRange,
                "amplitude " + std::to_string(amplitude) + " outside [0, 1]");
  }
  return static_cast<std::uint16_t>(std::lround(amplitude * kAmplitudeFullScale));
}

double quantizedFrequency(double frequency, double samplingRate) {
  return frequencyCode(frequency, samplingRate) * frequencyStep(samplingRate);
}

void validate(const FrequencyTable& table, double samplingRate) {
  for (std::size_t c = 0; c < kChannels; ++c) {
    double sum = 0.0;
    for (const Tone& tone : table.channels[c]) {
      frequencyCode(tone.frequency, samplingRate);
      amplitudeCode(tone.amplitude);
      sum += tone.amplitude;
    }
    if (sum > 1.0 + kSumSlack) {
      std::ostringstream msg;
      msg << "channel " << c << " amplitude sum " << sum << " exceeds 1";
      throw Error(Errc::AmplitudeOverflow, msg.str());
    }
  }
}

EncodedTable encode(const FrequencyTable& table, double samplingRate) {
  validate(table, samplingRate);
  CodeTable codes{};
  for (std::size_t c = 0; c < kChannels; ++c) {
    for (std::size_t k = 0; k < kTonesPerChannel; ++k) {
      const Tone& tone = table.channels[c][k];
      codes[c][k] = {frequencyCode(tone.frequency, samplingRate), amplitudeCode(tone.amplitude)};
    }
  }
  return packCodes(codes);
}

FrequencyTable decode(std::span<const std::uint8_t> package, double samplingRate) {
  if (package.size() != kPackageSize) {
    throw Error(Errc::LengthMismatch, "expected " + std::to_string(kPackageSize) +
                                          " bytes, got " + std::to_string(package.size()));
  }
  const double step = frequencyStep(samplingRate);
  EncodedTable pkg;
  std::copy(package.begin(), package.end(), pkg.bytes.begin());
  const CodeTable codes = unpackCodes(pkg);
  FrequencyTable table;
  for (std::size_t c = 0; c < kChannels; ++c) {
    for (std::size_t k = 0; k < kTonesPerChannel; ++k) {
      table.channels[c][k].frequency = codes[c][k].frequency * step;
      table.channels[c][k].amplitude =
          static_cast<double>(codes[c][k].amplitude) / kAmplitudeFullScale;
    }
  }
  return table;
}

CodeTable unpackCodes(const EncodedTable& package) {
  CodeTable codes{};
  for (std::size_t c = 0; c < kChannels; ++c) {
    for (std::size_t k = 0; k < kTonesPerChannel; ++k) {
      const std::uint8_t* p = package.bytes.data() + c * kBytesPerChannel + k * kBytesPerTone;
      codes[c][k] = {getU16(p), getU16(p + 2)};
    }
  }
  return codes;
}

EncodedTable packCodes(const CodeTable& codes) {
  EncodedTable pkg;
  for (std::size_t c = 0; c < kChannels; ++c) {
    for (std::size_t k = 0; k < kTonesPerChannel; ++k) {
      std::uint8_t* p = pkg.bytes.data() + c * kBytesPerChannel + k * kBytesPerTone;
      putU16(p, codes[c][k].frequency);
      putU16(p + 2, codes[c][k].amplitude);
    }
  }
  return pkg;
}

nlohmann::json toJson(const FrequencyTable& table) {
  nlohmann::json channels = nlohmann::json::array();
  for (const ChannelTable& ch : table.channels) {
    nlohmann::json tones = nlohmann::json::array();
    for (const Tone& tone : ch) {
      tones.push_back({{"frequency", tone.frequency}, {"amplitude", tone.amplitude}});
    }
    channels.push_back(std::move(tones));
  }
  return {{"channels", std::move(channels)}};
}

FrequencyTable fromJson(const nlohmann::json& json) {
  FrequencyTable table;
  const auto& channels = json.at("channels");
  if (channels.size() > kChannels) {
    throw Error(Errc::InvalidArgument, "at most 4 channels per table");
  }
  for (std::size_t c = 0; c < channels.size(); ++c) {
    const auto& tones = channels[c];
    if (tones.size() > kTonesPerChannel) {
      throw Error(Errc::InvalidArgument, "at most 10 tones per channel");
    }
    for (std::size_t k = 0; k < tones.size(); ++k) {
      table.channels[c][k].frequency = tones[k].value("frequency", 0.0);
      table.channels[c][k].amplitude = tones[k].value("amplitude", 0.0);
    }
  }
  return table;
}

}  // namespace tactwin::wiretab
