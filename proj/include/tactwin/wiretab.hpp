#pragma once

// Frequency-table data model and its 160-byte wire package.
//
// Package layout (little-endian), channels concatenated in order:
//
//   channel c, tone k:  offset = 40*c + 4*k
//     u16 frequency code  = floor(f / Fs * 2^15)
//     u16 amplitude code  = round(a * 32767)

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include <json.hpp>

namespace tactwin::wiretab {

inline constexpr std::size_t kChannels = 4;
inline constexpr std::size_t kTonesPerChannel = 10;
inline constexpr std::size_t kBytesPerTone = 4;
inline constexpr std::size_t kBytesPerChannel = kTonesPerChannel * kBytesPerTone;
inline constexpr std::size_t kPackageSize = kChannels * kBytesPerChannel;
inline constexpr std::uint32_t kPhaseRange = 1u << 15;
inline constexpr std::int32_t kAmplitudeFullScale = 32767;
inline constexpr double kDefaultSamplingRate = 25000.0;

static_assert(kPackageSize == 160);

struct Tone {
  double frequency = 0.0;  // Hz
  double amplitude = 0.0;  // fraction of full scale, [0, 1]

  friend bool operator==(const Tone&, const Tone&) = default;
};

using ChannelTable = std::array<Tone, kTonesPerChannel>;

struct FrequencyTable {
  std::array<ChannelTable, kChannels> channels{};

  Tone& at(std::size_t channel, std::size_t tone) { return channels.at(channel).at(tone); }
  const Tone& at(std::size_t channel, std::size_t tone) const {
    return channels.at(channel).at(tone);
  }

  friend bool operator==(const FrequencyTable&, const FrequencyTable&) = default;
};

struct EncodedTable {
  std::array<std::uint8_t, kPackageSize> bytes{};

  friend bool operator==(const EncodedTable&, const EncodedTable&) = default;
};

/// Integer codes of one tone as they travel on the wire.
struct ToneCode {
  std::uint16_t frequency = 0;
  std::uint16_t amplitude = 0;

  friend bool operator==(const ToneCode&, const ToneCode&) = default;
};

using CodeTable = std::array<std::array<ToneCode, kTonesPerChannel>, kChannels>;

/// Realizable frequency step for a given sampling rate, Fs / 2^15.
double frequencyStep(double samplingRate);

std::uint16_t frequencyCode(double frequency, double samplingRate);
std::uint16_t amplitudeCode(double amplitude);

/// Frequency actually produced by the generator for a requested one.
double quantizedFrequency(double frequency, double samplingRate);

/// Throws FrequencyOutOfRange, AmplitudeOutOfRange or AmplitudeOverflow.
void validate(const FrequencyTable& table, double samplingRate);

EncodedTable encode(const FrequencyTable& table, double samplingRate);
FrequencyTable decode(std::span<const std::uint8_t> package, double samplingRate);
inline FrequencyTable decode(const EncodedTable& package, double samplingRate) {
  return decode(std::span<const std::uint8_t>(package.bytes), samplingRate);
}

CodeTable unpackCodes(const EncodedTable& package);
EncodedTable packCodes(const CodeTable& codes);

nlohmann::json toJson(const FrequencyTable& table);
FrequencyTable fromJson(const nlohmann::json& json);

}  // namespace tactwin::wiretab
