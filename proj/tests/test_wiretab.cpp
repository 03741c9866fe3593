#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "tactwin/error.hpp"
#include "tactwin/wiretab.hpp"

using namespace tactwin;
using namespace tactwin::wiretab;
using Catch::Approx;

namespace {

FrequencyTable randomTable(std::mt19937_64& rng, double rate) {
  std::uniform_real_distribution<double> freq(0.0, rate / 2.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  FrequencyTable t;
  for (auto& ch : t.channels) {
    // Random weights normalized to a random total at most 1.
    std::array<double, kTonesPerChannel> w{};
    double sum = 0.0;
    for (auto& x : w) sum += (x = unit(rng));
    const double total = unit(rng);
    for (std::size_t k = 0; k < kTonesPerChannel; ++k) {
      ch[k] = {freq(rng), w[k] / sum * total * (1.0 - 1e-9)};
    }
  }
  return t;
}

std::uint16_t le16(const EncodedTable& p, std::size_t at) {
  return static_cast<std::uint16_t>(p.bytes[at] | (p.bytes[at + 1] << 8));
}

}  // namespace

TEST_CASE("zero table encodes to 160 zero bytes and back") {
  const FrequencyTable zero;
  const auto pkg = encode(zero, 25000.0);
  REQUIRE(pkg.bytes.size() == 160);
  for (auto b : pkg.bytes) REQUIRE(b == 0);
  REQUIRE(decode(pkg, 25000.0) == zero);
}

TEST_CASE("250 Hz at 0.9 produces the hand-computed codes") {
  // floor(250 / 25000 * 32768) = floor(327.68); round(0.9 * 32767) = round(29490.3)
  FrequencyTable t;
  t.at(0, 0) = {250.0, 0.9};
  const auto pkg = encode(t, 25000.0);
  CHECK(le16(pkg, 0) == 327);
  CHECK(le16(pkg, 2) == 29490);
  CHECK(pkg.bytes[0] == 0x47);
  CHECK(pkg.bytes[1] == 0x01);
  CHECK(pkg.bytes[2] == 0x32);
  CHECK(pkg.bytes[3] == 0x73);
}

TEST_CASE("tone position in the package") {
  FrequencyTable t;
  t.at(2, 7) = {1000.0, 0.25};
  const auto pkg = encode(t, 25000.0);
  CHECK(le16(pkg, 40 * 2 + 4 * 7) == 1310);      // floor(1310.72)
  CHECK(le16(pkg, 40 * 2 + 4 * 7 + 2) == 8192);  // round(8191.75)
  for (std::size_t i = 0; i < pkg.bytes.size(); ++i) {
    if (i >= 40 * 2 + 4 * 7 && i < 40 * 2 + 4 * 7 + 4) continue;
    REQUIRE(pkg.bytes[i] == 0);
  }
}

TEST_CASE("quantized frequencies sit on the Fs/2^15 grid") {
  const double q = 25000.0 / 32768.0;
  CHECK(quantizedFrequency(0.0, 25000.0) == 0.0);
  CHECK(frequencyCode(10.0, 25000.0) == 13);
  CHECK(quantizedFrequency(10.0, 25000.0) == Approx(13 * q).epsilon(1e-15));
  CHECK(quantizedFrequency(10.0, 25000.0) == Approx(9.918).margin(5e-4));
  CHECK(frequencyCode(125.0, 25000.0) == 163);
  CHECK(quantizedFrequency(125.0, 25000.0) == Approx(124.36).margin(5e-3));
  CHECK(std::abs(quantizedFrequency(750.0, 25000.0) - 749.90) < 0.07 + 1e-9);
  // Decoding code 655 gives the 500 Hz row.
  CodeTable codes{};
  codes[0][0] = {655, 32767};
  const auto t = decode(packCodes(codes), 25000.0);
  CHECK(t.at(0, 0).frequency == Approx(499.725).margin(1e-3));
  CHECK(t.at(0, 0).amplitude == 1.0);
}

TEST_CASE("exact grid points are not truncated one step down") {
  const double q = 25000.0 / 32768.0;
  for (int code : {1, 3, 327, 655, 16383}) {
    CHECK(frequencyCode(code * q, 25000.0) == code);
  }
  CHECK(frequencyCode(12500.0, 25000.0) == 16384);
}

TEST_CASE("round trip stays within one quantization step") {
  std::mt19937_64 rng(20240611);
  for (double rate : {25000.0, 20000.0, 10000.0}) {
    const double q = frequencyStep(rate);
    for (int trial = 0; trial < 200; ++trial) {
      const auto t = randomTable(rng, rate);
      const auto pkg = encode(t, rate);
      const auto back = decode(pkg, rate);
      for (std::size_t c = 0; c < kChannels; ++c) {
        for (std::size_t k = 0; k < kTonesPerChannel; ++k) {
          const auto& a = t.at(c, k);
          const auto& b = back.at(c, k);
          REQUIRE(b.frequency <= a.frequency + 1e-9);
          REQUIRE(a.frequency - b.frequency < q);
          REQUIRE(std::abs(a.amplitude - b.amplitude) <= 1.0 / 65534.0 + 1e-15);
        }
      }
      // decode . encode . decode == decode
      REQUIRE(decode(encode(back, rate), rate) == back);
    }
  }
}

TEST_CASE("codes are monotone in both fields") {
  std::uint16_t last = 0;
  for (double f = 0.0; f <= 12500.0; f += 0.37) {
    const auto c = frequencyCode(f, 25000.0);
    REQUIRE(c >= last);
    last = c;
  }
  last = 0;
  for (double a = 0.0; a <= 1.0; a += 1e-4) {
    const auto c = amplitudeCode(a);
    REQUIRE(c >= last);
    last = c;
  }
}

TEST_CASE("encode rejects invalid tables") {
  FrequencyTable t;
  t.at(1, 0) = {100.0, 0.6};
  t.at(1, 1) = {200.0, 0.5};
  CHECK_THROWS_MATCHES(encode(t, 25000.0), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Errc::AmplitudeOverflow;
                       }));

  FrequencyTable hi;
  hi.at(0, 0) = {12500.1, 0.5};
  CHECK_THROWS_AS(encode(hi, 25000.0), Error);
  try {
    encode(hi, 25000.0);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::FrequencyOutOfRange);
  }
  FrequencyTable neg;
  neg.at(0, 0) = {100.0, -0.1};
  try {
    encode(neg, 25000.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::AmplitudeOutOfRange);
  }
  // Sum exactly 1 is allowed.
  FrequencyTable full;
  for (std::size_t k = 0; k < 4; ++k) full.at(0, k) = {100.0 * (k + 1), 0.25};
  CHECK_NOTHROW(encode(full, 25000.0));
}

TEST_CASE("decode needs exactly 160 bytes") {
  std::vector<std::uint8_t> shortPkg(159, 0);
  try {
    decode(shortPkg, 25000.0);
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::LengthMismatch);
  }
}

TEST_CASE("json fixture round trip") {
  std::mt19937_64 rng(3);
  const auto t = randomTable(rng, 25000.0);
  CHECK(fromJson(toJson(t)) == t);
}
