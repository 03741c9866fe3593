#pragma once

// Output-stage models: unity-gain Sallen-Key low-pass (ASG) and the
// symmetric RLC low-pass of the H-bridge driving a capacitive piezo (HVA).

#include <complex>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

namespace tactwin::analog {

/// H(s) = sum num[k] s^k / sum den[k] s^k, coefficients in ascending order.
class RationalTransferFunction {
 public:
  RationalTransferFunction(std::vector<double> numerator, std::vector<double> denominator);

  const std::vector<double>& numerator() const noexcept { return num_; }
  const std::vector<double>& denominator() const noexcept { return den_; }
  int order() const noexcept { return static_cast<int>(den_.size()) - 1; }

  std::complex<double> at(std::complex<double> s) const;
  std::complex<double> response(double hz) const;
  double magnitude(double hz) const { return std::abs(response(hz)); }
  /// Degrees, continuous in frequency (unwrapped from DC).
  double phaseDeg(double hz) const;

  std::vector<std::complex<double>> poles() const;
  bool stable() const;
  /// Natural frequency (a0/an)^(1/n) / 2pi; 0 for a constant denominator.
  double naturalFrequency() const;

 private:
  std::vector<double> num_;
  std::vector<double> den_;
};

struct Evaluation {
  double magnitude;
  double phaseDeg;
};
Evaluation evaluate(const RationalTransferFunction& tf, double hz);

/// Bilinear transform, prewarped at `prewarpHz` (default: the natural
/// frequency, skipped when it is at or above Nyquist). Zero initial state.
/// Throws UnstableFilter.
std::vector<double> applyToSamples(const RationalTransferFunction& tf, std::span<const double> x,
                                   double dt, std::optional<double> prewarpHz = std::nullopt);

struct SallenKeySpec {
  double C1 = 15e-9;
  double C2 = 10e-9;
  double R = 10e3;

  double f0() const;
  double Q() const;
};

SallenKeySpec sallenKeyDesign(double fc, double C1 = 15e-9, double C2 = 10e-9);
RationalTransferFunction sallenKeyTf(const SallenKeySpec& spec);

struct HBridgeFilterSpec {
  double L = 0.1;
  double R_L = 90.0;
  double R_d = 0.0;
  double C_p = 120e-9;
  double V_DD = 200.0;

  double f0() const;
  double Q() const;
};

/// L = 1 / (2 C_p (2 pi fc)^2).
double hbridgeInductance(double fc, double C_p);

struct Damping {
  double R_d;
  bool clamped;  // requested Q needs less than R_L of total resistance
};
Damping dampingFor(double Q, double L, double C_p, double R_L);

RationalTransferFunction hbridgeTf(const HBridgeFilterSpec& spec);

void writeBodeCsv(std::ostream& out, const RationalTransferFunction& tf, double fLo, double fHi,
                  int points);

struct DesignFilterInputs {
  double sallenKeyCutoff = 1300.0;
  double C1 = 15e-9;
  double C2 = 10e-9;
  double hbridgeCutoff = 1000.0;
  double C_p = 120e-9;
  double Q = 0.6;
  double R_L = 90.0;
  /// Inductor actually fitted; the estimate is rounded to a stock value.
  double inductorUsed = 0.1;
  /// Inductance used for the H-bridge phase table at phaseFrequency.
  double phaseCheckInductance = 13.95e-3;
  double phaseFrequency = 1000.0;
};

nlohmann::json designFilter(const DesignFilterInputs& in);

}  // namespace tactwin::analog
