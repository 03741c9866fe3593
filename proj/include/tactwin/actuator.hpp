#pragma once

// Clamped piezoelectric bimorph on a compliant Kelvin-Voigt bearing.
//
// The free length is one uniform Euler-Bernoulli segment solved with the
// harmonic transfer matrix in Krylov functions. State vector along the beam:
// [w, w', m = EI w'', q = EI w''']. The piezo layers act as a uniform
// internal moment M_p = momentPerVolt * V, which shows up at both ends. At
// the clamp, m(0) = M_p + kr* w'(0) and q(0) = -kt* w(0) with complex
// stiffnesses k* = k + j omega d. At the tip, m(L) = M_p and q(L) equals the
// load's dynamic stiffness times w(L).

#include <array>
#include <complex>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace tactwin::actuator {

struct BimorphGeometry {
  double length = 1.068645195439873e-2;        // free length, m
  double width = 10e-3;                        // m
  double piezoThickness = 1.8014288585001777e-3;  // each of the two layers, m
  double shimThickness = 0.1e-3;               // m
  double piezoModulus = 60e9;                  // Pa
  double shimModulus = 100e9;                  // Pa
  double piezoDensity = 7800.0;                // kg/m^3
  double shimDensity = 8500.0;                 // kg/m^3
  double d31 = 7.778563531031626e-8;           // effective coupling, m/V
  double lossFactor = 0.02;                    // structural damping eta
  double capacitance = 120e-9;                 // F

  void validate() const;
  /// Bending stiffness from the three-layer lamination, N m^2.
  double bendingStiffness() const;
  /// Mass per unit length, kg/m.
  double massPerLength() const;
  /// Internal bending moment per volt, N m / V.
  double momentPerVolt() const;
};

/// Units: N/m, Ns/m, Nm/rad, Nms/rad.
struct BearingParams {
  double kt = 8870.0;
  double dt = 3.62;
  double kr = 0.54;
  double dr = 1.02e-5;

  static BearingParams published() { return {}; }
  std::array<double, 4> asArray() const { return {kt, dt, kr, dr}; }
  static BearingParams fromArray(const std::array<double, 4>& a) { return {a[0], a[1], a[2], a[3]}; }
  void validate() const;
  friend bool operator==(const BearingParams&, const BearingParams&) = default;
};

enum class LoadLabel { None, LowerImpedance, UpperImpedance };
std::string_view to_string(LoadLabel label) noexcept;

struct MaxwellBranch {
  double stiffness = 0.0;  // N/m
  double damping = 0.0;    // Ns/m
};

/// Generalized Maxwell fingerpad: a parallel spring plus spring-damper
/// branches in series.
struct MaxwellLoad {
  double parallelStiffness = 0.0;
  std::vector<MaxwellBranch> branches;
  LoadLabel label = LoadLabel::None;

  static MaxwellLoad none() { return {}; }
  void validate() const;
  /// Force per displacement, N/m.
  std::complex<double> dynamicStiffness(double omega) const;
  /// Force per velocity, Ns/m.
  std::complex<double> impedance(double omega) const;
  MaxwellLoad scaled(double factor, LoadLabel newLabel) const;
};

/// Complex tip deflection, m. Throws SingularBoundary.
std::complex<double> tipDeflection(const BimorphGeometry& geom, const BearingParams& bearing,
                                   const MaxwellLoad& load, double f, double volts);
/// |tip deflection|, m.
double tipResponse(const BimorphGeometry& geom, const BearingParams& bearing,
                   const MaxwellLoad& load, double f, double volts);

/// First root of the undamped boundary determinant (loss factor, dampers and
/// load ignored). Throws NoConvergence when no root is found below fMax.
double firstResonance(const BimorphGeometry& geom, const BearingParams& bearing,
                      double fMax = 1e6);

/// Closed-form first resonance of the same beam with an ideal clamp.
double rigidCantileverResonance(const BimorphGeometry& geom);

struct FrequencyResponse {
  std::vector<double> f;          // Hz, strictly increasing
  std::vector<double> amplitude;  // m
  double voltage = 20.0;          // V
};

FrequencyResponse simulateResponse(const BimorphGeometry& geom, const BearingParams& bearing,
                                   const MaxwellLoad& load, std::span<const double> f,
                                   double volts);

/// CSV columns f_Hz, amplitude_um, voltage_V. Rows at other voltages are
/// rescaled to the first row's voltage.
FrequencyResponse readResponseCsv(std::istream& in);
void writeResponseCsv(std::ostream& out, const FrequencyResponse& response);

enum class FitWeighting { Absolute, Relative };

struct FitOptions {
  int starts = 5;
  /// Start i scales every component of center by spread^(2i/(starts-1) - 1).
  double spread = 10.0;
  BearingParams center = BearingParams::published();
  FitWeighting weighting = FitWeighting::Absolute;
  int maxIterations = 200;
  bool parallel = true;
  MaxwellLoad load = MaxwellLoad::none();
};

struct BearingFit {
  BearingParams params;
  double residual = 0.0;  // sum of squared (weighted) residuals
  double rmsRelative = 0.0;
  bool converged = false;
  int iterations = 0;
  int startIndex = 0;
};

/// Least squares over log-parameters, multi-start. Throws InsufficientData
/// (fewer than 8 points, or the amplitude peak on the edge of the range) and
/// NoConvergence.
BearingFit fitBearing(const BimorphGeometry& geom, const FrequencyResponse& measured,
                      const FitOptions& options = {});

double fitResidual(const BimorphGeometry& geom, const FrequencyResponse& measured,
                   const BearingParams& params, const FitOptions& options = {});

/// Componentwise median, lower median for even counts. Throws EmptyInput.
BearingParams medianParams(std::span<const BearingParams> fits);

struct Band {
  double lo;
  double hi;
};
inline constexpr std::array<Band, 3> kTableBands{{{1.0, 50.0}, {50.0, 300.0}, {300.0, 1000.0}}};

struct AmplitudeRow {
  double voltage = 0.0;
  LoadLabel load = LoadLabel::None;
  std::array<double, 3> amplitude{};  // m, band maxima
};

/// Band maxima over 1 Hz sweeps simulated at simVolts, then scaled linearly.
std::vector<AmplitudeRow> amplitudeTable(const BimorphGeometry& geom, const BearingParams& bearing,
                                         std::span<const MaxwellLoad> loads,
                                         std::span<const double> voltages, double simVolts = 20.0);
void writeAmplitudeCsv(std::ostream& out, std::span<const AmplitudeRow> rows);

struct DisplayConfig {
  BimorphGeometry geometry;
  BearingParams bearing;
  MaxwellLoad lowerImpedance;
  MaxwellLoad upperImpedance;
};

DisplayConfig defaultDisplayConfig();
/// Missing keys keep their defaults.
DisplayConfig displayConfigFromJson(const nlohmann::json& json);
nlohmann::json toJson(const DisplayConfig& config);
DisplayConfig loadDisplayConfig(const std::string& path);

nlohmann::json toJson(const BearingFit& fit);

}  // namespace tactwin::actuator
