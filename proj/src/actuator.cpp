#include "tactwin/actuator.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "tactwin/error.hpp"

namespace tactwin::actuator {
namespace {

using cd = std::complex<double>;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
// First root of 1 + cos(x) cosh(x) = 0.
constexpr double kCantileverRoot = 1.8751040687119611;

struct Section {
  double EI;
  double mu;
  double momentPerVolt;
  double eta;
  double L;
};

Section section(const BimorphGeometry& g) {
  return {g.bendingStiffness(), g.massPerLength(), g.momentPerVolt(), g.lossFactor, g.length};
}

struct Krylov {
  cd S, T, U, V;
};

Krylov krylov(cd u) {
  const cd ch = std::cosh(u), sh = std::sinh(u), c = std::cos(u), s = std::sin(u);
  return {(ch + c) / 2.0, (sh + s) / 2.0, (ch - c) / 2.0, (sh - s) / 2.0};
}

using Mat4 = Eigen::Matrix<cd, 4, 4>;
using Vec4 = Eigen::Matrix<cd, 4, 1>;

// Field transfer matrix of a uniform segment of length L.
Mat4 fieldMatrix(const Section& s, cd EI, double omega) {
  const cd beta = std::pow(s.mu * omega * omega / EI, 0.25);
  const Krylov k = krylov(beta * s.L);
  const cd b2 = beta * beta, b3 = b2 * beta;
  Mat4 T;
  T << k.S, k.T / beta, k.U / (b2 * EI), k.V / (b3 * EI),
       beta * k.V, k.S, k.T / (beta * EI), k.U / (b2 * EI),
       EI * b2 * k.U, EI * beta * k.V, k.S, k.T / beta,
       EI * b3 * k.T, EI * b2 * k.U, beta * k.V, k.S;
  return T;
}

struct BoundarySystem {
  Eigen::Matrix<cd, 4, 2> TA;
  Vec4 Tc;
  Eigen::Matrix2cd B;
  Eigen::Vector2cd rhs;
};

// Clamp state z0 = A [w0, psi0] + c; tip conditions m(L) = M, q(L) = K w(L).
BoundarySystem boundary(const Section& s, cd EI, cd kt, cd kr, cd K, double omega, double M) {
  const Mat4 T = fieldMatrix(s, EI, omega);
  Eigen::Matrix<cd, 4, 2> A;
  A << 1.0, 0.0, 0.0, 1.0, 0.0, kr, -kt, 0.0;
  Vec4 c;
  c << 0.0, 0.0, M, 0.0;
  BoundarySystem sys;
  sys.TA = T * A;
  sys.Tc = T * c;
  sys.B << sys.TA(2, 0), sys.TA(2, 1), sys.TA(3, 0) - K * sys.TA(0, 0), sys.TA(3, 1) - K * sys.TA(0, 1);
  sys.rhs << M - sys.Tc(2), -(sys.Tc(3) - K * sys.Tc(0));
  return sys;
}

void requirePositive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(Errc::InvalidArgument, std::string(what) + " must be positive");
  }
}

}  // namespace

void BimorphGeometry::validate() const {
  requirePositive(length, "length");
  requirePositive(width, "width");
  requirePositive(piezoThickness, "piezo thickness");
  requirePositive(shimThickness, "shim thickness");
  requirePositive(piezoModulus, "piezo modulus");
  requirePositive(shimModulus, "shim modulus");
  requirePositive(piezoDensity, "piezo density");
  requirePositive(shimDensity, "shim density");
  requirePositive(d31, "d31");
  requirePositive(capacitance, "capacitance");
  if (!(lossFactor >= 0.0)) throw Error(Errc::InvalidArgument, "loss factor must be >= 0");
}

double BimorphGeometry::bendingStiffness() const {
  const double hs = shimThickness / 2.0;
  const double h = hs + piezoThickness;
  return width * (piezoModulus * 2.0 * (h * h * h - hs * hs * hs) / 3.0 +
                  shimModulus * 2.0 * hs * hs * hs / 3.0);
}

double BimorphGeometry::massPerLength() const {
  return width * (2.0 * piezoDensity * piezoThickness + shimDensity * shimThickness);
}

double BimorphGeometry::momentPerVolt() const {
  return piezoModulus * d31 * width * (shimThickness + piezoThickness);
}

void BearingParams::validate() const {
  requirePositive(kt, "k_t");
  requirePositive(dt, "d_t");
  requirePositive(kr, "k_r");
  requirePositive(dr, "d_r");
}

std::string_view to_string(LoadLabel label) noexcept {
  switch (label) {
    case LoadLabel::None: return "unloaded";
    case LoadLabel::LowerImpedance: return "lower_impedance";
    case LoadLabel::UpperImpedance: return "upper_impedance";
  }
  return "?";
}

void MaxwellLoad::validate() const {
  if (!(parallelStiffness >= 0.0)) throw Error(Errc::InvalidArgument, "negative load stiffness");
  for (const auto& b : branches) {
    if (!(b.stiffness >= 0.0) || !(b.damping >= 0.0)) {
      throw Error(Errc::InvalidArgument, "negative Maxwell branch parameter");
    }
  }
}

std::complex<double> MaxwellLoad::dynamicStiffness(double omega) const {
  cd K = parallelStiffness;
  for (const auto& b : branches) {
    const cd jwd{0.0, omega * b.damping};
    if (b.stiffness == 0.0 || b.damping == 0.0) continue;  // open branch
    K += b.stiffness * jwd / (b.stiffness + jwd);
  }
  return K;
}

std::complex<double> MaxwellLoad::impedance(double omega) const {
  return dynamicStiffness(omega) / cd{0.0, omega};
}

MaxwellLoad MaxwellLoad::scaled(double factor, LoadLabel newLabel) const {
  MaxwellLoad out = *this;
  out.parallelStiffness *= factor;
  for (auto& b : out.branches) {
    b.stiffness *= factor;
    b.damping *= factor;
  }
  out.label = newLabel;
  return out;
}

std::complex<double> tipDeflection(const BimorphGeometry& geom, const BearingParams& bearing,
                                   const MaxwellLoad& load, double f, double volts) {
  requirePositive(f, "frequency");
  const Section s = section(geom);
  const double omega = kTwoPi * f;
  const cd EI = s.EI * cd{1.0, s.eta};
  const cd kt{bearing.kt, omega * bearing.dt};
  const cd kr{bearing.kr, omega * bearing.dr};
  const double M = s.momentPerVolt * volts;
  const BoundarySystem sys = boundary(s, EI, kt, kr, load.dynamicStiffness(omega), omega, M);
  const cd det = sys.B.determinant();
  const double scale = sys.B.cwiseAbs().rowwise().maxCoeff().prod();
  if (!(std::abs(det) > 1e-13 * scale) || !std::isfinite(std::abs(det))) {
    throw Error(Errc::SingularBoundary, "boundary system is singular at " + std::to_string(f) + " Hz");
  }
  if (M == 0.0) return 0.0;
  const Eigen::Vector2cd x = sys.B.partialPivLu().solve(sys.rhs);
  return sys.TA(0, 0) * x(0) + sys.TA(0, 1) * x(1) + sys.Tc(0);
}

double tipResponse(const BimorphGeometry& geom, const BearingParams& bearing,
                   const MaxwellLoad& load, double f, double volts) {
  return std::abs(tipDeflection(geom, bearing, load, f, volts));
}

double firstResonance(const BimorphGeometry& geom, const BearingParams& bearing, double fMax) {
  const Section s = section(geom);
  auto det = [&](double f) {
    const double omega = kTwoPi * f;
    const BoundarySystem sys = boundary(s, s.EI, bearing.kt, bearing.kr, 0.0, omega, 0.0);
    return sys.B.determinant().real();
  };
  double fLo = 1e-2;
  double dLo = det(fLo);
  const double ratio = 1.005;
  for (double fHi = fLo * ratio; fHi <= fMax; fHi *= ratio) {
    const double dHi = det(fHi);
    if (std::signbit(dHi) != std::signbit(dLo)) {
      double a = fLo, b = fHi, da = dLo;
      for (int i = 0; i < 200 && (b - a) > 1e-13 * b; ++i) {
        const double m = 0.5 * (a + b);
        const double dm = det(m);
        if (std::signbit(dm) == std::signbit(da)) {
          a = m;
          da = dm;
        } else {
          b = m;
        }
      }
      return 0.5 * (a + b);
    }
    fLo = fHi;
    dLo = dHi;
  }
  throw Error(Errc::NoConvergence, "no resonance below fMax");
}

double rigidCantileverResonance(const BimorphGeometry& geom) {
  const double L = geom.length;
  return kCantileverRoot * kCantileverRoot / (kTwoPi * L * L) *
         std::sqrt(geom.bendingStiffness() / geom.massPerLength());
}

FrequencyResponse simulateResponse(const BimorphGeometry& geom, const BearingParams& bearing,
                                   const MaxwellLoad& load, std::span<const double> f,
                                   double volts) {
  FrequencyResponse out;
  out.voltage = volts;
  for (double fi : f) {
    out.f.push_back(fi);
    out.amplitude.push_back(tipResponse(geom, bearing, load, fi, volts));
  }
  return out;
}

FrequencyResponse readResponseCsv(std::istream& in) {
  FrequencyResponse out;
  std::string line;
  int lineNo = 0;
  bool haveVoltage = false;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double f = 0, um = 0, v = 0;
    if (!(row >> f >> um >> v)) {
      if (lineNo == 1) continue;  // header
      throw Error(Errc::ParseError, "line " + std::to_string(lineNo) + ": expected f_Hz,amplitude_um,voltage_V");
    }
    if (!(v > 0.0)) throw Error(Errc::ParseError, "line " + std::to_string(lineNo) + ": voltage must be positive");
    if (!haveVoltage) {
      out.voltage = v;
      haveVoltage = true;
    }
    if (!out.f.empty() && !(f > out.f.back())) {
      throw Error(Errc::ParseError, "line " + std::to_string(lineNo) + ": frequencies must increase");
    }
    out.f.push_back(f);
    out.amplitude.push_back(um * 1e-6 * out.voltage / v);
  }
  return out;
}

void writeResponseCsv(std::ostream& out, const FrequencyResponse& r) {
  out << "f_Hz,amplitude_um,voltage_V\n";
  for (std::size_t i = 0; i < r.f.size(); ++i) {
    out << r.f[i] << ',' << r.amplitude[i] * 1e6 << ',' << r.voltage << '\n';
  }
}

namespace {

using Vec4d = Eigen::Vector4d;

BearingParams fromLog(const Vec4d& theta) {
  return {std::exp(theta[0]), std::exp(theta[1]), std::exp(theta[2]), std::exp(theta[3])};
}

// Residual vector; empty when the model cannot be evaluated.
std::optional<Eigen::VectorXd> residuals(const BimorphGeometry& geom, const FrequencyResponse& m,
                                         const BearingParams& p, const FitOptions& o) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(m.f.size()));
  try {
    for (std::size_t i = 0; i < m.f.size(); ++i) {
      const double model = tipResponse(geom, p, o.load, m.f[i], m.voltage);
      double ri = model - m.amplitude[i];
      if (o.weighting == FitWeighting::Relative) ri /= m.amplitude[i];
      r[static_cast<Eigen::Index>(i)] = ri;
    }
  } catch (const Error&) {
    return std::nullopt;
  }
  if (!r.allFinite()) return std::nullopt;
  return r;
}

BearingFit levenbergMarquardt(const BimorphGeometry& geom, const FrequencyResponse& m,
                              const BearingParams& start, const FitOptions& o) {
  Vec4d theta(std::log(start.kt), std::log(start.dt), std::log(start.kr), std::log(start.dr));
  BearingFit fit;
  auto r = residuals(geom, m, fromLog(theta), o);
  if (!r) {
    fit.residual = std::numeric_limits<double>::infinity();
    fit.params = start;
    return fit;
  }
  double cost = r->squaredNorm();
  double lambda = 1e-3;
  constexpr double h = 1e-7;

  for (fit.iterations = 0; fit.iterations < o.maxIterations; ++fit.iterations) {
    Eigen::MatrixXd J(r->size(), 4);
    bool ok = true;
    for (int j = 0; j < 4 && ok; ++j) {
      Vec4d tj = theta;
      tj[j] += h;
      const auto rj = residuals(geom, m, fromLog(tj), o);
      if (!rj) {
        ok = false;
        break;
      }
      J.col(j) = (*rj - *r) / h;
    }
    if (!ok) break;
    const Eigen::Matrix4d A = J.transpose() * J;
    const Vec4d g = J.transpose() * *r;
    bool accepted = false;
    while (!accepted) {
      Eigen::Matrix4d lhs = A;
      for (int d = 0; d < 4; ++d) lhs(d, d) += lambda * std::max(A(d, d), 1e-300);
      const Vec4d step = -lhs.ldlt().solve(g);
      const Vec4d trial = theta + step;
      std::optional<Eigen::VectorXd> rt;
      if (step.allFinite() && step.cwiseAbs().maxCoeff() < 20.0) rt = residuals(geom, m, fromLog(trial), o);
      const double trialCost = rt ? rt->squaredNorm() : std::numeric_limits<double>::infinity();
      if (trialCost < cost) {
        const double drop = cost - trialCost;
        theta = trial;
        r = std::move(rt);
        cost = trialCost;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (drop <= 1e-14 * (cost + drop) || step.cwiseAbs().maxCoeff() < 1e-12) fit.converged = true;
      } else {
        lambda *= 10.0;
        if (lambda > 1e12) {
          fit.converged = true;  // stationary: no descent direction left
          break;
        }
      }
    }
    if (fit.converged) {
      ++fit.iterations;
      break;
    }
  }
  fit.params = fromLog(theta);
  fit.residual = cost;
  return fit;
}

// Relative residuals have a spurious minimum at d_r -> 0 that attracts starts
// far from the solution, so each start is first settled on absolute residuals.
BearingFit runStart(const BimorphGeometry& geom, const FrequencyResponse& m,
                    const BearingParams& start, const FitOptions& o) {
  if (o.weighting == FitWeighting::Absolute) return levenbergMarquardt(geom, m, start, o);
  FitOptions coarse = o;
  coarse.weighting = FitWeighting::Absolute;
  const BearingFit first = levenbergMarquardt(geom, m, start, coarse);
  if (!std::isfinite(first.residual)) return first;
  BearingFit second = levenbergMarquardt(geom, m, first.params, o);
  second.iterations += first.iterations;
  return second;
}

double rmsRelative(const BimorphGeometry& geom, const FrequencyResponse& m, const BearingParams& p,
                   const MaxwellLoad& load) {
  double acc = 0.0;
  for (std::size_t i = 0; i < m.f.size(); ++i) {
    const double e = tipResponse(geom, p, load, m.f[i], m.voltage) / m.amplitude[i] - 1.0;
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(m.f.size()));
}

}  // namespace

double fitResidual(const BimorphGeometry& geom, const FrequencyResponse& measured,
                   const BearingParams& params, const FitOptions& options) {
  const auto r = residuals(geom, measured, params, options);
  return r ? r->squaredNorm() : std::numeric_limits<double>::infinity();
}

BearingFit fitBearing(const BimorphGeometry& geom, const FrequencyResponse& measured,
                      const FitOptions& options) {
  geom.validate();
  options.center.validate();
  if (measured.f.size() != measured.amplitude.size()) {
    throw Error(Errc::LengthMismatch, "frequency and amplitude counts differ");
  }
  if (measured.f.size() < 8) {
    throw Error(Errc::InsufficientData, "need at least 8 frequency points");
  }
  for (std::size_t i = 0; i < measured.f.size(); ++i) {
    if (!(measured.f[i] > 0.0) || !(measured.amplitude[i] > 0.0)) {
      throw Error(Errc::InvalidArgument, "frequencies and amplitudes must be positive");
    }
    if (i > 0 && !(measured.f[i] > measured.f[i - 1])) {
      throw Error(Errc::InvalidArgument, "frequencies must increase");
    }
  }
  const auto peak = std::max_element(measured.amplitude.begin(), measured.amplitude.end()) -
                    measured.amplitude.begin();
  if (peak == 0 || static_cast<std::size_t>(peak) + 1 == measured.amplitude.size()) {
    throw Error(Errc::InsufficientData, "data must span the first resonance");
  }
  const int n = std::max(options.starts, 1);

  std::vector<BearingParams> starts;
  for (int i = 0; i < n; ++i) {
    const double e = n == 1 ? 0.0 : 2.0 * i / (n - 1) - 1.0;
    const double s = std::pow(options.spread, e);
    const auto c = options.center.asArray();
    starts.push_back({c[0] * s, c[1] * s, c[2] * s, c[3] * s});
  }

  std::vector<BearingFit> results(starts.size());
  if (options.parallel) {
    std::vector<std::future<BearingFit>> jobs;
    for (const auto& s : starts) {
      jobs.push_back(std::async(std::launch::async, [&, s] {
        return runStart(geom, measured, s, options);
      }));
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) results[i] = jobs[i].get();
  } else {
    for (std::size_t i = 0; i < starts.size(); ++i) {
      results[i] = runStart(geom, measured, starts[i], options);
    }
  }

  // Lowest residual wins; ties go to the lexicographically smaller parameters,
  // so the result does not depend on completion order.
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < results.size(); ++i) {
    results[i].startIndex = static_cast<int>(i);
    if (!results[i].converged) continue;
    if (!best || results[i].residual < results[*best].residual ||
        (results[i].residual == results[*best].residual &&
         results[i].params.asArray() < results[*best].params.asArray())) {
      best = i;
    }
  }
  if (!best) throw Error(Errc::NoConvergence, "no start converged");
  BearingFit out = results[*best];
  out.rmsRelative = rmsRelative(geom, measured, out.params, options.load);
  return out;
}

BearingParams medianParams(std::span<const BearingParams> fits) {
  if (fits.empty()) throw Error(Errc::EmptyInput, "no fits to take the median of");
  std::array<double, 4> out{};
  for (int c = 0; c < 4; ++c) {
    std::vector<double> v;
    for (const auto& f : fits) v.push_back(f.asArray()[static_cast<std::size_t>(c)]);
    std::sort(v.begin(), v.end());
    out[static_cast<std::size_t>(c)] = v[(v.size() - 1) / 2];
  }
  return BearingParams::fromArray(out);
}

std::vector<AmplitudeRow> amplitudeTable(const BimorphGeometry& geom, const BearingParams& bearing,
                                         std::span<const MaxwellLoad> loads,
                                         std::span<const double> voltages, double simVolts) {
  requirePositive(simVolts, "simulation voltage");
  std::vector<std::array<double, 3>> peaks;
  for (const MaxwellLoad& load : loads) {
    std::array<double, 3> p{};
    for (std::size_t b = 0; b < kTableBands.size(); ++b) {
      for (double f = kTableBands[b].lo; f <= kTableBands[b].hi + 1e-9; f += 1.0) {
        p[b] = std::max(p[b], tipResponse(geom, bearing, load, f, simVolts));
      }
    }
    peaks.push_back(p);
  }
  std::vector<AmplitudeRow> rows;
  for (double v : voltages) {
    for (std::size_t i = 0; i < loads.size(); ++i) {
      AmplitudeRow row{v, loads[i].label, {}};
      for (std::size_t b = 0; b < 3; ++b) row.amplitude[b] = peaks[i][b] * (v / simVolts);
      rows.push_back(row);
    }
  }
  return rows;
}

void writeAmplitudeCsv(std::ostream& out, std::span<const AmplitudeRow> rows) {
  out << "voltage_V,load";
  for (const Band& b : kTableBands) out << ",band_" << b.lo << '_' << b.hi << "_um";
  out << '\n';
  for (const AmplitudeRow& r : rows) {
    out << r.voltage << ',' << to_string(r.load);
    for (double a : r.amplitude) out << ',' << a * 1e6;
    out << '\n';
  }
}

DisplayConfig defaultDisplayConfig() {
  DisplayConfig c;
  c.lowerImpedance.parallelStiffness = 9601.70284;
  c.lowerImpedance.branches = {{80476.5335, 17.4061938}};
  c.lowerImpedance.label = LoadLabel::LowerImpedance;
  c.upperImpedance = c.lowerImpedance.scaled(3.0, LoadLabel::UpperImpedance);
  return c;
}

namespace {

MaxwellLoad loadFromJson(const nlohmann::json& j, MaxwellLoad def) {
  def.parallelStiffness = j.value("parallel_stiffness", def.parallelStiffness);
  if (j.contains("branches")) {
    def.branches.clear();
    for (const auto& b : j.at("branches")) {
      def.branches.push_back({b.at("stiffness").get<double>(), b.at("damping").get<double>()});
    }
  }
  def.validate();
  return def;
}

nlohmann::json loadToJson(const MaxwellLoad& l) {
  nlohmann::json branches = nlohmann::json::array();
  for (const auto& b : l.branches) branches.push_back({{"stiffness", b.stiffness}, {"damping", b.damping}});
  return {{"parallel_stiffness", l.parallelStiffness}, {"branches", branches}};
}

}  // namespace

DisplayConfig displayConfigFromJson(const nlohmann::json& j) {
  DisplayConfig c = defaultDisplayConfig();
  if (j.contains("geometry")) {
    const auto& g = j.at("geometry");
    auto& o = c.geometry;
    o.length = g.value("length", o.length);
    o.width = g.value("width", o.width);
    o.piezoThickness = g.value("piezo_thickness", o.piezoThickness);
    o.shimThickness = g.value("shim_thickness", o.shimThickness);
    o.piezoModulus = g.value("piezo_modulus", o.piezoModulus);
    o.shimModulus = g.value("shim_modulus", o.shimModulus);
    o.piezoDensity = g.value("piezo_density", o.piezoDensity);
    o.shimDensity = g.value("shim_density", o.shimDensity);
    o.d31 = g.value("d31", o.d31);
    o.lossFactor = g.value("loss_factor", o.lossFactor);
    o.capacitance = g.value("capacitance", o.capacitance);
  }
  if (j.contains("bearing")) {
    const auto& b = j.at("bearing");
    c.bearing.kt = b.value("kt", c.bearing.kt);
    c.bearing.dt = b.value("dt", c.bearing.dt);
    c.bearing.kr = b.value("kr", c.bearing.kr);
    c.bearing.dr = b.value("dr", c.bearing.dr);
  }
  if (j.contains("loads")) {
    const auto& l = j.at("loads");
    if (l.contains("lower_impedance")) {
      c.lowerImpedance = loadFromJson(l.at("lower_impedance"), c.lowerImpedance);
    }
    if (l.contains("upper_impedance")) {
      c.upperImpedance = loadFromJson(l.at("upper_impedance"), c.upperImpedance);
    }
  }
  c.geometry.validate();
  c.bearing.validate();
  return c;
}

nlohmann::json toJson(const DisplayConfig& c) {
  const auto& g = c.geometry;
  return {
      {"geometry",
       {{"length", g.length},
        {"width", g.width},
        {"piezo_thickness", g.piezoThickness},
        {"shim_thickness", g.shimThickness},
        {"piezo_modulus", g.piezoModulus},
        {"shim_modulus", g.shimModulus},
        {"piezo_density", g.piezoDensity},
        {"shim_density", g.shimDensity},
        {"d31", g.d31},
        {"loss_factor", g.lossFactor},
        {"capacitance", g.capacitance}}},
      {"bearing", {{"kt", c.bearing.kt}, {"dt", c.bearing.dt}, {"kr", c.bearing.kr}, {"dr", c.bearing.dr}}},
      {"loads",
       {{"lower_impedance", loadToJson(c.lowerImpedance)},
        {"upper_impedance", loadToJson(c.upperImpedance)}}},
  };
}

DisplayConfig loadDisplayConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  try {
    return displayConfigFromJson(nlohmann::json::parse(in, nullptr, true, true));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, path + ": " + e.what());
  }
}

nlohmann::json toJson(const BearingFit& fit) {
  return {{"kt", fit.params.kt},
          {"dt", fit.params.dt},
          {"kr", fit.params.kr},
          {"dr", fit.params.dr},
          {"residual", fit.residual},
          {"rms_relative", fit.rmsRelative},
          {"converged", fit.converged},
          {"iterations", fit.iterations},
          {"start_index", fit.startIndex}};
}

}  // namespace tactwin::actuator
