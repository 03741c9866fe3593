#include "tactwin/analog.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <ostream>

#include "tactwin/error.hpp"

namespace tactwin::analog {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

void trimLeading(std::vector<double>& c) {
  while (c.size() > 1 && c.back() == 0.0) c.pop_back();
}

std::vector<std::complex<double>> roots(const std::vector<double>& c) {
  const int n = static_cast<int>(c.size()) - 1;
  if (n < 1) return {};
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) companion(i, n - 1) = -c[i] / c[n];
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  std::vector<std::complex<double>> out;
  for (int i = 0; i < n; ++i) out.push_back(solver.eigenvalues()[i]);
  return out;
}

std::vector<double> polyMul(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

// Maps sum p_k s^k to a polynomial in z^-1 under s = K (1 - z^-1)/(1 + z^-1),
// multiplied through by (1 + z^-1)^n.
std::vector<double> bilinearPoly(const std::vector<double>& p, int n, double K) {
  std::vector<double> out(n + 1, 0.0);
  double Kk = 1.0;
  for (int k = 0; k <= n; ++k) {
    const double coeff = k < static_cast<int>(p.size()) ? p[k] : 0.0;
    if (coeff != 0.0) {
      std::vector<double> term{coeff * Kk};
      for (int i = 0; i < k; ++i) term = polyMul(term, {1.0, -1.0});
      for (int i = 0; i < n - k; ++i) term = polyMul(term, {1.0, 1.0});
      for (int i = 0; i <= n; ++i) out[i] += term[i];
    }
    Kk *= K;
  }
  return out;
}

void requirePositive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(Errc::NonPositiveInput, std::string(name) + " must be positive");
  }
}

}  // namespace

RationalTransferFunction::RationalTransferFunction(std::vector<double> numerator,
                                                   std::vector<double> denominator)
    : num_(std::move(numerator)), den_(std::move(denominator)) {
  if (num_.empty()) num_ = {0.0};
  trimLeading(num_);
  trimLeading(den_);
  if (den_.empty() || (den_.size() == 1 && den_[0] == 0.0)) {
    throw Error(Errc::InvalidArgument, "denominator is zero");
  }
  if (num_.size() > den_.size()) throw Error(Errc::InvalidArgument, "transfer function is improper");
}

std::complex<double> RationalTransferFunction::at(std::complex<double> s) const {
  auto horner = [s](const std::vector<double>& c) {
    std::complex<double> acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * s + *it;
    return acc;
  };
  return horner(num_) / horner(den_);
}

std::complex<double> RationalTransferFunction::response(double hz) const {
  return at({0.0, kTwoPi * hz});
}

double RationalTransferFunction::phaseDeg(double hz) const {
  // Sum of per-root angles is continuous in frequency; std::arg of H alone
  // wraps at -180 degrees.
  const std::complex<double> jw{0.0, kTwoPi * hz};
  double phase = 0.0;
  for (const auto& z : roots(num_)) phase += std::arg(jw - z);
  for (const auto& p : roots(den_)) phase -= std::arg(jw - p);
  if (num_.back() / den_.back() < 0.0) phase += std::numbers::pi;
  // Anchor the branch to the true phase near DC.
  const std::complex<double> jw0{0.0, 1e-9};
  double phase0 = 0.0;
  for (const auto& z : roots(num_)) phase0 += std::arg(jw0 - z);
  for (const auto& p : roots(den_)) phase0 -= std::arg(jw0 - p);
  if (num_.back() / den_.back() < 0.0) phase0 += std::numbers::pi;
  const double truth0 = std::arg(at(jw0));
  phase -= kTwoPi * std::round((phase0 - truth0) / kTwoPi);
  return phase * kRadToDeg;
}

std::vector<std::complex<double>> RationalTransferFunction::poles() const { return roots(den_); }

bool RationalTransferFunction::stable() const {
  for (const auto& p : poles()) {
    if (!(p.real() < 0.0)) return false;
  }
  return true;
}

double RationalTransferFunction::naturalFrequency() const {
  const int n = order();
  if (n < 1) return 0.0;
  return std::pow(std::abs(den_[0] / den_[n]), 1.0 / n) / kTwoPi;
}

Evaluation evaluate(const RationalTransferFunction& tf, double hz) {
  return {tf.magnitude(hz), tf.phaseDeg(hz)};
}

std::vector<double> applyToSamples(const RationalTransferFunction& tf, std::span<const double> x,
                                   double dt, std::optional<double> prewarpHz) {
  if (!(dt > 0.0)) throw Error(Errc::InvalidArgument, "dt must be positive");
  if (!tf.stable()) throw Error(Errc::UnstableFilter, "pole in the closed right half-plane");
  const int n = tf.order();
  std::vector<double> y(x.size());
  if (n == 0) {
    const double g = tf.numerator()[0] / tf.denominator()[0];
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = g * x[i];
    return y;
  }
  const double nyquist = 0.5 / dt;
  const double fw = prewarpHz.value_or(tf.naturalFrequency());
  double K = 2.0 / dt;
  if (fw > 0.0 && fw < nyquist) {
    const double w = kTwoPi * fw;
    K = w / std::tan(w * dt / 2.0);
  }
  std::vector<double> b = bilinearPoly(tf.numerator(), n, K);
  std::vector<double> a = bilinearPoly(tf.denominator(), n, K);
  const double a0 = a[0];
  for (double& v : b) v /= a0;
  for (double& v : a) v /= a0;

  // Direct form II transposed.
  std::vector<double> state(n, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double out = b[0] * x[i] + state[0];
    for (int k = 1; k < n; ++k) state[k - 1] = b[k] * x[i] - a[k] * out + state[k];
    state[n - 1] = b[n] * x[i] - a[n] * out;
    y[i] = out;
  }
  return y;
}

double SallenKeySpec::f0() const { return 1.0 / (kTwoPi * std::sqrt(C1 * C2) * R); }
double SallenKeySpec::Q() const { return 0.5 * std::sqrt(C1 / C2); }

SallenKeySpec sallenKeyDesign(double fc, double C1, double C2) {
  requirePositive(fc, "fc");
  requirePositive(C1, "C1");
  requirePositive(C2, "C2");
  return {C1, C2, 1.0 / (kTwoPi * std::sqrt(C1 * C2) * fc)};
}

RationalTransferFunction sallenKeyTf(const SallenKeySpec& spec) {
  requirePositive(spec.R, "R");
  requirePositive(spec.C1, "C1");
  requirePositive(spec.C2, "C2");
  return {{1.0}, {1.0, 2.0 * spec.C2 * spec.R, spec.C1 * spec.C2 * spec.R * spec.R}};
}

double HBridgeFilterSpec::f0() const { return 1.0 / (kTwoPi * std::sqrt(2.0 * L * C_p)); }
double HBridgeFilterSpec::Q() const { return std::sqrt(L) / ((R_L + R_d) * std::sqrt(2.0 * C_p)); }

double hbridgeInductance(double fc, double C_p) {
  requirePositive(fc, "fc");
  requirePositive(C_p, "C_p");
  const double w = kTwoPi * fc;
  return 1.0 / (2.0 * C_p * w * w);
}

Damping dampingFor(double Q, double L, double C_p, double R_L) {
  requirePositive(Q, "Q");
  requirePositive(L, "L");
  requirePositive(C_p, "C_p");
  if (!(R_L >= 0.0)) throw Error(Errc::NonPositiveInput, "R_L must be nonnegative");
  const double rd = std::sqrt(L) / (Q * std::sqrt(2.0 * C_p)) - R_L;
  if (rd < 0.0) return {0.0, true};
  return {rd, false};
}

RationalTransferFunction hbridgeTf(const HBridgeFilterSpec& spec) {
  requirePositive(spec.L, "L");
  requirePositive(spec.C_p, "C_p");
  if (!(spec.R_L >= 0.0) || !(spec.R_d >= 0.0)) {
    throw Error(Errc::NonPositiveInput, "resistances must be nonnegative");
  }
  return {{1.0}, {1.0, 2.0 * (spec.R_L + spec.R_d) * spec.C_p, 2.0 * spec.L * spec.C_p}};
}

void writeBodeCsv(std::ostream& out, const RationalTransferFunction& tf, double fLo, double fHi,
                  int points) {
  requirePositive(fLo, "fLo");
  if (!(fHi > fLo) || points < 2) throw Error(Errc::InvalidArgument, "bad Bode range");
  out << "frequency_hz,magnitude,magnitude_db,phase_deg\n";
  const double ratio = std::log(fHi / fLo);
  for (int i = 0; i < points; ++i) {
    const double f = fLo * std::exp(ratio * i / (points - 1));
    const double mag = tf.magnitude(f);
    out << f << ',' << mag << ',' << 20.0 * std::log10(mag) << ',' << tf.phaseDeg(f) << '\n';
  }
}

nlohmann::json designFilter(const DesignFilterInputs& in) {
  const SallenKeySpec sk = sallenKeyDesign(in.sallenKeyCutoff, in.C1, in.C2);
  SallenKeySpec skRounded = sk;
  skRounded.R = 10e3;

  const double L = hbridgeInductance(in.hbridgeCutoff, in.C_p);
  const Damping damping = dampingFor(in.Q, in.inductorUsed, in.C_p, in.R_L);
  HBridgeFilterSpec used{in.inductorUsed, in.R_L, damping.R_d, in.C_p};
  HBridgeFilterSpec estimate{L, in.R_L, damping.R_d, in.C_p};

  nlohmann::json phases = nlohmann::json::array();
  for (double rd : {0.0, 1000.0}) {
    HBridgeFilterSpec s{in.phaseCheckInductance, in.R_L, rd, in.C_p};
    phases.push_back({{"L", s.L}, {"R_d", rd}, {"phase_deg", hbridgeTf(s).phaseDeg(in.phaseFrequency)}});
  }

  return {
      {"sallen_key",
       {{"fc", in.sallenKeyCutoff},
        {"C1", in.C1},
        {"C2", in.C2},
        {"R", sk.R},
        {"f0", sk.f0()},
        {"Q", sk.Q()},
        {"phase_frequency", in.phaseFrequency},
        {"phase_deg", sallenKeyTf(sk).phaseDeg(in.phaseFrequency)},
        {"phase_deg_R_10k", sallenKeyTf(skRounded).phaseDeg(in.phaseFrequency)}}},
      {"hbridge",
       {{"fc", in.hbridgeCutoff},
        {"C_p", in.C_p},
        {"L", L},
        {"L_used", in.inductorUsed},
        {"f0_designed", estimate.f0()},
        {"f0_used", used.f0()},
        {"Q_target", in.Q},
        {"R_L", in.R_L},
        {"R_d", damping.R_d},
        {"R_d_clamped", damping.clamped},
        {"phase_frequency", in.phaseFrequency},
        {"phase_table", phases}}},
  };
}

}  // namespace tactwin::analog
