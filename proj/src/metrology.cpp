#include "tactwin/metrology.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "tactwin/error.hpp"
#include "tactwin/fft.hpp"
#include "tactwin/quantity.hpp"

namespace tactwin::metrology {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kMaxIterations = 100;
constexpr double kRelTol = 1e-12;
constexpr double kHintWindow = 0.2;

double wrapPhase(double phi) {
  phi = std::remainder(phi, kTwoPi);
  return phi <= -std::numbers::pi ? phi + kTwoPi : phi;
}

// Quadratic interpolation of |X| around a peak bin, in fractional bins.
double refinePeak(const std::vector<std::complex<double>>& bins, std::size_t k) {
  if (k == 0 || k + 1 >= bins.size()) return static_cast<double>(k);
  const double a = std::abs(bins[k - 1]);
  const double b = std::abs(bins[k]);
  const double c = std::abs(bins[k + 1]);
  const double den = a - 2.0 * b + c;
  if (den == 0.0) return static_cast<double>(k);
  return static_cast<double>(k) + 0.5 * (a - c) / den;
}

// Least squares of y on sin/cos at a fixed frequency.
void linearPhaseFit(const SampledSignal& sig, double f, double& A, double& phi) {
  double ss = 0, cc = 0, sc = 0, ys = 0, yc = 0;
  const double w = kTwoPi * f * sig.dt;
  for (std::size_t i = 0; i < sig.samples.size(); ++i) {
    const double s = std::sin(w * static_cast<double>(i));
    const double c = std::cos(w * static_cast<double>(i));
    ss += s * s;
    cc += c * c;
    sc += s * c;
    ys += sig.samples[i] * s;
    yc += sig.samples[i] * c;
  }
  const double det = ss * cc - sc * sc;
  if (!(std::abs(det) > 0.0)) throw Error(Errc::DegenerateFit, "sin/cos basis is singular");
  const double a = (ys * cc - yc * sc) / det;  // coefficient of sin
  const double b = (yc * ss - ys * sc) / det;  // coefficient of cos
  A = std::hypot(a, b);
  phi = std::atan2(b, a);
}

SineFit refine(const SampledSignal& sig, double fStart) {
  SineFit fit;
  fit.f = fStart;
  linearPhaseFit(sig, fit.f, fit.A, fit.phi);

  const std::size_t n = sig.samples.size();
  double cost = sineCost(sig, fit.A, fit.f, fit.phi);
  double lambda = 1e-3;
  Eigen::Vector3d p(fit.A, fit.f, fit.phi);

  for (fit.iterations = 0; fit.iterations < kMaxIterations; ++fit.iterations) {
    if (cost == 0.0) {
      fit.converged = true;
      break;
    }
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
    const double w = kTwoPi * p[1];
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) * sig.dt;
      const double theta = w * t + p[2];
      const double s = std::sin(theta);
      const double c = std::cos(theta);
      const Eigen::Vector3d g(s, p[0] * c * kTwoPi * t, p[0] * c);
      jtj.noalias() += g * g.transpose();
      jtr += g * (sig.samples[i] - p[0] * s);
    }
    bool accepted = false;
    while (!accepted) {
      Eigen::Matrix3d lhs = jtj;
      for (int d = 0; d < 3; ++d) lhs(d, d) += lambda * jtj(d, d);
      const Eigen::Vector3d step = lhs.ldlt().solve(jtr);
      const Eigen::Vector3d trial = p + step;
      const double trialCost = step.allFinite()
                                   ? sineCost(sig, trial[0], trial[1], trial[2])
                                   : std::numeric_limits<double>::infinity();
      if (trialCost < cost) {
        const double drop = cost - trialCost;
        p = trial;
        cost = trialCost;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (drop <= kRelTol * (cost + drop)) fit.converged = true;
      } else {
        lambda *= 10.0;
        if (lambda > 1e12) {
          // No descent direction left: first-order stationary.
          fit.converged = true;
          break;
        }
      }
    }
    if (fit.converged) {
      ++fit.iterations;
      break;
    }
  }

  fit.A = p[0];
  fit.f = p[1];
  fit.phi = p[2];
  if (fit.A < 0.0) {
    fit.A = -fit.A;
    fit.phi += std::numbers::pi;
  }
  fit.phi = wrapPhase(fit.phi);
  fit.residualPower = cost / static_cast<double>(n);
  if (!(fit.f > 0.0 && fit.f < sig.nyquist()) || !(fit.A > 0.0)) fit.converged = false;
  return fit;
}

}  // namespace

void SampledSignal::validate() const {
  if (samples.size() < kMinSamples) {
    throw Error(Errc::InsufficientData, "need at least 64 samples, got " +
                                            std::to_string(samples.size()));
  }
  if (!(dt > 0.0)) throw Error(Errc::InvalidArgument, "dt must be positive");
}

double sineCost(const SampledSignal& sig, double A, double f, double phi) {
  const double w = kTwoPi * f * sig.dt;
  double cost = 0.0;
  for (std::size_t i = 0; i < sig.samples.size(); ++i) {
    const double r = sig.samples[i] - A * std::sin(w * static_cast<double>(i) + phi);
    cost += r * r;
  }
  return cost;
}

SineFit fitSine(const SampledSignal& sig, double f0Hint) {
  sig.validate();
  if (!(f0Hint > 0.0) || f0Hint >= sig.nyquist()) {
    throw Error(Errc::InvalidArgument, "frequency hint outside (0, Nyquist)");
  }
  const auto bins = fft::forward(sig.samples);
  const double df = 1.0 / (static_cast<double>(sig.samples.size()) * sig.dt);
  const auto lo = static_cast<std::size_t>(std::max(1.0, std::floor(f0Hint * (1 - kHintWindow) / df)));
  const auto hi = static_cast<std::size_t>(std::ceil(f0Hint * (1 + kHintWindow) / df));
  const std::size_t k = fft::peakBin(bins, lo, hi);
  double fStart = refinePeak(bins, k) * df;
  // A window narrower than a bin leaves the hint as the better start.
  if (hi - lo < 2 || !(fStart > 0.0)) fStart = f0Hint;
  return refine(sig, fStart);
}

SineFit fitSine(const SampledSignal& sig) {
  sig.validate();
  const auto bins = fft::forward(sig.samples);
  const double df = 1.0 / (static_cast<double>(sig.samples.size()) * sig.dt);
  const std::size_t k = fft::peakBin(bins, 1, bins.size() - 1);
  return refine(sig, std::max(refinePeak(bins, k), 0.5) * df);
}

std::vector<double> residual(const SampledSignal& sig, const SineFit& fit) {
  std::vector<double> r(sig.samples.size());
  const double w = kTwoPi * fit.f * sig.dt;
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] = sig.samples[i] - fit.A * std::sin(w * static_cast<double>(i) + fit.phi);
  }
  return r;
}

namespace {

double normalizer(const SineFit& fit, Normalization norm) {
  return norm == Normalization::Amplitude ? fit.A : fit.A / std::numbers::sqrt2;
}

void requireBand(double bandHz, double nyquist) {
  if (!(bandHz > 0.0)) throw Error(Errc::InvalidArgument, "band edge must be positive");
  if (bandHz > nyquist) {
    std::ostringstream msg;
    msg << "band " << bandHz << " Hz above Nyquist " << nyquist << " Hz";
    throw Error(Errc::BandAboveNyquist, msg.str());
  }
}

}  // namespace

double thdnPercent(const SampledSignal& sig, const SineFit& fit, Normalization norm) {
  const auto r = residual(sig, fit);
  double e = 0.0;
  for (double v : r) e += v * v;
  return 100.0 / normalizer(fit, norm) * std::sqrt(e / static_cast<double>(r.size()));
}

std::vector<double> bandLimitedResidual(const SampledSignal& sig, const SineFit& fit, double bandHz) {
  requireBand(bandHz, sig.nyquist());
  const auto r = residual(sig, fit);
  auto bins = fft::forward(r);
  const double df = 1.0 / (static_cast<double>(r.size()) * sig.dt);
  for (std::size_t k = 0; k < bins.size(); ++k) {
    if (static_cast<double>(k) * df > bandHz) bins[k] = 0.0;
  }
  return fft::inverse(bins, r.size());
}

std::vector<double> thdnBands(const SampledSignal& sig, const SineFit& fit,
                              std::span<const std::optional<double>> bandsHz, Normalization norm) {
  if (!fit.converged) throw Error(Errc::NoConvergence, "THD+N needs a converged fit");
  for (const auto& b : bandsHz) {
    if (b) requireBand(*b, sig.nyquist());
  }
  const auto r = residual(sig, fit);
  const std::size_t n = r.size();
  const auto bins = fft::forward(r);
  const double df = 1.0 / (static_cast<double>(n) * sig.dt);

  // Parseval: sum r^2 = sum_k weight_k |X_k|^2 / n. Zeroing bins above a band
  // edge and transforming back leaves exactly the partial sum below it.
  std::vector<double> cumulative(bins.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < bins.size(); ++k) {
    const bool single = k == 0 || (n % 2 == 0 && k == n / 2);
    acc += (single ? 1.0 : 2.0) * std::norm(bins[k]) / static_cast<double>(n);
    cumulative[k] = acc;
  }
  const double scale = 100.0 / normalizer(fit, norm);
  std::vector<double> out;
  for (const auto& b : bandsHz) {
    std::size_t last = bins.size() - 1;
    if (b) last = std::min(last, static_cast<std::size_t>(std::floor(*b / df + 1e-9)));
    out.push_back(scale * std::sqrt(cumulative[last] / static_cast<double>(n)));
  }
  return out;
}

std::vector<BandSpec> parseBands(const std::string& list, double nyquist) {
  std::vector<BandSpec> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    BandSpec spec{item, std::nullopt, false};
    if (item != "full") {
      const double hz = parseQuantity(item);
      if (!(hz > 0.0)) throw Error(Errc::ParseError, "band edge must be positive: " + item);
      if (hz >= nyquist) {
        spec.mappedToFull = true;
      } else {
        spec.edgeHz = hz;
      }
    }
    out.push_back(spec);
  }
  if (out.empty()) throw Error(Errc::ParseError, "no bands given");
  return out;
}

ThdnReport analyze(const SampledSignal& sig, double targetFreq, Normalization norm) {
  ThdnReport report;
  report.targetFreq = targetFreq;
  report.fit = fitSine(sig, targetFreq);
  if (!report.fit.converged) throw Error(Errc::NoConvergence, "sine fit did not converge");
  report.measuredFreq = report.fit.f;
  auto edge = [&](double hz) -> std::optional<double> {
    if (hz >= sig.nyquist()) return std::nullopt;
    return hz;
  };
  const std::optional<double> bands[] = {edge(1e3), edge(20e3), std::nullopt};
  const auto v = thdnBands(sig, report.fit, bands, norm);
  report.thdn1k = v[0];
  report.thdn20k = v[1];
  report.thdnFull = v[2];
  return report;
}

nlohmann::json toJson(const ThdnReport& r) {
  return {{"target_hz", r.targetFreq},
          {"measured_hz", r.measuredFreq},
          {"thdn_1k_percent", r.thdn1k},
          {"thdn_20k_percent", r.thdn20k},
          {"thdn_full_percent", r.thdnFull},
          {"fit",
           {{"A", r.fit.A},
            {"f", r.fit.f},
            {"phi", r.fit.phi},
            {"residual_power", r.fit.residualPower},
            {"converged", r.fit.converged},
            {"iterations", r.fit.iterations}}}};
}

LoopStats measureTransferLoop(interconnect::Bus& bus,
                              std::span<const wiretab::EncodedTable> tablesPerBoard, double clock,
                              std::size_t iterations, SendMode mode) {
  const auto& reg = bus.registry();
  if (tablesPerBoard.empty()) throw Error(Errc::EmptyInput, "no tables");
  if (tablesPerBoard.size() != 1 && tablesPerBoard.size() != reg.size()) {
    throw Error(Errc::LengthMismatch, "one table, or one per unit");
  }
  bus.setBulkClock(clock);
  LoopStats stats;
  stats.boards = reg.size();
  stats.iterations = iterations;
  stats.min = std::numeric_limits<double>::infinity();
  stats.max = 0.0;
  double total = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    double d = 0.0;
    if (mode == SendMode::Broadcast) {
      bus.broadcast(true);
      d += bus.bulkWrite(tablesPerBoard.front()).duration;
      bus.broadcast(false);
    } else {
      for (std::size_t i = 0; i < reg.size(); ++i) {
        bus.select(reg[i].dip);
        d += bus.bulkWrite(tablesPerBoard[tablesPerBoard.size() == 1 ? 0 : i]).duration;
      }
    }
    total += d;
    stats.min = std::min(stats.min, d);
    stats.max = std::max(stats.max, d);
  }
  stats.mean = iterations ? total / static_cast<double>(iterations) : 0.0;
  if (iterations == 0) stats.min = 0.0;
  return stats;
}

}  // namespace tactwin::metrology
