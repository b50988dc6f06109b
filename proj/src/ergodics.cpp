#include "ergodic_smpc/ergodics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ergodic_smpc/error.hpp"
#include "ergodic_smpc/random.hpp"

namespace ergodic_smpc {
namespace {

constexpr double kDegenerateHalfWidth = 1e-12;

std::vector<double> make_edges(BinRange r, std::size_t n_bins) {
  if (!(r.hi > r.lo)) {
    double lo = r.lo - kDegenerateHalfWidth;
    double hi = r.lo + kDegenerateHalfWidth;
    // Far from the origin 1e-12 is below one ulp.
    if (!(lo < r.lo)) lo = std::nextafter(r.lo, -INFINITY);
    if (!(hi > r.lo)) hi = std::nextafter(r.lo, INFINITY);
    return {lo, hi};
  }
  std::vector<double> edges(n_bins + 1);
  const double width = (r.hi - r.lo) / static_cast<double>(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) edges[k] = r.lo + width * static_cast<double>(k);
  edges[n_bins] = r.hi;
  for (std::size_t k = 1; k <= n_bins; ++k) {
    if (!(edges[k] > edges[k - 1])) throw InvalidArgumentError("bin range too narrow for the requested bin count");
  }
  return edges;
}

std::size_t bin_of(const std::vector<double>& edges, double v) {
  const std::size_t n_bins = edges.size() - 1;
  const auto it = std::upper_bound(edges.begin(), edges.end(), v);
  const auto k = static_cast<std::size_t>(it - edges.begin());
  return k == 0 ? 0 : std::min(k - 1, n_bins - 1);
}

std::vector<StateVector> slice(const Trajectory& traj, Window w) {
  return {traj.states.begin() + static_cast<std::ptrdiff_t>(w.start),
          traj.states.begin() + static_cast<std::ptrdiff_t>(w.end)};
}

}  // namespace

std::vector<BinRange> sample_range(std::span<const StateVector> samples) {
  if (samples.empty()) throw InvalidArgumentError("range of an empty sample set");
  const auto d = static_cast<std::size_t>(samples.front().size());
  std::vector<BinRange> out(d, BinRange{INFINITY, -INFINITY});
  for (const auto& s : samples) {
    if (static_cast<std::size_t>(s.size()) != d) throw InvalidArgumentError("samples of mixed dimension");
    for (std::size_t i = 0; i < d; ++i) {
      out[i].lo = std::min(out[i].lo, s[static_cast<Eigen::Index>(i)]);
      out[i].hi = std::max(out[i].hi, s[static_cast<Eigen::Index>(i)]);
    }
  }
  return out;
}

EmpiricalMeasure build_histogram(std::span<const StateVector> samples, std::size_t n_bins,
                                 const std::optional<std::vector<BinRange>>& range) {
  if (n_bins < 1) throw InvalidArgumentError("histogram needs at least one bin");
  if (samples.empty()) throw InvalidArgumentError("histogram of an empty sample set");
  const std::vector<BinRange> ranges = range ? *range : sample_range(samples);
  const std::size_t d = ranges.size();
  if (static_cast<std::size_t>(samples.front().size()) != d) {
    throw InvalidArgumentError("histogram range dimension does not match samples");
  }

  EmpiricalMeasure m;
  m.sample_count = samples.size();
  for (std::size_t i = 0; i < d; ++i) {
    if (!std::isfinite(ranges[i].lo) || !std::isfinite(ranges[i].hi) || ranges[i].hi < ranges[i].lo) {
      throw InvalidArgumentError("invalid histogram range in dimension " + std::to_string(i));
    }
    m.edges.push_back(make_edges(ranges[i], n_bins));
  }

  std::vector<std::vector<std::size_t>> counts(d);
  for (std::size_t i = 0; i < d; ++i) counts[i].assign(m.edges[i].size() - 1, 0);
  for (const auto& s : samples) {
    if (static_cast<std::size_t>(s.size()) != d) throw InvalidArgumentError("samples of mixed dimension");
    for (std::size_t i = 0; i < d; ++i) {
      const double v = s[static_cast<Eigen::Index>(i)];
      if (!std::isfinite(v)) throw InvalidArgumentError("non-finite sample");
      if (range && (v < ranges[i].lo || v > ranges[i].hi)) {
        throw InvalidArgumentError("sample outside the explicit histogram range in dimension " + std::to_string(i));
      }
      ++counts[i][bin_of(m.edges[i], v)];
    }
  }
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < d; ++i) {
    std::vector<double> p(counts[i].size());
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = static_cast<double>(counts[i][k]) / n;
    m.proportions.push_back(std::move(p));
  }
  return m;
}

EmpiricalMeasure build_histogram(const Trajectory& traj, std::size_t n_bins,
                                 const std::optional<std::vector<BinRange>>& range) {
  return build_histogram(std::span<const StateVector>(traj.states), n_bins, range);
}

std::vector<EmpiricalMeasure> windowed_measures(const Trajectory& traj, std::span<const Window> windows,
                                                std::size_t n_bins) {
  const auto shared = sample_range(traj.states);
  std::vector<EmpiricalMeasure> out;
  out.reserve(windows.size());
  for (const auto& w : windows) {
    if (w.end > traj.states.size() || w.start > w.end) throw InvalidArgumentError("window outside the trajectory");
    if (w.start == w.end) throw InvalidArgumentError("empty window");
    const auto part = slice(traj, w);
    out.push_back(build_histogram(std::span<const StateVector>(part), n_bins, shared));
  }
  return out;
}

std::vector<double> tv_distance(const EmpiricalMeasure& m1, const EmpiricalMeasure& m2) {
  if (m1.edges != m2.edges) throw IncompatibleMeasureError("measures are defined on different bins");
  std::vector<double> out(m1.dimension());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < m1.proportions[i].size(); ++k) {
      s += std::abs(m1.proportions[i][k] - m2.proportions[i][k]);
    }
    out[i] = std::min(1.0, 0.5 * s);
  }
  return out;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidArgumentError("KS distance of an empty sample set");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_distance_to_cdf(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw InvalidArgumentError("KS distance of an empty sample set");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double wasserstein1_1d(std::vector<double> a, std::vector<double> b, std::uint64_t seed) {
  if (a.empty() || b.empty()) throw InvalidArgumentError("Wasserstein distance of an empty sample set");
  if (a.size() != b.size()) {
    auto& big = a.size() > b.size() ? a : b;
    const std::size_t keep = std::min(a.size(), b.size());
    RandomSource rng(seed);
    for (std::size_t k = 0; k < keep; ++k) std::swap(big[k], big[k + rng.index(big.size() - k)]);
    big.resize(keep);
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
  return s / static_cast<double>(a.size());
}

std::vector<double> marginal(std::span<const StateVector> samples, std::size_t dim) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s[static_cast<Eigen::Index>(dim)]);
  return out;
}

double least_squares_slope(std::span<const double> y) {
  if (y.size() < 2) return 0.0;
  const double n = static_cast<double>(y.size());
  const double xbar = (n - 1.0) / 2.0;
  const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double dx = static_cast<double>(i) - xbar;
    sxy += dx * (y[i] - ybar);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

const char* to_string(StationarityVerdict v) {
  return v == StationarityVerdict::stabilizing ? "stabilizing" : "not-stabilizing";
}

DiagnosticReport stationarity_diagnostic(const Trajectory& traj, std::size_t n_windows, std::size_t n_bins,
                                         double tolerance, const StationarityOptions& options) {
  if (n_windows < 2) throw InvalidArgumentError("stationarity diagnostic needs at least two windows");
  const std::size_t n = traj.states.size();
  if (n < 10 * n_windows) throw InvalidArgumentError("trajectory too short for the requested window count");
  if (options.burn_in_fraction < 0.0 || options.burn_in_fraction >= 1.0) {
    throw InvalidArgumentError("burn-in fraction must lie in [0, 1)");
  }
  const auto burn = static_cast<std::size_t>(std::floor(options.burn_in_fraction * static_cast<double>(n)));
  const std::size_t len = n - burn;
  std::vector<std::size_t> boundaries;
  for (std::size_t i = 0; i <= n_windows; ++i) boundaries.push_back(burn + i * len / n_windows);
  return stationarity_diagnostic(traj, std::move(boundaries), n_bins, tolerance);
}

DiagnosticReport stationarity_diagnostic(const Trajectory& traj, std::vector<std::size_t> boundaries,
                                         std::size_t n_bins, double tolerance) {
  std::sort(boundaries.begin(), boundaries.end());
  boundaries.erase(std::unique(boundaries.begin(), boundaries.end()), boundaries.end());
  if (boundaries.size() < 3) throw InvalidArgumentError("stationarity diagnostic needs at least two windows");
  if (boundaries.back() > traj.states.size()) throw InvalidArgumentError("window outside the trajectory");

  DiagnosticReport r;
  r.n_bins = n_bins;
  r.tolerance = tolerance;
  r.burn_in = boundaries.front();
  for (std::size_t i = 0; i + 1 < boundaries.size(); ++i) r.windows.push_back({boundaries[i], boundaries[i + 1]});
  r.measures = windowed_measures(traj, r.windows, n_bins);

  const std::size_t d = traj.dimension();
  for (std::size_t w = 0; w + 1 < r.windows.size(); ++w) {
    WindowPairDistances pair;
    pair.tv = tv_distance(r.measures[w], r.measures[w + 1]);
    const auto s1 = slice(traj, r.windows[w]);
    const auto s2 = slice(traj, r.windows[w + 1]);
    for (std::size_t i = 0; i < d; ++i) {
      auto m1 = marginal(s1, i);
      auto m2 = marginal(s2, i);
      pair.ks.push_back(ks_distance(m1, m2));
      pair.w1.push_back(wasserstein1_1d(std::move(m1), std::move(m2), traj.seed));
    }
    r.consecutive.push_back(std::move(pair));
  }

  bool stabilizing = true;
  for (std::size_t i = 0; i < d; ++i) {
    std::vector<double> seq;
    for (const auto& pair : r.consecutive) seq.push_back(pair.tv[i]);
    const double slope = least_squares_slope(seq);
    r.tv_slope.push_back(slope);
    if (!(seq.back() <= tolerance) || !(slope <= 0.0)) stabilizing = false;
  }
  r.verdict = stabilizing ? StationarityVerdict::stabilizing : StationarityVerdict::not_stabilizing;
  return r;
}

}  // namespace ergodic_smpc
