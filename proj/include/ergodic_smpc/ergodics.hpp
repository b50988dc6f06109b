#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ergodic_smpc/types.hpp"

namespace ergodic_smpc {

struct BinRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Per-dimension histogram over equal-width bins.
struct EmpiricalMeasure {
  std::vector<std::vector<double>> edges;        // n_bins + 1 strictly increasing edges per dimension
  std::vector<std::vector<double>> proportions;  // n_bins proportions per dimension, each summing to 1
  std::size_t sample_count = 0;

  std::size_t dimension() const { return edges.size(); }
};

/// Per-dimension [min, max] over the samples.
std::vector<BinRange> sample_range(std::span<const StateVector> samples);

/// Equal-width per-dimension histogram. With no explicit range the bins span
/// [min, max] of the samples. A value on an interior edge is counted in the
/// bin to its right; the upper end of the range belongs to the last bin. A
/// dimension whose range is a single point gets one bin of width 2e-12
/// centred on it. Values outside an explicit range are an error.
EmpiricalMeasure build_histogram(std::span<const StateVector> samples, std::size_t n_bins,
                                 const std::optional<std::vector<BinRange>>& range = std::nullopt);
EmpiricalMeasure build_histogram(const Trajectory& traj, std::size_t n_bins,
                                 const std::optional<std::vector<BinRange>>& range = std::nullopt);

/// Half-open index range [start, end) into a trajectory's states.
struct Window {
  std::size_t start = 0;
  std::size_t end = 0;
};

/// One histogram per window, all on the bin layout of the full trajectory.
std::vector<EmpiricalMeasure> windowed_measures(const Trajectory& traj, std::span<const Window> windows,
                                                std::size_t n_bins);

/// Total variation 0.5 * sum |p1 - p2| per dimension. Edges must match exactly.
std::vector<double> tv_distance(const EmpiricalMeasure& m1, const EmpiricalMeasure& m2);

/// Two-sample Kolmogorov-Smirnov statistic sup |F1 - F2|.
double ks_distance(std::vector<double> samples1, std::vector<double> samples2);

/// One-sample Kolmogorov-Smirnov statistic against an analytic CDF.
double ks_distance_to_cdf(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Exact 1-D Wasserstein-1 distance for equal sample counts (mean absolute
/// difference of sorted samples). When counts differ the larger set is
/// subsampled without replacement using `seed`.
double wasserstein1_1d(std::vector<double> samples1, std::vector<double> samples2, std::uint64_t seed = 0);

/// Coordinate `dim` of each sample.
std::vector<double> marginal(std::span<const StateVector> samples, std::size_t dim);

/// Least-squares slope of y against its index 0, 1, 2, ...
double least_squares_slope(std::span<const double> y);

enum class StationarityVerdict { stabilizing, not_stabilizing };

const char* to_string(StationarityVerdict v);

/// Distances between two consecutive windows, one entry per dimension.
struct WindowPairDistances {
  std::vector<double> tv;
  std::vector<double> ks;
  std::vector<double> w1;
};

struct DiagnosticReport {
  std::vector<Window> windows;
  std::size_t n_bins = 0;
  double tolerance = 0.0;
  std::size_t burn_in = 0;
  std::vector<WindowPairDistances> consecutive;  // windows.size() - 1 entries
  std::vector<double> tv_slope;                  // per dimension
  std::vector<EmpiricalMeasure> measures;        // one per window
  StationarityVerdict verdict = StationarityVerdict::not_stabilizing;

  /// TV between the last two windows, per dimension.
  const std::vector<double>& final_tv() const { return consecutive.back().tv; }
};

struct StationarityOptions {
  double burn_in_fraction = 0.1;
};

/// Splits the post-burn-in part of the trajectory into `n_windows` equal
/// windows and compares consecutive windows. Stabilizing iff, in every
/// dimension, the last consecutive TV is within `tolerance` and the TV
/// sequence has a non-positive least-squares slope.
DiagnosticReport stationarity_diagnostic(const Trajectory& traj, std::size_t n_windows, std::size_t n_bins,
                                         double tolerance, const StationarityOptions& options = {});

/// Same diagnostic over explicit window boundaries b0 < b1 < ... < bn.
/// Duplicate boundaries are ignored.
DiagnosticReport stationarity_diagnostic(const Trajectory& traj, std::vector<std::size_t> boundaries,
                                         std::size_t n_bins, double tolerance);

}  // namespace ergodic_smpc
