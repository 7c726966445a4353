#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "twvae/trajectory.hpp"

namespace twvae {

/// Monotone, continuous matching of indices of A (first) to indices of B
/// (second), from (0,0) to (T_A-1, T_B-1).
struct AlignmentPath {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

struct Alignment {
  AlignmentPath path;
  double cost = 0.0;
};

/// Symmetric DTW on squared Euclidean distances: diagonal steps weigh the
/// local cost twice, horizontal and vertical steps once. Ties in the
/// backtrack prefer diagonal, then vertical (advance A), then horizontal.
Alignment dtw_align(const SeriesView& a, const SeriesView& b);
inline Alignment dtw_align(const Trajectory& a, const Trajectory& b) { return dtw_align(a.view(), b.view()); }

/// Checks the path invariants; throws std::logic_error on violation.
void validate_path(const AlignmentPath& path, std::size_t len_a, std::size_t len_b);

/// Square root of the mean, over timesteps of `original`, of the mean squared
/// distance to every reconstruction point paired with that timestep.
double aligned_rmse(const SeriesView& original, const SeriesView& reconstruction);
inline double aligned_rmse(const Trajectory& original, const Trajectory& reconstruction) {
  return aligned_rmse(original.view(), reconstruction.view());
}
/// Same metric from an already computed path.
double aligned_rmse_from_path(const SeriesView& original, const SeriesView& reconstruction, const AlignmentPath& path);

/// Both inputs resampled to `length` samples, then (1-alpha)*a + alpha*b per timestep.
Trajectory uniform_time_average(const Trajectory& a, const Trajectory& b, double alpha, std::size_t length);
/// Uses a's length as the common length.
Trajectory uniform_time_average(const Trajectory& a, const Trajectory& b, double alpha);

/// (1-alpha)*a[i] + alpha*b[j] for every (i,j) on the DTW path; the output
/// has one sample per path pair.
Trajectory dtw_average(const Trajectory& a, const Trajectory& b, double alpha);

}  // namespace twvae
