#include "twvae/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace twvae {

namespace {

double squared_distance(std::span<const double> p, std::span<const double> q) {
  double s = 0.0;
  for (std::size_t d = 0; d < p.size(); ++d) {
    const double diff = p[d] - q[d];
    s += diff * diff;
  }
  return s;
}

enum Step : unsigned char { kStart, kDiagonal, kVertical, kHorizontal };

}  // namespace

Alignment dtw_align(const SeriesView& a, const SeriesView& b) {
  if (a.rows == 0 || b.rows == 0) throw std::invalid_argument("dtw_align: empty input");
  if (a.cols != b.cols) {
    throw std::invalid_argument("dtw_align: dimension mismatch (" + std::to_string(a.cols) + " vs " +
                                std::to_string(b.cols) + ")");
  }
  const std::size_t na = a.rows, nb = b.rows;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> acc(na * nb, inf);
  std::vector<Step> step(na * nb, kStart);

  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      const double d = squared_distance(a.row(i), b.row(j));
      if (i == 0 && j == 0) {
        acc[0] = d;
        continue;
      }
      double best = inf;
      Step choice = kStart;
      if (i > 0 && j > 0) {
        best = acc[(i - 1) * nb + (j - 1)] + 2.0 * d;
        choice = kDiagonal;
      }
      if (i > 0) {
        const double v = acc[(i - 1) * nb + j] + d;
        if (v < best) best = v, choice = kVertical;
      }
      if (j > 0) {
        const double h = acc[i * nb + (j - 1)] + d;
        if (h < best) best = h, choice = kHorizontal;
      }
      acc[i * nb + j] = best;
      step[i * nb + j] = choice;
    }
  }

  Alignment result;
  result.cost = acc.back();
  std::size_t i = na - 1, j = nb - 1;
  result.path.pairs.emplace_back(i, j);
  while (i > 0 || j > 0) {
    switch (step[i * nb + j]) {
      case kDiagonal: --i, --j; break;
      case kVertical: --i; break;
      case kHorizontal: --j; break;
      case kStart: throw std::logic_error("dtw_align: broken backtrack");
    }
    result.path.pairs.emplace_back(i, j);
  }
  std::reverse(result.path.pairs.begin(), result.path.pairs.end());
  return result;
}

void validate_path(const AlignmentPath& path, std::size_t len_a, std::size_t len_b) {
  const auto& p = path.pairs;
  if (p.empty()) throw std::logic_error("path: empty");
  if (p.front() != std::pair<std::size_t, std::size_t>{0, 0}) throw std::logic_error("path: does not start at (0,0)");
  if (p.back() != std::pair<std::size_t, std::size_t>{len_a - 1, len_b - 1}) {
    throw std::logic_error("path: does not end at the last pair");
  }
  for (std::size_t k = 1; k < p.size(); ++k) {
    const std::size_t di = p[k].first - p[k - 1].first;
    const std::size_t dj = p[k].second - p[k - 1].second;
    if (p[k].first < p[k - 1].first || p[k].second < p[k - 1].second || di > 1 || dj > 1 || di + dj == 0) {
      throw std::logic_error("path: invalid step at position " + std::to_string(k));
    }
  }
}

double aligned_rmse_from_path(const SeriesView& original, const SeriesView& reconstruction, const AlignmentPath& path) {
  std::vector<double> err(original.rows, 0.0);
  std::vector<std::size_t> count(original.rows, 0);
  for (const auto& [i, j] : path.pairs) {
    err[i] += squared_distance(original.row(i), reconstruction.row(j));
    ++count[i];
  }
  double total = 0.0;
  for (std::size_t i = 0; i < original.rows; ++i) {
    if (count[i] == 0) throw std::logic_error("aligned_rmse: original timestep without a pair");
    total += err[i] / static_cast<double>(count[i]);
  }
  return std::sqrt(total / static_cast<double>(original.rows));
}

double aligned_rmse(const SeriesView& original, const SeriesView& reconstruction) {
  const Alignment al = dtw_align(original, reconstruction);
  return aligned_rmse_from_path(original, reconstruction, al.path);
}

Trajectory uniform_time_average(const Trajectory& a, const Trajectory& b, double alpha, std::size_t length) {
  if (a.dims() != b.dims()) throw std::invalid_argument("uniform_time_average: dimension mismatch");
  const Trajectory ra = a.length() == length ? a : resample(a, length);
  const Trajectory rb = b.length() == length ? b : resample(b, length);
  if (ra.length() != rb.length()) throw std::invalid_argument("uniform_time_average: length mismatch after resampling");
  std::vector<double> out(ra.samples().size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = (1.0 - alpha) * ra.samples()[k] + alpha * rb.samples()[k];
  return Trajectory(length, a.dims(), std::move(out), a.channels());
}

Trajectory uniform_time_average(const Trajectory& a, const Trajectory& b, double alpha) {
  return uniform_time_average(a, b, alpha, a.length());
}

Trajectory dtw_average(const Trajectory& a, const Trajectory& b, double alpha) {
  const Alignment al = dtw_align(a, b);
  const std::size_t n = a.dims();
  std::vector<double> out;
  out.reserve(al.path.pairs.size() * n);
  for (const auto& [i, j] : al.path.pairs) {
    for (std::size_t d = 0; d < n; ++d) out.push_back((1.0 - alpha) * a.at(i, d) + alpha * b.at(j, d));
  }
  return Trajectory(al.path.pairs.size(), n, std::move(out), a.channels());
}

}  // namespace twvae
