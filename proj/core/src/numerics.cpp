#include "gridres/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/core.h>

#include "gridres/error.hpp"

namespace gridres {

double squared_distance(Point2D a, Point2D b) noexcept {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

double distance(Point2D a, Point2D b) noexcept { return std::sqrt(squared_distance(a, b)); }

namespace {

double assign(std::span<const Point2D> points, const std::vector<Point2D>& centroids,
              std::vector<std::size_t>& assignment) {
  double sse = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = squared_distance(points[i], centroids[c]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    assignment[i] = best;
    sse += best_d;
  }
  return sse;
}

}  // namespace

KMeansResult kmeans_detailed(std::span<const Point2D> points, std::size_t k, RngStream rng,
                             int max_iterations) {
  if (k == 0 || k > points.size()) {
    throw Error(ErrorCode::infeasible,
                fmt::format("kmeans: k={} is infeasible for {} points", k, points.size()));
  }
  const std::size_t n = points.size();

  std::vector<Point2D> centroids;
  centroids.reserve(k);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  auto first = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
  centroids.push_back(points[first]);
  while (centroids.size() < k) {
    const Point2D& last = centroids.back();
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(points[i], last));
      if (nearest[i] > far_d) {
        far_d = nearest[i];
        far = i;
      }
    }
    centroids.push_back(points[far]);
  }

  KMeansResult result;
  result.assignment.assign(n, 0);
  std::vector<std::size_t> previous(n, std::numeric_limits<std::size_t>::max());
  for (int iter = 0; iter < max_iterations; ++iter) {
    result.objective_history.push_back(assign(points, centroids, result.assignment));
    result.iterations = iter + 1;
    if (result.assignment == previous) break;
    previous = result.assignment;

    std::vector<Point2D> sums(k);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums[result.assignment[i]].x += points[i].x;
      sums[result.assignment[i]].y += points[i].y;
      ++counts[result.assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      // An emptied cluster keeps its previous centroid.
      if (counts[c] > 0) {
        centroids[c] = {sums[c].x / static_cast<double>(counts[c]),
                        sums[c].y / static_cast<double>(counts[c])};
      }
    }
  }

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (centroids[a].x != centroids[b].x) return centroids[a].x < centroids[b].x;
    return centroids[a].y < centroids[b].y;
  });
  std::vector<std::size_t> rank(k);
  result.centroids.resize(k);
  for (std::size_t r = 0; r < k; ++r) {
    result.centroids[r] = centroids[order[r]];
    rank[order[r]] = r;
  }
  for (auto& a : result.assignment) a = rank[a];
  return result;
}

std::vector<Point2D> kmeans(std::span<const Point2D> points, std::size_t k, RngStream rng) {
  return kmeans_detailed(points, k, rng).centroids;
}

double idw_interpolate(std::span<const WeightedSample> samples, Point2D query, double power) {
  if (samples.empty()) throw Error(ErrorCode::empty_input, "idw_interpolate: no samples");
  if (!(power > 0.0)) throw Error(ErrorCode::invalid_argument, "idw_interpolate: power must be > 0");
  const double base = samples.front().value;
  double weight_sum = 0.0;
  double value_sum = 0.0;
  for (const auto& s : samples) {
    const double d = distance(query, s.location);
    if (d < 1e-9) return s.value;
    const double w = std::pow(d, -power);
    weight_sum += w;
    value_sum += w * (s.value - base);
  }
  return base + value_sum / weight_sum;
}

double bisect(const std::function<double(double)>& f, double lo, double hi, double tol,
              int max_iterations) {
  double f_lo = f(lo);
  const double f_hi = f(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if (f_lo * f_hi > 0.0) {
    throw Error(ErrorCode::no_sign_change,
                fmt::format("bisect: no sign change on [{}, {}]", lo, hi));
  }
  double mid = 0.5 * (lo + hi);
  for (int i = 0; i < max_iterations; ++i) {
    mid = 0.5 * (lo + hi);
    const double f_mid = f(mid);
    if (f_mid == 0.0 || std::abs(f_mid) <= tol || (hi - lo) < tol) return mid;
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return mid;
}

double finite_diff_gradcheck(const std::function<double(std::span<const double>)>& f,
                             std::span<const double> theta, std::span<const double> analytic_grad,
                             double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::invalid_argument, "gradcheck: eps must be > 0");
  if (theta.size() != analytic_grad.size()) {
    throw Error(ErrorCode::length_mismatch, "gradcheck: gradient length differs from theta");
  }
  std::vector<double> probe(theta.begin(), theta.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + eps;
    const double plus = f(probe);
    probe[i] = saved - eps;
    const double minus = f(probe);
    probe[i] = saved;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw Error(ErrorCode::non_finite, fmt::format("gradcheck: non-finite f at coordinate {}", i));
    }
    const double numeric = (plus - minus) / (2.0 * eps);
    const double a = analytic_grad[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

}  // namespace gridres
