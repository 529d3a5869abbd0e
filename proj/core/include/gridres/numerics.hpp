#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "gridres/rng.hpp"

namespace gridres {

/// Planar coordinates in kilometres.
struct Point2D {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2D&) const = default;
};

double distance(Point2D a, Point2D b) noexcept;
double squared_distance(Point2D a, Point2D b) noexcept;

struct KMeansResult {
  std::vector<Point2D> centroids;         ///< sorted by (x, y)
  std::vector<std::size_t> assignment;    ///< index into centroids, per input point
  std::vector<double> objective_history;  ///< SSE after each assignment step
  int iterations = 0;
};

/// Lloyd's algorithm with farthest-point seeding. The first seed is the point
/// picked by the stream's first draw; each further seed is the point farthest
/// from the seeds chosen so far (lowest index on ties). Stops at an
/// assignment fixpoint or after max_iterations.
KMeansResult kmeans_detailed(std::span<const Point2D> points, std::size_t k, RngStream rng,
                             int max_iterations = 100);

std::vector<Point2D> kmeans(std::span<const Point2D> points, std::size_t k, RngStream rng);

struct WeightedSample {
  Point2D location;
  double value = 0.0;
};

/// Inverse-distance weighting. A query closer than 1e-9 km to a sample
/// returns that sample's value.
double idw_interpolate(std::span<const WeightedSample> samples, Point2D query, double power = 2.0);

/// Bisection for a monotone function with f(lo) * f(hi) <= 0.
double bisect(const std::function<double(double)>& f, double lo, double hi, double tol,
              int max_iterations = 200);

/// Max relative error between an analytic gradient and central differences,
/// relative to max(|analytic|, |numeric|, 1e-8) per coordinate.
double finite_diff_gradcheck(const std::function<double(std::span<const double>)>& f,
                             std::span<const double> theta, std::span<const double> analytic_grad,
                             double eps);

}  // namespace gridres
