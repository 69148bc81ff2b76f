#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "treemot/mot_problem.hpp"

namespace treemot {

/// Square grid world. Cell c sits at (x, y) = (c % side, c / side).
struct GridModel {
  std::size_t side = 10;
  std::array<double, 2> force{0.70710678118654752, 0.70710678118654752};
  std::size_t goal = 99;
  /// (w_dist, w_force, w_goal, w_stay)
  std::array<double, 4> weights{3.0, 5.0, 5.0, 10.0};

  static GridModel with_side(std::size_t side);
  std::size_t cells() const { return side * side; }
};

struct SensorArray {
  std::vector<std::array<double, 2>> positions;
  double decay = 1.0;

  /// n x n lattice at ((i + 0.5) side / n - 0.5, (k + 0.5) side / n - 0.5).
  static SensorArray lattice(std::size_t side, std::size_t per_axis = 4, double decay = 1.0);
};

struct AggregateObservation {
  /// counts[t][s]: agents registered at sensor s during step t.
  std::vector<std::vector<std::size_t>> counts;
  std::size_t population = 0;
};

/// Row-major rows x cols matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Feature values for a move from `cur` to `next`: (f_dist, f_force, f_goal, f_stay).
std::array<double, 4> move_features(const GridModel& m, std::size_t cur, std::size_t next);

/// P(next | cur), proportional to exp(w . features) over the 3x3 neighborhood.
Matrix transition_kernel(const GridModel& m);

/// P(sensor | cell), proportional to exp(-decay * distance).
Matrix observation_kernel(const SensorArray& s, std::size_t side);

/// Two blobs near the bottom edge (left and center).
std::vector<double> default_prior(std::size_t side);

struct Simulation {
  /// occupancy[t][c]: agents in cell c at step t.
  std::vector<std::vector<std::size_t>> occupancy;
  AggregateObservation observations;
};

/// Independent agents: initial cell from `prior`, then the transition kernel;
/// each agent registers at exactly one sensor per step.
Simulation simulate(const GridModel& m, const SensorArray& s, const std::vector<double>& prior,
                    std::size_t population, std::size_t steps, std::uint64_t seed);

/// Cost for moves the kernel forbids; exp(-500) stands in for zero.
inline constexpr double kForbiddenCost = 500.0;

/// Chain h_1..h_T with transition factors and one observation leaf y_t per
/// step; the leaves are constrained to the normalized sensor counts and the
/// prior enters as the node potential of h_1. Variables are declared
/// h_1, y_1, h_2, y_2, ...
MotProblem build_filtering_problem(const GridModel& m, const SensorArray& s,
                                   const AggregateObservation& obs,
                                   const std::vector<double>& prior);

/// Estimated occupancy distributions of the hidden chain, one per step.
std::vector<std::vector<double>> occupancy_estimate(const MotProblem& filtering,
                                                    const BeliefSet& beliefs);

double total_variation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace treemot
