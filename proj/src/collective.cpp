#include "treemot/collective.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "log_math.hpp"

namespace treemot {

namespace {

std::array<double, 2> position(std::size_t side, std::size_t cell) {
  return {static_cast<double>(cell % side), static_cast<double>(cell / side)};
}

void normalize_row(std::vector<double>& data, std::size_t row, std::size_t cols) {
  double total = 0.0;
  for (std::size_t c = 0; c < cols; ++c) total += data[row * cols + c];
  for (std::size_t c = 0; c < cols; ++c) data[row * cols + c] /= total;
}

}  // namespace

GridModel GridModel::with_side(std::size_t side) {
  if (side < 2) throw std::invalid_argument("grid side must be at least 2");
  GridModel m;
  m.side = side;
  m.goal = side * side - 1;
  return m;
}

SensorArray SensorArray::lattice(std::size_t side, std::size_t per_axis, double decay) {
  if (per_axis == 0) throw std::invalid_argument("sensor lattice needs at least one sensor");
  if (!(decay > 0.0)) throw std::invalid_argument("sensor decay must be positive");
  SensorArray s;
  s.decay = decay;
  const double step = static_cast<double>(side) / static_cast<double>(per_axis);
  for (std::size_t k = 0; k < per_axis; ++k)
    for (std::size_t i = 0; i < per_axis; ++i)
      s.positions.push_back({(static_cast<double>(i) + 0.5) * step - 0.5,
                             (static_cast<double>(k) + 0.5) * step - 0.5});
  return s;
}

std::array<double, 4> move_features(const GridModel& m, std::size_t cur, std::size_t next) {
  const auto a = position(m.side, cur);
  const auto b = position(m.side, next);
  const double dx = b[0] - a[0];
  const double dy = b[1] - a[1];
  const double len = std::hypot(dx, dy);
  std::array<double, 4> f{-len, 0.0, 0.0, cur == next ? 1.0 : 0.0};
  if (len > 0.0) {
    f[1] = (dx * m.force[0] + dy * m.force[1]) / (len * std::hypot(m.force[0], m.force[1]));
    const auto g = position(m.side, m.goal);
    const double gx = g[0] - a[0];
    const double gy = g[1] - a[1];
    const double glen = std::hypot(gx, gy);
    if (glen > 0.0) f[2] = (dx * gx + dy * gy) / (len * glen);
  }
  return f;
}

Matrix transition_kernel(const GridModel& m) {
  const std::size_t n = m.cells();
  Matrix out{n, n, std::vector<double>(n * n, 0.0)};
  for (std::size_t cur = 0; cur < n; ++cur) {
    const auto a = position(m.side, cur);
    std::vector<std::pair<std::size_t, double>> scores;
    double best = -std::numeric_limits<double>::infinity();
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const double x = a[0] + dx;
        const double y = a[1] + dy;
        if (x < 0 || y < 0 || x >= static_cast<double>(m.side) || y >= static_cast<double>(m.side))
          continue;
        const std::size_t next = static_cast<std::size_t>(y) * m.side + static_cast<std::size_t>(x);
        const auto f = move_features(m, cur, next);
        double score = 0.0;
        for (std::size_t k = 0; k < 4; ++k) score += m.weights[k] * f[k];
        scores.emplace_back(next, score);
        best = std::max(best, score);
      }
    }
    for (const auto& [next, score] : scores) out.data[cur * n + next] = std::exp(score - best);
    normalize_row(out.data, cur, n);
  }
  return out;
}

Matrix observation_kernel(const SensorArray& s, std::size_t side) {
  const std::size_t n = side * side;
  const std::size_t k = s.positions.size();
  Matrix out{n, k, std::vector<double>(n * k, 0.0)};
  for (std::size_t cell = 0; cell < n; ++cell) {
    const auto a = position(side, cell);
    std::vector<double> logs(k);
    for (std::size_t j = 0; j < k; ++j)
      logs[j] = -s.decay * std::hypot(a[0] - s.positions[j][0], a[1] - s.positions[j][1]);
    const auto probs = detail::exp_normalized(logs);
    std::copy(probs.begin(), probs.end(), out.data.begin() + static_cast<std::ptrdiff_t>(cell * k));
  }
  return out;
}

std::vector<double> default_prior(std::size_t side) {
  const double s = static_cast<double>(side);
  const double sigma = 0.08 * s;
  const std::array<std::array<double, 2>, 2> centers{{{0.15 * s, 0.15 * s}, {0.5 * s, 0.15 * s}}};
  std::vector<double> prior(side * side, 0.0);
  for (std::size_t c = 0; c < prior.size(); ++c) {
    const auto p = position(side, c);
    for (const auto& mu : centers) {
      const double d2 = std::pow(p[0] - mu[0], 2) + std::pow(p[1] - mu[1], 2);
      prior[c] += std::exp(-d2 / (2.0 * sigma * sigma));
    }
  }
  detail::normalize_in_place(prior);
  return prior;
}

Simulation simulate(const GridModel& m, const SensorArray& s, const std::vector<double>& prior,
                    std::size_t population, std::size_t steps, std::uint64_t seed) {
  if (population == 0) throw std::invalid_argument("population must be at least 1");
  const std::size_t n = m.cells();
  if (prior.size() != n) throw std::invalid_argument("prior length does not match the grid");
  const Matrix trans = transition_kernel(m);
  const Matrix obs = observation_kernel(s, m.side);

  std::vector<std::discrete_distribution<std::size_t>> move, sense;
  for (std::size_t c = 0; c < n; ++c) {
    move.emplace_back(trans.data.begin() + static_cast<std::ptrdiff_t>(c * n),
                      trans.data.begin() + static_cast<std::ptrdiff_t>((c + 1) * n));
    sense.emplace_back(obs.data.begin() + static_cast<std::ptrdiff_t>(c * obs.cols),
                       obs.data.begin() + static_cast<std::ptrdiff_t>((c + 1) * obs.cols));
  }
  std::discrete_distribution<std::size_t> start(prior.begin(), prior.end());
  std::mt19937_64 rng(seed);

  Simulation out;
  out.observations.population = population;
  out.occupancy.assign(steps, std::vector<std::size_t>(n, 0));
  out.observations.counts.assign(steps, std::vector<std::size_t>(obs.cols, 0));
  for (std::size_t agent = 0; agent < population; ++agent) {
    std::size_t cell = start(rng);
    for (std::size_t t = 0; t < steps; ++t) {
      if (t > 0) cell = move[cell](rng);
      ++out.occupancy[t][cell];
      ++out.observations.counts[t][sense[cell](rng)];
    }
  }
  return out;
}

MotProblem build_filtering_problem(const GridModel& m, const SensorArray& s,
                                   const AggregateObservation& obs,
                                   const std::vector<double>& prior) {
  const std::size_t n = m.cells();
  const std::size_t k = s.positions.size();
  const std::size_t steps = obs.counts.size();
  if (steps == 0) throw std::invalid_argument("observations cover no time steps");
  if (prior.size() != n) throw std::invalid_argument("prior length does not match the grid");
  const Matrix trans = transition_kernel(m);
  const Matrix sense = observation_kernel(s, m.side);
  auto cost_of = [](double prob) { return prob > 0.0 ? std::min(-std::log(prob), kForbiddenCost) : kForbiddenCost; };

  MotProblem p;
  p.epsilon = 1.0;
  for (std::size_t t = 0; t < steps; ++t) {
    p.tree.add_variable("h" + std::to_string(t + 1), n, t == 0 ? prior : std::vector<double>{});
    p.tree.add_variable("y" + std::to_string(t + 1), k);
  }
  for (std::size_t t = 0; t < steps; ++t) {
    if (obs.counts[t].size() != k) throw std::invalid_argument("count vector length differs from the sensor count");
    const std::size_t total = std::accumulate(obs.counts[t].begin(), obs.counts[t].end(), std::size_t{0});
    if (total != obs.population)
      throw std::invalid_argument("counts at step " + std::to_string(t + 1) + " sum to " +
                                  std::to_string(total) + ", not the population " +
                                  std::to_string(obs.population));
    std::vector<double> c(sense.data.size());
    for (std::size_t q = 0; q < c.size(); ++q) c[q] = cost_of(sense.data[q]);
    p.tree.add_factor("obs" + std::to_string(t + 1), std::vector<VarIndex>{2 * t, 2 * t + 1}, std::move(c));
    if (t + 1 < steps) {
      std::vector<double> ct(trans.data.size());
      for (std::size_t q = 0; q < ct.size(); ++q) ct[q] = cost_of(trans.data[q]);
      p.tree.add_factor("move" + std::to_string(t + 1), std::vector<VarIndex>{2 * t, 2 * t + 2},
                        std::move(ct));
    }
    std::vector<double> mu(k);
    for (std::size_t q = 0; q < k; ++q)
      mu[q] = static_cast<double>(obs.counts[t][q]) / static_cast<double>(obs.population);
    // Exact division can leave the sum a few ulps away from one.
    detail::normalize_in_place(mu);
    p.constraints[2 * t + 1] = std::move(mu);
  }
  require_valid(p);
  return p;
}

std::vector<std::vector<double>> occupancy_estimate(const MotProblem& filtering,
                                                    const BeliefSet& beliefs) {
  std::vector<std::vector<double>> out;
  for (VarIndex v = 0; v < filtering.tree.num_variables(); v += 2) out.push_back(beliefs.nodes.at(v));
  return out;
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  return 0.5 * detail::l1_distance(a, b);
}

}  // namespace treemot
