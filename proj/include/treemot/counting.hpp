#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "treemot/factor_graph.hpp"

namespace treemot {

class CountingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Counting numbers of the fractional entropy, with c_edge indexed like the
/// tree edges. chat_var and chat_edge are cached for the message exponents.
struct CountingNumbers {
  std::vector<double> c_var;
  std::vector<double> c_factor;
  std::vector<double> c_edge;
  std::vector<double> chat_var;   ///< c_j + sum_{alpha in N(j)} c_alpha
  std::vector<double> chat_edge;  ///< c_alpha + c_{j alpha}
  bool convex = false;

  /// c_j - sum_alpha c_{j alpha}; equals 1 - N_j when identity A holds.
  double bar_var(const FactorTree& g, VarIndex j) const;
  /// c_alpha + sum_j c_{j alpha}; equals 1 when identity B holds.
  double bar_factor(const FactorTree& g, FactorIndex alpha) const;
};

inline constexpr double kCountingTolerance = 1e-12;

/// Edge numbers from subtree sums: c_{j alpha} is the total weight of the
/// component containing j once the edge (j, alpha) is cut.
CountingNumbers construct_counting(const FactorTree& g, const std::vector<double>& c_var,
                                   const std::vector<double>& c_factor);

/// c_alpha = 1, c_j = 1 - N_j, c_{j alpha} = 0.
CountingNumbers bethe_numbers(const FactorTree& g);

/// c_j = c_alpha = 1 / (|V| + |F|).
CountingNumbers default_uniform(const FactorTree& g);

/// c_j = 0, c_alpha = 1 / |F|.
CountingNumbers experiment_preset(const FactorTree& g);

/// Fills the cached sums and the convexity flag from c_var, c_factor, c_edge.
void finalize_counting(const FactorTree& g, CountingNumbers& c);

/// Largest violation of the per-node and per-factor identities.
double identity_violation(const FactorTree& g, const CountingNumbers& c);

/// JSON file {"c_var": {id: value}, "c_factor": {id: value}}.
CountingNumbers load_counting(const FactorTree& g, const std::filesystem::path& path);

/// Selector used by the command line: uniform, experiment, bethe or file:<path>.
CountingNumbers counting_from_selector(const FactorTree& g, const std::string& selector);

}  // namespace treemot
