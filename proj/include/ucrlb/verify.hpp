#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ucrlb/confidence.hpp"
#include "ucrlb/evi.hpp"
#include "ucrlb/random.hpp"

namespace ucrlb {

/// Set function over subsets of states encoded as bitmasks.
using SetFunction = std::function<double(std::uint64_t subset)>;

/// p̂ for every subset mask of a pair, indexed by mask (S <= 20).
std::vector<double> all_subset_bounds(const CountsTable& table, State s, Action a, const ConfidenceLevels& levels);

/// First subset whose mass under p_tilde exceeds its bound by more than
/// 1e-12, if any. Throws GuardError for S > 20.
std::optional<std::uint64_t> find_subset_violation(std::span<const double> p_tilde, const CountsTable& table,
                                                   State s, Action a, const ConfidenceLevels& levels);

bool check_all_subsets(std::span<const double> p_tilde, const CountsTable& table, State s, Action a,
                       const ConfidenceLevels& levels);

/// max p.u over the simplex grid with the given step, keeping only points
/// that satisfy every subset bound (bounds indexed by mask, size 2^S).
/// Throws GuardError for S > 4.
double inner_max_oracle(std::span<const double> u, std::span<const double> subset_bounds, double step);

double inner_max_oracle(const ValueVector& u, const CountsTable& table, State s, Action a,
                        const ConfidenceLevels& levels, double step = 1e-3);

/// A triple (X, Y, x) breaking f(Y) - f(Y\x) <= f(X) - f(X\x) + tol.
struct SubmodularityViolation {
  std::uint64_t x_set = 0;
  std::uint64_t y_set = 0;
  State element = 0;
  double gap = 0.0;
};

/// Exhaustive check over all X ⊆ Y ⊆ {0..S-1} and x ∈ X. Throws
/// GuardError for S > 6.
std::optional<SubmodularityViolation> find_submodularity_violation(std::size_t num_states, const SetFunction& f,
                                                                   double tol = 1e-12);

bool check_submodularity(const CountsTable& table, State s, Action a, const ConfidenceLevels& levels);

/// p̄(X) + g(p̄(X)) with a convex g in place of the concave Bernstein
/// radius. Used as the negative control of the submodularity check.
SetFunction convex_radius_bound(const CountsTable& table, State s, Action a);

/// S A log2(8T / (S A)). Throws ConfigError unless S, A >= 1 and T > S A.
double episode_bound(std::size_t num_states, std::size_t num_actions, double horizon);

/// Regret bound of UCRL-V with constants as printed (reference shape only):
///   2^10 sqrt(D T S A min(ln(D+1), S) ln(8T/SA) ln(B S/δ)) + 64 D S A ln(8T/SA) ln(B/δ),
/// B = 32 S A ln T. Throws ConfigError on domain violations.
double theoretical_regret_bound(double diameter, std::size_t num_states, std::size_t num_actions, double horizon,
                                double delta);

struct BoundReport {
  double theoretical_regret = 0.0;
  double episode_bound = 0.0;
  double diameter = 0.0;
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  double horizon = 0.0;
  double delta = 0.0;
};

BoundReport bound_report(double diameter, std::size_t num_states, std::size_t num_actions, double horizon,
                         double delta);

/// Random count table for property tests. Each pair gets a log-uniform
/// visit count in [1, max_visits] (zero with probability 1/10), next-state
/// counts from a sparse random distribution and a consistent reward mean
/// and m2.
CountsTable random_counts_table(std::size_t num_states, std::size_t num_actions, Stream& stream,
                                std::uint64_t max_visits = 10'000);

/// Random confidence levels for t_k log-uniform in [1, 10^6] and δ = 0.05.
ConfidenceLevels random_levels(std::size_t num_states, std::size_t num_actions, Stream& stream);

// --- suites behind `ucrlb verify` ------------------------------------------

struct VerifyOptions {
  bool corrupt = false;  // feed each oracle inputs it must reject
  std::uint64_t seed = 0;
  std::size_t cases = 1000;
};

struct SuiteOutcome {
  std::string scope;
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::string detail;
  std::vector<std::string> counterexamples;  // one JSON object per line, capped

  bool passed() const { return failures == 0; }
};

/// subsets, oracle, submodularity, coverage, evi.
const std::vector<std::string>& verify_scopes();

/// Runs one named suite. Unknown names throw ConfigError.
SuiteOutcome run_verify_suite(const std::string& scope, const VerifyOptions& options = {});

}  // namespace ucrlb
