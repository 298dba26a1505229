#include "ucrlb/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <tuple>

#include "ucrlb/verify.hpp"

namespace ucrlb {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_results_csv(std::ostream& out, const std::vector<ExperimentResult>& results) {
  std::vector<const ExperimentResult*> order;
  for (const auto& r : results) order.push_back(&r);
  std::stable_sort(order.begin(), order.end(), [](const ExperimentResult* x, const ExperimentResult* y) {
    return std::tie(x->algo, x->env) < std::tie(y->algo, y->env);
  });
  out << "algo,env,trial,t,cum_regret,episodes\n";
  for (const ExperimentResult* r : order) {
    for (const RegretTrace& tr : r->traces) {
      for (std::size_t i = 0; i < tr.checkpoints.size(); ++i) {
        out << r->algo << ',' << r->env << ',' << tr.trial << ',' << tr.checkpoints[i] << ','
            << format_double(tr.cumulative_regret[i]) << ',' << tr.episodes[i] << '\n';
      }
    }
  }
}

void write_summary_csv(std::ostream& out, const std::vector<ExperimentResult>& results) {
  std::vector<const ExperimentResult*> order;
  for (const auto& r : results) order.push_back(&r);
  std::stable_sort(order.begin(), order.end(), [](const ExperimentResult* x, const ExperimentResult* y) {
    return std::tie(x->algo, x->env) < std::tie(y->algo, y->env);
  });
  out << "algo,env,t,mean_regret,std_regret,mean_episodes\n";
  for (const ExperimentResult* r : order) {
    const RegretSummary& s = r->summary;
    for (std::size_t i = 0; i < s.checkpoints.size(); ++i) {
      out << r->algo << ',' << r->env << ',' << s.checkpoints[i] << ',' << format_double(s.mean[i]) << ','
          << format_double(s.stddev[i]) << ',' << format_double(s.mean_episodes[i]) << '\n';
    }
  }
}

void write_ds_sweep_csv(std::ostream& out, const DsSweepResult& sweep, bool reference) {
  // c minimising sum (y - c sqrt(x))^2 is sum(y sqrt(x)) / sum(x).
  std::map<std::string, double> coef;
  if (reference) {
    std::map<std::string, std::pair<double, double>> acc;
    for (const auto& row : sweep.rows) {
      acc[row.algo].first += row.norm_regret * std::sqrt(row.point.ds());
      acc[row.algo].second += row.point.ds();
    }
    for (const auto& [algo, a] : acc) coef[algo] = a.second > 0.0 ? a.first / a.second : 0.0;
  }
  out << "algo,ds,s,d,norm_regret" << (reference ? ",reference" : "") << '\n';
  for (const auto& row : sweep.rows) {
    out << row.algo << ',' << format_double(row.point.ds()) << ',' << row.point.num_states << ','
        << format_double(row.point.diameter) << ',' << format_double(row.norm_regret);
    if (reference) out << ',' << format_double(coef[row.algo] * std::sqrt(row.point.ds()));
    out << '\n';
  }
}

void write_bounds_csv(std::ostream& out, double diameter, std::size_t num_states, std::size_t num_actions,
                      const std::vector<std::uint64_t>& checkpoints, double delta) {
  out << "t,episode_bound,theory_reference_shape_constants_as_printed\n";
  if (!(diameter > 0.0)) return;
  for (std::uint64_t t : checkpoints) {
    const double T = static_cast<double>(t);
    if (!(T > static_cast<double>(num_states * num_actions)) || t < 2) continue;
    const BoundReport b = bound_report(diameter, num_states, num_actions, T, delta);
    out << t << ',' << format_double(b.episode_bound) << ',' << format_double(b.theoretical_regret) << '\n';
  }
}

}  // namespace ucrlb
