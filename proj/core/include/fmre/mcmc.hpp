#pragma once

#include "fmre/distributions.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace fmre {

enum class ProposalKind { UniformHaar, RandomWalk };

struct McmcConfig {
  int iterations = 1500;
  int burn_in = 500;
  int thin = 1;
  ProposalKind proposal = ProposalKind::UniformHaar;
  double random_walk_scale = 0.3;
  std::uint64_t seed = 0;
  // When non-empty, metropolis_hastings appends (step, log_target, accepted)
  // rows to this CSV path.
  std::string debug_trace_csv;

  void validate() const {
    if (burn_in < 0 || iterations <= burn_in) {
      throw std::invalid_argument("McmcConfig: need iterations > burn_in >= 0");
    }
    if (thin < 1) throw std::invalid_argument("McmcConfig: thin must be >= 1");
  }
};

template <typename State>
struct ChainState {
  State current;
  double log_target = 0.0;
  int accepted_count = 0;
  int step_index = 0;
};

template <typename State>
struct ChainTrace {
  std::vector<State> states;
  double acceptance_rate = 0.0;
  std::uint64_t seed = 0;
};

void dump_trace_csv(const std::string& path,
                    const std::vector<std::tuple<int, double, int>>& rows);

/// Metropolis-Hastings driver. `propose` returns the candidate together with
/// the log Hastings correction log q(x|x') - log q(x'|x) (zero for symmetric
/// and for independence-from-Haar proposals). A NaN target at the initial
/// state is fatal; a NaN at a proposal is treated as -inf and rejected.
/// Retains states s with s >= burn_in and (s - burn_in + 1) % thin == 0, so
/// the trace length is (iterations - burn_in) / thin.
template <typename State, typename LogTarget, typename Proposal>
ChainTrace<State> metropolis_hastings(LogTarget&& log_target, Proposal&& propose, State init,
                                      const McmcConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  ChainState<State> chain{std::move(init), 0.0, 0, 0};
  chain.log_target = log_target(chain.current);
  if (std::isnan(chain.log_target)) {
    throw std::runtime_error("metropolis_hastings: log target is NaN at the initial state");
  }
  ChainTrace<State> trace;
  trace.seed = cfg.seed;
  trace.states.reserve((cfg.iterations - cfg.burn_in) / cfg.thin);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::tuple<int, double, int>> debug_rows;
  for (int s = 0; s < cfg.iterations; ++s) {
    auto [candidate, log_correction] = propose(chain.current, rng);
    double lt = log_target(candidate);
    int accepted = 0;
    if (!std::isnan(lt)) {
      double log_ratio = lt - chain.log_target + log_correction;
      if (log_ratio >= 0.0 || std::log(unif(rng)) < log_ratio) {
        chain.current = std::move(candidate);
        chain.log_target = lt;
        ++chain.accepted_count;
        accepted = 1;
      }
    }
    chain.step_index = s + 1;
    if (s >= cfg.burn_in && (s - cfg.burn_in + 1) % cfg.thin == 0) {
      trace.states.push_back(chain.current);
    }
    if (!cfg.debug_trace_csv.empty()) debug_rows.emplace_back(s, chain.log_target, accepted);
  }
  trace.acceptance_rate =
      static_cast<double>(chain.accepted_count) / static_cast<double>(cfg.iterations);
  if (!cfg.debug_trace_csv.empty()) dump_trace_csv(cfg.debug_trace_csv, debug_rows);
  return trace;
}

/// Gibbs sampler for the torus-model posterior p(mu | data, kappa, lambda)
/// under the uniform prior. One iteration is one systematic sweep over the
/// p components; retention follows the same rule as metropolis_hastings.
ChainTrace<TorusPoint> gibbs_torus_posterior(const std::vector<TorusPoint>& data,
                                             const Vec& kappa, const Vec& lambda,
                                             const McmcConfig& cfg, std::mt19937_64& rng);

/// Initial-positive-sequence (Geyer) autocorrelation estimator. A constant
/// trace returns n by convention.
double effective_sample_size(const std::vector<double>& trace);

}  // namespace fmre
