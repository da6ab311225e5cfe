#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "deconv/error.hpp"
#include "deconv/rng.hpp"

namespace deconv {

/// Ordered MCMC samples with their unnormalized log-posteriors.
template <class Params>
struct PosteriorChain {
  std::vector<Params> samples;
  std::vector<double> log_posteriors;
  std::size_t map_index = 0;
  /// Accepted proposals per update block, and proposals made per block.
  std::vector<std::size_t> accepted;
  std::size_t proposals = 0;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  void push(Params p, double log_posterior) {
    if (samples.empty() || log_posterior > log_posteriors[map_index]) map_index = samples.size();
    samples.push_back(std::move(p));
    log_posteriors.push_back(log_posterior);
  }

  double acceptance_rate(std::size_t block = 0) const {
    return proposals == 0 ? 0.0
                          : static_cast<double>(accepted.at(block)) / static_cast<double>(proposals);
  }

  /// Sample with the largest stored log-posterior; earliest wins ties.
  const Params& map_sample() const {
    if (samples.empty()) throw Error(ErrorKind::InvalidParameter, "empty chain");
    return samples[map_index];
  }
};

template <class State>
struct Proposal {
  State state;
  /// log q(current | proposed) - log q(proposed | current)
  double log_hastings = 0.0;
};

template <class State>
struct MhOutcome {
  State state;
  double log_target;
  bool accepted;
};

/// One Metropolis-Hastings transition. Accepts when log u < log pi(prop) - log pi(cur)
/// + log_hastings; proposals with a non-finite target are rejected.
template <class State, class Target, class Propose>
MhOutcome<State> metropolis_hastings(const State& current, double current_log_target,
                                     Target&& target, Propose&& propose, Rng& rng) {
  Proposal<State> prop = propose(current, rng);
  double proposed = target(prop.state);
  double log_u = std::log(rng.uniform());
  if (std::isnan(proposed) || proposed == -INFINITY || proposed == INFINITY)
    return {current, current_log_target, false};
  double log_ratio = proposed - current_log_target + prop.log_hastings;
  if (log_u < log_ratio) return {std::move(prop.state), proposed, true};
  return {current, current_log_target, false};
}

}  // namespace deconv
