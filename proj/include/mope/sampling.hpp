#ifndef MOPE_SAMPLING_HPP
#define MOPE_SAMPLING_HPP

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "mope/function_classes.hpp"
#include "mope/mdp.hpp"

namespace mope {

struct Transition {
   std::size_t s = 0;
   std::size_t a = 0;
   double r = 0.0;
   std::size_t s_next = 0;

   friend bool operator==(const Transition&, const Transition&) = default;
};

struct TransitionDataset {
   std::vector<Transition> tuples;
   std::uint64_t seed = 0;
   std::size_t n_states = 0;
   std::size_t n_actions = 0;

   std::size_t size() const { return tuples.size(); }
};

/// Checks index ranges and that every reward lies in the support of reward(s,a).
void validate(const TransitionDataset& data, const TabularMDP& mdp);

/// i.i.d. draws s ~ P_S, a ~ pi_b, r ~ P_{R|S,A}, s' ~ P(.|s,a).
TransitionDataset draw_dataset(const TabularMDP& mdp, const DataDistribution& dist, std::size_t n, std::uint64_t seed);

/// Seeded random halving; sizes differ by at most one.
std::pair<TransitionDataset, TransitionDataset> split_half(const TransitionDataset& data, std::uint64_t seed);

/// Shuffle with `seed`, then cut into `bins` contiguous pieces of size floor(n/T) or ceil(n/T).
std::vector<TransitionDataset> split_bins(const TransitionDataset& data, std::size_t bins, std::uint64_t seed);

/**
   Sufficient statistics of a batch over (s,a,s') cells: fraction of
   tuples, and the sums of r and r^2 divided by n. Every estimator in the
   library is a function of these, so the empirical and population paths
   share one implementation.

   In population mode the cells hold exact expectations,
   mass = P_{S,A}(s,a) P(s'|s,a), reward = mass E[r|s,a], reward_sq = mass E[r^2|s,a].
*/
struct TransitionStats {
   std::size_t n_states = 0;
   std::size_t n_actions = 0;
   /// Row (s,a), column s'.
   Matrix mass;
   Matrix reward;
   Matrix reward_sq;
   /// Sample size; empty in population mode.
   std::optional<std::size_t> n;

   bool population() const { return !n.has_value(); }
   Vector pair_mass() const { return mass.rowwise().sum(); }
   Vector pair_reward() const { return reward.rowwise().sum(); }

   static TransitionStats from_dataset(const TransitionDataset& data);
   static TransitionStats from_population(const TabularMDP& mdp, const DataDistribution& dist);
};

/**
   Moment matrices for a (w-class, q-class) pair.

      G   = E[phi_w phi_w^T]
      H   = E[(-phi_q + gamma phi'_q)(-phi_q + gamma phi'_q)^T]
      M   = E[phi_w (phi_q - gamma phi'_q)^T]
      b   = E[phi_w r]
      mu0 = E_{d0}[phi_q(s0, pi_e)]

   with phi'_q = sum_{a'} pi_e(a'|s') phi_q(s', a').
*/
struct MomentSet {
   Matrix g;
   Matrix h;
   Matrix m;
   Vector b;
   Vector mu0;
   double gamma = 0.0;
   std::optional<std::size_t> n;

   bool population() const { return !n.has_value(); }
};

MomentSet moments(const TransitionStats& stats, const LinearClass& w_class, const LinearClass& q_class,
                  const TabularMDP& mdp, const Policy& pi_e);
MomentSet moments(const TransitionDataset& data, const LinearClass& w_class, const LinearClass& q_class,
                  const TabularMDP& mdp, const Policy& pi_e);
/// Exact expectations over the discrete law.
MomentSet population_moments(const TabularMDP& mdp, const DataDistribution& dist, const LinearClass& w_class,
                             const LinearClass& q_class, const Policy& pi_e);

}  // namespace mope

#endif  // MOPE_SAMPLING_HPP
