#ifndef MOPE_MDP_HPP
#define MOPE_MDP_HPP

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mope {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when an MDP, policy or distribution breaks one of its invariants.
class ValidationError : public std::invalid_argument {
public:
   using std::invalid_argument::invalid_argument;
};

/// Raised when a ratio needs a denominator that is zero somewhere.
class SupportError : public std::domain_error {
public:
   using std::domain_error::domain_error;
};

struct RewardOutcome {
   double value = 0.0;
   double prob = 0.0;
};

using RewardDistribution = std::vector<RewardOutcome>;

/**
   Finite discounted MDP.

   State-action pairs are flattened as s * n_actions + a everywhere in the
   library; vectors "over (s,a)" use that order.
*/
struct TabularMDP {
   std::size_t n_states = 0;
   std::size_t n_actions = 0;
   double gamma = 0.0;
   double r_max = 1.0;
   Vector d0;
   /// Row (s,a), column s'.
   Matrix transition;
   /// One distribution per flattened (s,a).
   std::vector<RewardDistribution> rewards;

   std::size_t n_pairs() const { return n_states * n_actions; }
   std::size_t index(std::size_t s, std::size_t a) const { return s * n_actions + a; }

   /// E[r | s,a] over pairs.
   Vector mean_reward() const;
   /// Var(r | s,a) over pairs.
   Vector reward_variance() const;
   /// E[r^2 | s,a] over pairs.
   Vector reward_second_moment() const;
};

struct Policy {
   /// probs(s, a) = pi(a|s).
   Matrix probs;

   std::size_t n_states() const { return static_cast<std::size_t>(probs.rows()); }
   std::size_t n_actions() const { return static_cast<std::size_t>(probs.cols()); }
};

/// Law of the batch data: s ~ P_S, a ~ pi_b(.|s).
class DataDistribution {
public:
   DataDistribution(Vector state_weights, Policy behavior);

   const Vector& state_weights() const { return state_weights_; }
   const Policy& behavior() const { return behavior_; }
   /// P_{S,A}(s,a) = P_S(s) pi_b(a|s).
   const Vector& joint() const { return joint_; }
   bool full_support() const;

private:
   Vector state_weights_;
   Policy behavior_;
   Vector joint_;
};

struct ExactSolution {
   Vector q;
   Vector v;
   Vector occupancy;
   Vector w;
   double j = 0.0;
};

/// Evaluation policy plus data law on one MDP.
struct OpeProblem {
   TabularMDP mdp;
   Policy pi_e;
   DataDistribution dist;
};

void validate(const TabularMDP& mdp);
void validate(const Policy& pi, std::size_t n_states, std::size_t n_actions);
void validate(const DataDistribution& dist, const TabularMDP& mdp);

/// Matrix mapping f over pairs to f(s, pi): (|S| x |S||A|).
Matrix policy_average(const Policy& pi);
/// P^pi over pairs: entry ((s,a),(s',a')) = P(s'|s,a) pi(a'|s').
Matrix pair_transition(const TabularMDP& mdp, const Policy& pi);
/// d0(s) pi(a|s) over pairs.
Vector initial_pair_distribution(const TabularMDP& mdp, const Policy& pi);
/// Marginal law of s' under the data distribution.
Vector next_state_marginal(const TabularMDP& mdp, const DataDistribution& dist);

Vector solve_q(const TabularMDP& mdp, const Policy& pi);
Vector state_value(const Policy& pi, const Vector& q);
Vector discounted_occupancy(const TabularMDP& mdp, const Policy& pi);
Vector weight_function(const TabularMDP& mdp, const Policy& pi_e, const DataDistribution& dist);
double policy_value(const TabularMDP& mdp, const Policy& pi_e);
Vector instantaneous_ratio(const Policy& pi_e, const Policy& pi_b);

/// q, v, occupancy, w and J in one pass; w is left empty when the data law lacks full support.
ExactSolution exact_solution(const TabularMDP& mdp, const Policy& pi_e, const DataDistribution& dist);

// --- seeded random instances --------------------------------------------

struct RandomMdpOptions {
   std::size_t n_states = 3;
   std::size_t n_actions = 2;
   double gamma = 0.9;
   double r_max = 1.0;
   /// Number of support points per reward distribution.
   std::size_t reward_support = 3;
};

/// Dirichlet(1) transition rows, Dirichlet(1) initial law, rewards on a random grid in [0, r_max].
TabularMDP random_mdp(const RandomMdpOptions& options, std::uint64_t seed);
/// Dirichlet(1) rows mixed with the uniform policy: (1 - mix) * Dir + mix * uniform.
Policy random_policy(std::size_t n_states, std::size_t n_actions, std::uint64_t seed, double mix = 0.0);
Vector random_simplex(std::size_t n, std::uint64_t seed, double mix = 0.0);
Policy uniform_policy(std::size_t n_states, std::size_t n_actions);

/// Stationary state law of the behavior kernel sum_a pi(a|s) P(s'|s,a).
Vector stationary_state_distribution(const TabularMDP& mdp, const Policy& behavior);

}  // namespace mope

#endif  // MOPE_MDP_HPP
