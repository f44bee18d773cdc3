#include "mope/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mope/rng.hpp"

namespace mope {

namespace {

constexpr double kSumTolerance = 1e-12;

std::string cell(std::size_t s, std::size_t a)
{
   std::ostringstream out;
   out << "(s=" << s << ", a=" << a << ")";
   return out.str();
}

void check_simplex(const Eigen::Ref<const Vector>& p, const std::string& what)
{
   for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (!std::isfinite(p(i)))
         throw ValidationError(what + ": non-finite probability at index " + std::to_string(i));
      if (p(i) < 0.0)
         throw ValidationError(what + ": negative probability at index " + std::to_string(i));
   }
   if (std::abs(p.sum() - 1.0) > kSumTolerance)
      throw ValidationError(what + ": row not stochastic (sum " + std::to_string(p.sum()) + ")");
}

}  // namespace

Vector TabularMDP::mean_reward() const
{
   Vector out = Vector::Zero(static_cast<Eigen::Index>(n_pairs()));
   for (std::size_t i = 0; i < rewards.size(); ++i)
      for (const auto& o : rewards[i])
         out(static_cast<Eigen::Index>(i)) += o.prob * o.value;
   return out;
}

Vector TabularMDP::reward_second_moment() const
{
   Vector out = Vector::Zero(static_cast<Eigen::Index>(n_pairs()));
   for (std::size_t i = 0; i < rewards.size(); ++i)
      for (const auto& o : rewards[i])
         out(static_cast<Eigen::Index>(i)) += o.prob * o.value * o.value;
   return out;
}

Vector TabularMDP::reward_variance() const
{
   const Vector mean = mean_reward();
   Vector out = Vector::Zero(mean.size());
   for (std::size_t i = 0; i < rewards.size(); ++i) {
      const double m = mean(static_cast<Eigen::Index>(i));
      for (const auto& o : rewards[i])
         out(static_cast<Eigen::Index>(i)) += o.prob * (o.value - m) * (o.value - m);
   }
   return out;
}

DataDistribution::DataDistribution(Vector state_weights, Policy behavior)
    : state_weights_(std::move(state_weights)), behavior_(std::move(behavior))
{
   if (state_weights_.size() != behavior_.probs.rows())
      throw ValidationError("state weights and behavior policy disagree on |S|");
   const auto n_s = behavior_.probs.rows();
   const auto n_a = behavior_.probs.cols();
   joint_.resize(n_s * n_a);
   for (Eigen::Index s = 0; s < n_s; ++s)
      for (Eigen::Index a = 0; a < n_a; ++a)
         joint_(s * n_a + a) = state_weights_(s) * behavior_.probs(s, a);
}

bool DataDistribution::full_support() const
{
   return (joint_.array() > 0.0).all();
}

void validate(const TabularMDP& mdp)
{
   if (mdp.n_states == 0 || mdp.n_actions == 0)
      throw ValidationError("n_states and n_actions must be positive");
   if (!(mdp.gamma >= 0.0 && mdp.gamma < 1.0))
      throw ValidationError("gamma must lie in [0, 1)");
   if (!(mdp.r_max > 0.0))
      throw ValidationError("r_max must be positive");
   const auto n_s = static_cast<Eigen::Index>(mdp.n_states);
   if (mdp.transition.rows() != static_cast<Eigen::Index>(mdp.n_pairs()) || mdp.transition.cols() != n_s)
      throw ValidationError("transition must have shape (|S||A|, |S|)");
   if (mdp.d0.size() != n_s)
      throw ValidationError("d0 must have |S| entries");
   if (mdp.rewards.size() != mdp.n_pairs())
      throw ValidationError("one reward distribution per (s,a) is required");

   for (std::size_t s = 0; s < mdp.n_states; ++s) {
      for (std::size_t a = 0; a < mdp.n_actions; ++a) {
         const auto i = mdp.index(s, a);
         check_simplex(mdp.transition.row(static_cast<Eigen::Index>(i)).transpose(), "transition " + cell(s, a));
         const auto& dist = mdp.rewards[i];
         if (dist.empty())
            throw ValidationError("reward " + cell(s, a) + ": empty distribution");
         double total = 0.0;
         for (const auto& o : dist) {
            if (!(o.prob >= 0.0))
               throw ValidationError("reward " + cell(s, a) + ": negative probability");
            if (!(o.value >= 0.0 && o.value <= mdp.r_max))
               throw ValidationError("reward " + cell(s, a) + ": value outside [0, r_max]");
            total += o.prob;
         }
         if (std::abs(total - 1.0) > kSumTolerance)
            throw ValidationError("reward " + cell(s, a) + ": row not stochastic");
      }
   }
   check_simplex(mdp.d0, "d0");
}

void validate(const Policy& pi, std::size_t n_states, std::size_t n_actions)
{
   if (pi.n_states() != n_states || pi.n_actions() != n_actions)
      throw ValidationError("policy shape does not match the MDP");
   for (std::size_t s = 0; s < n_states; ++s)
      check_simplex(pi.probs.row(static_cast<Eigen::Index>(s)).transpose(), "policy state " + std::to_string(s));
}

void validate(const DataDistribution& dist, const TabularMDP& mdp)
{
   validate(dist.behavior(), mdp.n_states, mdp.n_actions);
   check_simplex(dist.state_weights(), "state weights");
}

Matrix policy_average(const Policy& pi)
{
   const auto n_s = pi.probs.rows();
   const auto n_a = pi.probs.cols();
   Matrix out = Matrix::Zero(n_s, n_s * n_a);
   for (Eigen::Index s = 0; s < n_s; ++s)
      for (Eigen::Index a = 0; a < n_a; ++a)
         out(s, s * n_a + a) = pi.probs(s, a);
   return out;
}

Matrix pair_transition(const TabularMDP& mdp, const Policy& pi)
{
   return mdp.transition * policy_average(pi);
}

Vector initial_pair_distribution(const TabularMDP& mdp, const Policy& pi)
{
   return policy_average(pi).transpose() * mdp.d0;
}

Vector next_state_marginal(const TabularMDP& mdp, const DataDistribution& dist)
{
   return mdp.transition.transpose() * dist.joint();
}

Vector solve_q(const TabularMDP& mdp, const Policy& pi)
{
   const auto n = static_cast<Eigen::Index>(mdp.n_pairs());
   const Matrix system = Matrix::Identity(n, n) - mdp.gamma * pair_transition(mdp, pi);
   return system.partialPivLu().solve(mdp.mean_reward());
}

Vector state_value(const Policy& pi, const Vector& q)
{
   return policy_average(pi) * q;
}

Vector discounted_occupancy(const TabularMDP& mdp, const Policy& pi)
{
   const auto n = static_cast<Eigen::Index>(mdp.n_pairs());
   const Matrix system = Matrix::Identity(n, n) - mdp.gamma * pair_transition(mdp, pi).transpose();
   return system.partialPivLu().solve((1.0 - mdp.gamma) * initial_pair_distribution(mdp, pi));
}

Vector weight_function(const TabularMDP& mdp, const Policy& pi_e, const DataDistribution& dist)
{
   const Vector& joint = dist.joint();
   for (Eigen::Index i = 0; i < joint.size(); ++i) {
      if (!(joint(i) > 0.0)) {
         const auto s = static_cast<std::size_t>(i) / mdp.n_actions;
         const auto a = static_cast<std::size_t>(i) % mdp.n_actions;
         throw SupportError("data distribution has zero mass at " + cell(s, a));
      }
   }
   return discounted_occupancy(mdp, pi_e).cwiseQuotient(joint);
}

double policy_value(const TabularMDP& mdp, const Policy& pi_e)
{
   const Vector q = solve_q(mdp, pi_e);
   return (1.0 - mdp.gamma) * initial_pair_distribution(mdp, pi_e).dot(q);
}

Vector instantaneous_ratio(const Policy& pi_e, const Policy& pi_b)
{
   if (pi_e.probs.rows() != pi_b.probs.rows() || pi_e.probs.cols() != pi_b.probs.cols())
      throw ValidationError("policies differ in shape");
   const auto n_s = pi_e.probs.rows();
   const auto n_a = pi_e.probs.cols();
   Vector eta(n_s * n_a);
   for (Eigen::Index s = 0; s < n_s; ++s) {
      for (Eigen::Index a = 0; a < n_a; ++a) {
         const double num = pi_e.probs(s, a);
         const double den = pi_b.probs(s, a);
         if (den > 0.0)
            eta(s * n_a + a) = num / den;
         else if (num > 0.0)
            throw SupportError("unbounded ratio: pi_b is zero where pi_e is positive at "
                               + cell(static_cast<std::size_t>(s), static_cast<std::size_t>(a)));
         else
            eta(s * n_a + a) = 0.0;
      }
   }
   return eta;
}

ExactSolution exact_solution(const TabularMDP& mdp, const Policy& pi_e, const DataDistribution& dist)
{
   ExactSolution out;
   out.q = solve_q(mdp, pi_e);
   out.v = state_value(pi_e, out.q);
   out.occupancy = discounted_occupancy(mdp, pi_e);
   out.j = (1.0 - mdp.gamma) * mdp.d0.dot(out.v);
   if (dist.full_support())
      out.w = out.occupancy.cwiseQuotient(dist.joint());
   return out;
}

Vector random_simplex(std::size_t n, std::uint64_t seed, double mix)
{
   Rng rng(seed);
   Vector p(static_cast<Eigen::Index>(n));
   for (auto& x : p)
      x = rng.exponential();
   p /= p.sum();
   if (mix > 0.0)
      p = (1.0 - mix) * p + Vector::Constant(p.size(), mix / static_cast<double>(n));
   return p;
}

Policy random_policy(std::size_t n_states, std::size_t n_actions, std::uint64_t seed, double mix)
{
   Policy pi{Matrix(n_states, n_actions)};
   for (std::size_t s = 0; s < n_states; ++s)
      pi.probs.row(static_cast<Eigen::Index>(s)) = random_simplex(n_actions, mix_seed(seed, s), mix).transpose();
   return pi;
}

Policy uniform_policy(std::size_t n_states, std::size_t n_actions)
{
   return Policy{Matrix::Constant(n_states, n_actions, 1.0 / static_cast<double>(n_actions))};
}

TabularMDP random_mdp(const RandomMdpOptions& options, std::uint64_t seed)
{
   TabularMDP mdp;
   mdp.n_states = options.n_states;
   mdp.n_actions = options.n_actions;
   mdp.gamma = options.gamma;
   mdp.r_max = options.r_max;
   const auto n_pairs = mdp.n_pairs();
   mdp.transition.resize(static_cast<Eigen::Index>(n_pairs), static_cast<Eigen::Index>(mdp.n_states));
   for (std::size_t i = 0; i < n_pairs; ++i)
      mdp.transition.row(static_cast<Eigen::Index>(i)) = random_simplex(mdp.n_states, mix_seed(seed, i)).transpose();
   mdp.d0 = random_simplex(mdp.n_states, mix_seed(seed, n_pairs));

   Rng rng(mix_seed(seed, n_pairs + 1));
   mdp.rewards.resize(n_pairs);
   for (std::size_t i = 0; i < n_pairs; ++i) {
      const Vector probs = random_simplex(options.reward_support, mix_seed(seed, n_pairs + 2 + i));
      for (std::size_t k = 0; k < options.reward_support; ++k)
         mdp.rewards[i].push_back({rng.uniform() * options.r_max, probs(static_cast<Eigen::Index>(k))});
   }
   return mdp;
}

Vector stationary_state_distribution(const TabularMDP& mdp, const Policy& behavior)
{
   const auto n_s = static_cast<Eigen::Index>(mdp.n_states);
   // state kernel K(s, s') = sum_a pi(a|s) P(s'|s,a)
   const Matrix kernel = policy_average(behavior) * mdp.transition;
   // solve mu^T (I - K) = 0 with sum(mu) = 1 by replacing one equation
   Matrix system = Matrix::Identity(n_s, n_s) - kernel.transpose();
   system.row(n_s - 1).setOnes();
   Vector rhs = Vector::Zero(n_s);
   rhs(n_s - 1) = 1.0;
   Vector mu = system.fullPivLu().solve(rhs);
   mu = mu.cwiseMax(0.0);
   return mu / mu.sum();
}

}  // namespace mope
