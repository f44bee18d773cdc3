#include "mope/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mope/rng.hpp"

namespace mope {

namespace {

std::vector<std::vector<double>> rows_of(const Matrix& m)
{
   std::vector<std::vector<double>> out(static_cast<std::size_t>(m.rows()));
   for (Eigen::Index i = 0; i < m.rows(); ++i) {
      out[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(m.cols()));
      for (Eigen::Index j = 0; j < m.cols(); ++j)
         out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
   }
   return out;
}

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed)
{
   std::vector<std::size_t> order(n);
   std::iota(order.begin(), order.end(), std::size_t{0});
   Rng rng(seed);
   for (std::size_t i = n; i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.below(i));
      std::swap(order[i - 1], order[j]);
   }
   return order;
}

TransitionDataset subset(const TransitionDataset& data, const std::vector<std::size_t>& order, std::size_t begin,
                         std::size_t end, std::uint64_t seed)
{
   TransitionDataset out;
   out.n_states = data.n_states;
   out.n_actions = data.n_actions;
   out.seed = seed;
   out.tuples.reserve(end - begin);
   for (std::size_t i = begin; i < end; ++i)
      out.tuples.push_back(data.tuples[order[i]]);
   return out;
}

}  // namespace

void validate(const TransitionDataset& data, const TabularMDP& mdp)
{
   for (std::size_t i = 0; i < data.tuples.size(); ++i) {
      const auto& t = data.tuples[i];
      const std::string where = "tuple " + std::to_string(i);
      if (t.s >= mdp.n_states || t.s_next >= mdp.n_states || t.a >= mdp.n_actions)
         throw ValidationError(where + ": index out of range");
      const auto& support = mdp.rewards[mdp.index(t.s, t.a)];
      const bool found = std::any_of(support.begin(), support.end(), [&](const RewardOutcome& o) {
         return o.prob > 0.0 && std::abs(o.value - t.r) <= 1e-12 * std::max(1.0, std::abs(o.value));
      });
      if (!found)
         throw ValidationError(where + ": reward outside the support of reward(s,a)");
   }
}

TransitionDataset draw_dataset(const TabularMDP& mdp, const DataDistribution& dist, std::size_t n, std::uint64_t seed)
{
   const auto transition = rows_of(mdp.transition);
   const auto behavior = rows_of(dist.behavior().probs);
   const std::vector<double> ps(dist.state_weights().data(), dist.state_weights().data() + dist.state_weights().size());
   std::vector<std::vector<double>> reward_probs(mdp.n_pairs());
   for (std::size_t i = 0; i < mdp.n_pairs(); ++i)
      for (const auto& o : mdp.rewards[i])
         reward_probs[i].push_back(o.prob);

   TransitionDataset data;
   data.seed = seed;
   data.n_states = mdp.n_states;
   data.n_actions = mdp.n_actions;
   data.tuples.reserve(n);
   Rng rng(seed);
   for (std::size_t i = 0; i < n; ++i) {
      Transition t;
      t.s = rng.categorical(ps);
      t.a = rng.categorical(behavior[t.s]);
      const auto pair = mdp.index(t.s, t.a);
      t.r = mdp.rewards[pair][rng.categorical(reward_probs[pair])].value;
      t.s_next = rng.categorical(transition[pair]);
      data.tuples.push_back(t);
   }
   return data;
}

std::pair<TransitionDataset, TransitionDataset> split_half(const TransitionDataset& data, std::uint64_t seed)
{
   if (data.size() < 2)
      throw std::invalid_argument("split_half needs at least two tuples");
   const auto order = permutation(data.size(), seed);
   const auto half = data.size() / 2;
   return {subset(data, order, 0, half, mix_seed(seed, 0)), subset(data, order, half, data.size(), mix_seed(seed, 1))};
}

std::vector<TransitionDataset> split_bins(const TransitionDataset& data, std::size_t bins, std::uint64_t seed)
{
   if (bins == 0 || bins > data.size())
      throw std::invalid_argument("split_bins needs 1 <= T <= n (T = " + std::to_string(bins) + ", n = "
                                  + std::to_string(data.size()) + ")");
   const auto order = permutation(data.size(), seed);
   const auto base = data.size() / bins;
   const auto extra = data.size() % bins;
   std::vector<TransitionDataset> out;
   out.reserve(bins);
   std::size_t begin = 0;
   for (std::size_t t = 0; t < bins; ++t) {
      const auto len = base + (t < extra ? 1 : 0);
      out.push_back(subset(data, order, begin, begin + len, mix_seed(seed, t)));
      begin += len;
   }
   return out;
}

TransitionStats TransitionStats::from_dataset(const TransitionDataset& data)
{
   TransitionStats stats;
   stats.n_states = data.n_states;
   stats.n_actions = data.n_actions;
   const auto rows = static_cast<Eigen::Index>(data.n_states * data.n_actions);
   const auto cols = static_cast<Eigen::Index>(data.n_states);
   stats.mass = Matrix::Zero(rows, cols);
   stats.reward = Matrix::Zero(rows, cols);
   stats.reward_sq = Matrix::Zero(rows, cols);
   for (const auto& t : data.tuples) {
      const auto i = static_cast<Eigen::Index>(t.s * data.n_actions + t.a);
      const auto j = static_cast<Eigen::Index>(t.s_next);
      stats.mass(i, j) += 1.0;
      stats.reward(i, j) += t.r;
      stats.reward_sq(i, j) += t.r * t.r;
   }
   if (!data.tuples.empty()) {
      const double inv = 1.0 / static_cast<double>(data.size());
      stats.mass *= inv;
      stats.reward *= inv;
      stats.reward_sq *= inv;
   }
   stats.n = data.size();
   return stats;
}

TransitionStats TransitionStats::from_population(const TabularMDP& mdp, const DataDistribution& dist)
{
   TransitionStats stats;
   stats.n_states = mdp.n_states;
   stats.n_actions = mdp.n_actions;
   stats.mass = dist.joint().asDiagonal() * mdp.transition;
   stats.reward = mdp.mean_reward().asDiagonal() * stats.mass;
   stats.reward_sq = mdp.reward_second_moment().asDiagonal() * stats.mass;
   return stats;
}

MomentSet moments(const TransitionStats& stats, const LinearClass& w_class, const LinearClass& q_class,
                  const TabularMDP& mdp, const Policy& pi_e)
{
   const Matrix& phi_w = w_class.features();
   const Matrix& phi_q = q_class.features();
   const Matrix next_q = policy_average(pi_e) * phi_q;
   const Vector pair_mass = stats.pair_mass();
   const Vector next_mass = stats.mass.colwise().sum().transpose();
   const double gamma = mdp.gamma;

   MomentSet out;
   out.gamma = gamma;
   out.n = stats.n;
   out.g = phi_w.transpose() * pair_mass.asDiagonal() * phi_w;
   out.m = phi_w.transpose() * pair_mass.asDiagonal() * phi_q - gamma * (phi_w.transpose() * stats.mass * next_q);
   out.b = phi_w.transpose() * stats.pair_reward();

   const Matrix same = phi_q.transpose() * pair_mass.asDiagonal() * phi_q;
   const Matrix cross = phi_q.transpose() * stats.mass * next_q;
   const Matrix next = next_q.transpose() * next_mass.asDiagonal() * next_q;
   out.h = same - gamma * (cross + cross.transpose()) + gamma * gamma * next;
   out.mu0 = phi_q.transpose() * initial_pair_distribution(mdp, pi_e);
   return out;
}

MomentSet moments(const TransitionDataset& data, const LinearClass& w_class, const LinearClass& q_class,
                  const TabularMDP& mdp, const Policy& pi_e)
{
   return moments(TransitionStats::from_dataset(data), w_class, q_class, mdp, pi_e);
}

MomentSet population_moments(const TabularMDP& mdp, const DataDistribution& dist, const LinearClass& w_class,
                             const LinearClass& q_class, const Policy& pi_e)
{
   return moments(TransitionStats::from_population(mdp, dist), w_class, q_class, mdp, pi_e);
}

}  // namespace mope
