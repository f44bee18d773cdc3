#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <tuple>

#include "mope/rng.hpp"
#include "mope/sampling.hpp"
#include "oracles.hpp"

using namespace mope;

namespace {

std::vector<Transition> sorted(std::vector<Transition> v)
{
   std::sort(v.begin(), v.end(), [](const Transition& x, const Transition& y) {
      return std::tie(x.s, x.a, x.r, x.s_next) < std::tie(y.s, y.a, y.r, y.s_next);
   });
   return v;
}

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed)
{
   Rng rng(seed);
   Matrix m(rows, cols);
   for (auto& x : m.reshaped())
      x = rng.normal();
   return m;
}

}  // namespace

TEST_CASE("deterministic law gives identical tuples")
{
   TabularMDP mdp;
   mdp.n_states = 2;
   mdp.n_actions = 2;
   mdp.gamma = 0.5;
   mdp.d0 = Vector::Constant(2, 0.5);
   mdp.transition.resize(4, 2);
   mdp.transition << 1, 0, 0, 1, 1, 0, 0, 1;
   mdp.rewards.assign(4, {{0.25, 1.0}});
   Policy pi;
   pi.probs.resize(2, 2);
   pi.probs << 0, 1, 1, 0;
   const DataDistribution dist(Vector::Unit(2, 0), pi);
   const auto data = draw_dataset(mdp, dist, 50, 3);
   for (const auto& t : data.tuples)
      CHECK(t == Transition{0, 1, 0.25, 1});
}

TEST_CASE("empirical pair frequencies are within a binomial band")
{
   const auto inst = oracle::random_instance(17, 4, 3, 0.9);
   const auto dist = inst.dist();
   const std::size_t n = 100000;
   const auto data = draw_dataset(inst.mdp, dist, n, 99);
   Vector freq = Vector::Zero(12);
   for (const auto& t : data.tuples)
      freq(static_cast<Eigen::Index>(inst.mdp.index(t.s, t.a))) += 1.0 / n;
   for (Eigen::Index i = 0; i < 12; ++i) {
      const double p = dist.joint()(i);
      CHECK(std::abs(freq(i) - p) <= 4.0 * std::sqrt(p * (1.0 - p) / n));
   }
   CHECK_NOTHROW(validate(data, inst.mdp));
}

TEST_CASE("same seed gives the same dataset")
{
   const auto inst = oracle::random_instance(3);
   const auto a = draw_dataset(inst.mdp, inst.dist(), 500, 42);
   const auto b = draw_dataset(inst.mdp, inst.dist(), 500, 42);
   const auto c = draw_dataset(inst.mdp, inst.dist(), 500, 43);
   CHECK(a.tuples == b.tuples);
   CHECK(a.tuples != c.tuples);
}

TEST_CASE("split_half is a seeded partition")
{
   const auto inst = oracle::random_instance(3);
   const auto four = draw_dataset(inst.mdp, inst.dist(), 4, 1);
   const auto [a4, b4] = split_half(four, 9);
   CHECK(a4.size() == 2);
   CHECK(b4.size() == 2);

   const auto data = draw_dataset(inst.mdp, inst.dist(), 101, 1);
   const auto [d0, d1] = split_half(data, 5);
   CHECK(d0.size() + d1.size() == 101);
   CHECK((d0.size() == 50 || d0.size() == 51));
   auto joined = d0.tuples;
   joined.insert(joined.end(), d1.tuples.begin(), d1.tuples.end());
   CHECK(sorted(joined) == sorted(data.tuples));

   const auto [e0, e1] = split_half(data, 5);
   CHECK(e0.tuples == d0.tuples);
   CHECK(e1.tuples == d1.tuples);

   CHECK_THROWS_AS(split_half(draw_dataset(inst.mdp, inst.dist(), 1, 1), 1), std::invalid_argument);
}

TEST_CASE("split_bins sizes")
{
   const auto inst = oracle::random_instance(3);
   const auto ten = draw_dataset(inst.mdp, inst.dist(), 10, 1);
   const auto five = split_bins(ten, 5, 2);
   CHECK(five.size() == 5);
   for (const auto& b : five)
      CHECK(b.size() == 2);

   const auto whole = split_bins(ten, 1, 2);
   REQUIRE(whole.size() == 1);
   CHECK(sorted(whole[0].tuples) == sorted(ten.tuples));

   const auto data = draw_dataset(inst.mdp, inst.dist(), 103, 1);
   const auto bins = split_bins(data, 7, 4);
   std::size_t lo = 1000, hi = 0;
   std::vector<Transition> joined;
   for (const auto& b : bins) {
      lo = std::min(lo, b.size());
      hi = std::max(hi, b.size());
      joined.insert(joined.end(), b.tuples.begin(), b.tuples.end());
   }
   CHECK(hi - lo <= 1);
   CHECK(sorted(joined) == sorted(data.tuples));
   CHECK_THROWS_AS(split_bins(ten, 11, 1), std::invalid_argument);
   CHECK_THROWS_AS(split_bins(ten, 0, 1), std::invalid_argument);
}

TEST_CASE("dataset validation rejects bad tuples")
{
   const auto inst = oracle::random_instance(3, 3, 2, 0.9);
   auto data = draw_dataset(inst.mdp, inst.dist(), 20, 1);
   auto bad_index = data;
   bad_index.tuples[3].s_next = 3;
   CHECK_THROWS_AS(validate(bad_index, inst.mdp), ValidationError);
   auto bad_reward = data;
   bad_reward.tuples[0].r = 0.123456789;
   CHECK_THROWS_AS(validate(bad_reward, inst.mdp), ValidationError);
}

TEST_CASE("moments equal the tuple-by-tuple accumulation")
{
   for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto inst = oracle::random_instance(seed);
      const auto n_pairs = static_cast<Eigen::Index>(inst.mdp.n_pairs());
      const LinearClass w_class(gaussian(n_pairs, 3, seed), "w");
      const LinearClass q_class(gaussian(n_pairs, 2, seed + 100), "q");
      const auto data = draw_dataset(inst.mdp, inst.dist(), 700, seed);
      const auto mom = moments(data, w_class, q_class, inst.mdp, inst.pi_e);
      const auto ref = oracle::tuple_moments(data, w_class.features(), q_class.features(), inst.pi_e, inst.mdp.gamma);
      CHECK((mom.g - ref.g).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((mom.h - ref.h).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((mom.m - ref.m).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((mom.b - ref.b).cwiseAbs().maxCoeff() < 1e-12);
      REQUIRE(mom.n.has_value());
      CHECK(*mom.n == 700);
   }
}

TEST_CASE("population one-hot G is diag(P_SA) and gamma zero H is E[phi phi^T]")
{
   auto inst = oracle::random_instance(6);
   const auto dist = inst.dist();
   const auto cls = one_hot(inst.mdp);
   const auto pop = population_moments(inst.mdp, dist, cls, cls, inst.pi_e);
   CHECK(pop.population());
   CHECK((pop.g - Matrix(dist.joint().asDiagonal())).cwiseAbs().maxCoeff() < 1e-15);

   inst.mdp.gamma = 0.0;
   const auto data = draw_dataset(inst.mdp, dist, 300, 2);
   const auto mom = moments(data, cls, cls, inst.mdp, inst.pi_e);
   CHECK((mom.h - mom.g).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("population moments carry the Bellman moment condition")
{
   for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto inst = oracle::random_instance(seed);
      const auto dist = inst.dist();
      const auto n_pairs = static_cast<Eigen::Index>(inst.mdp.n_pairs());
      const LinearClass w_class(gaussian(n_pairs, 3, seed), "w");
      const auto q_class = one_hot(inst.mdp);
      const auto pop = population_moments(inst.mdp, dist, w_class, q_class, inst.pi_e);
      const Vector q = solve_q(inst.mdp, inst.pi_e);
      // E[phi_w (r - q + gamma v(s'))] = b - M theta = 0.
      CHECK((pop.b - pop.m * q).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((pop.g - pop.g.transpose()).cwiseAbs().maxCoeff() < 1e-15);
      CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(pop.h).eigenvalues().minCoeff() > -1e-12);
   }
}

TEST_CASE("empirical moments approach population moments")
{
   const auto inst = oracle::random_instance(8, 3, 2, 0.9);
   const auto dist = inst.dist();
   const auto cls = one_hot(inst.mdp);
   const auto pop = population_moments(inst.mdp, dist, cls, cls, inst.pi_e);
   const std::size_t n = 100000;
   const auto emp = moments(draw_dataset(inst.mdp, dist, n, 5), cls, cls, inst.mdp, inst.pi_e);
   const double bound = 5.0 / std::sqrt(static_cast<double>(n));
   CHECK((emp.g - pop.g).norm() < bound);
   CHECK((emp.h - pop.h).norm() < bound);
   CHECK((emp.m - pop.m).norm() < bound);
   CHECK((emp.b - pop.b).norm() < bound);
   CHECK((emp.mu0 - pop.mu0).norm() == 0.0);
}

TEST_CASE("sufficient statistics of a dataset")
{
   const auto inst = oracle::random_instance(2, 3, 2, 0.9);
   const auto data = draw_dataset(inst.mdp, inst.dist(), 1000, 4);
   const auto stats = TransitionStats::from_dataset(data);
   CHECK(stats.mass.sum() == doctest::Approx(1.0).epsilon(1e-14));
   double mean_r = 0.0;
   for (const auto& t : data.tuples)
      mean_r += t.r / 1000.0;
   CHECK(stats.reward.sum() == doctest::Approx(mean_r).epsilon(1e-13));
   const auto pop = TransitionStats::from_population(inst.mdp, inst.dist());
   CHECK(pop.population());
   CHECK((pop.pair_mass() - inst.dist().joint()).cwiseAbs().maxCoeff() < 1e-15);
   CHECK((pop.pair_reward() - inst.dist().joint().cwiseProduct(inst.mdp.mean_reward())).cwiseAbs().maxCoeff() < 1e-15);
}
