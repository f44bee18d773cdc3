#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "mope/estimators.hpp"
#include "mope/rng.hpp"
#include "oracles.hpp"

using namespace mope;

namespace {

Vector gaussian(Eigen::Index n, Rng& rng, double scale = 1.0)
{
   Vector v(n);
   for (auto& x : v)
      x = scale * rng.normal();
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

struct Fixture {
   oracle::Instance inst;
   DataDistribution dist;
   ExactSolution exact;
   TransitionStats population;

   explicit Fixture(oracle::Instance i)
       : inst(std::move(i)), dist(inst.dist()), exact(exact_solution(inst.mdp, inst.pi_e, dist)),
         population(TransitionStats::from_population(inst.mdp, dist))
   {
   }
};

double product_term(const Fixture& f, const Vector& w, const Vector& q)
{
   const Vector dq = q - f.exact.q;
   const Matrix p = pair_transition(f.inst.mdp, f.inst.pi_e);
   const Vector shifted = f.inst.mdp.gamma * (p * dq) - dq;
   return oracle::weighted_inner(w - f.exact.w, shifted, f.dist.joint());
}

/// |E_n[w (-q + gamma v')] + (1 - gamma) E_d0[v]| or |E_n[w (r - q + gamma v')]| tuple by tuple.
double enumerate_loss(const TransitionDataset& data, const Vector& w, const Vector& q, const TabularMDP& mdp,
                      const Policy& pi_e, MinimaxObjective objective)
{
   const Vector v = state_value(pi_e, q);
   double acc = 0.0;
   for (const auto& t : data.tuples) {
      const auto i = static_cast<Eigen::Index>(mdp.index(t.s, t.a));
      const double r = objective == MinimaxObjective::mql ? t.r : 0.0;
      acc += w(i) * (r - q(i) + mdp.gamma * v(static_cast<Eigen::Index>(t.s_next)));
   }
   acc /= static_cast<double>(data.size());
   if (objective == MinimaxObjective::mwl)
      acc += (1.0 - mdp.gamma) * mdp.d0.dot(v);
   return std::abs(acc);
}

}  // namespace

TEST_CASE("population MQL and MWL recover q_pi and w_pi with one-hot classes")
{
   for (std::uint64_t seed = 1; seed <= 30; ++seed) {
      const Fixture f(oracle::random_instance(seed));
      const auto cls = one_hot(f.inst.mdp);
      const auto mom = population_moments(f.inst.mdp, f.dist, cls, cls, f.inst.pi_e);
      for (double lambda : {0.0, 1.0}) {
         StabilizerConfig stab{lambda, lambda, 0.0};
         CHECK((mql(mom, cls, stab).values - f.exact.q).cwiseAbs().maxCoeff() < 1e-8);
         CHECK((mwl(mom, cls, stab).values - f.exact.w).cwiseAbs().maxCoeff() < 1e-8);
      }
   }
}

TEST_CASE("gamma zero MQL is the per-cell mean reward")
{
   auto inst = oracle::random_instance(4, 3, 2, 0.0);
   const auto data = draw_dataset(inst.mdp, inst.dist(), 2000, 8);
   Vector sum = Vector::Zero(6), count = Vector::Zero(6);
   for (const auto& t : data.tuples) {
      sum(static_cast<Eigen::Index>(inst.mdp.index(t.s, t.a))) += t.r;
      count(static_cast<Eigen::Index>(inst.mdp.index(t.s, t.a))) += 1.0;
   }
   REQUIRE(count.minCoeff() > 0.0);
   const auto cls = one_hot(inst.mdp);
   const auto mom = moments(data, cls, cls, inst.mdp, inst.pi_e);
   for (double lambda : {0.0, 0.5, 3.0}) {
      const auto q = mql(mom, cls, {1.0, lambda, 0.0});
      CHECK((q.values - sum.cwiseQuotient(count)).cwiseAbs().maxCoeff() < 1e-12);
   }
}

TEST_CASE("stabilizer weight rescales the objective but not the argmin")
{
   const auto inst = oracle::random_instance(6, 4, 2, 0.9);
   const auto data = draw_dataset(inst.mdp, inst.dist(), 3000, 1);
   const auto n_pairs = static_cast<Eigen::Index>(inst.mdp.n_pairs());
   // Overidentified: 5 w-features against 3 q-features.
   const LinearClass w_class(gaussian(n_pairs, 5, 1), "w");
   const LinearClass q_class(gaussian(n_pairs, 3, 2), "q");
   const auto mom = moments(data, w_class, q_class, inst.mdp, inst.pi_e);
   const auto base = mql(mom, q_class, {1.0, 1.0, 0.0});
   for (double c : {1e-3, 0.5, 7.0, 1e4}) {
      const auto scaled = mql(mom, q_class, {1.0, c, 0.0});
      CHECK((scaled.coeffs - base.coeffs).cwiseAbs().maxCoeff() < 1e-10 * (1.0 + base.coeffs.cwiseAbs().maxCoeff()));
      CHECK(scaled.objective_value == doctest::Approx(base.objective_value / c).epsilon(1e-8));
   }
}

TEST_CASE("small stabilizer weights approach the unstabilized solution")
{
   const auto inst = oracle::random_instance(9, 3, 2, 0.9);
   const auto data = draw_dataset(inst.mdp, inst.dist(), 4000, 2);
   const auto cls = one_hot(inst.mdp);
   const auto mom = moments(data, cls, cls, inst.mdp, inst.pi_e);
   const auto plain = mql(mom, cls, {0.0, 0.0, 0.0});
   double previous = std::numeric_limits<double>::infinity();
   for (double lambda : {1e-2, 1e-4, 1e-6}) {
      const double gap = (mql(mom, cls, {lambda, lambda, 0.0}).values - plain.values).cwiseAbs().maxCoeff();
      CHECK(gap < 1e-9);
      CHECK(gap <= previous + 1e-12);
      previous = gap;
   }
}

TEST_CASE("scaling the q-features of the w-problem leaves the w coefficients unchanged")
{
   const auto inst = oracle::random_instance(10, 4, 2, 0.9);
   const auto data = draw_dataset(inst.mdp, inst.dist(), 3000, 3);
   const auto n_pairs = static_cast<Eigen::Index>(inst.mdp.n_pairs());
   const LinearClass w_class(gaussian(n_pairs, 3, 4), "w");
   const LinearClass q_class(gaussian(n_pairs, 5, 5), "q");
   for (double lambda : {0.0, 1.0}) {
      const StabilizerConfig stab{lambda, lambda, 0.0};
      const auto base = mwl(moments(data, w_class, q_class, inst.mdp, inst.pi_e), w_class, stab);
      const auto doubled = mwl(moments(data, w_class, q_class.scaled(2.0), inst.mdp, inst.pi_e), w_class, stab);
      CHECK((base.coeffs - doubled.coeffs).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + base.coeffs.cwiseAbs().maxCoeff()));
   }
}

TEST_CASE("gamma zero MWL with data law equal to d0 x pi_e gives w = 1")
{
   auto inst = oracle::random_instance(11, 4, 3, 0.0);
   inst.pi_b = inst.pi_e;
   inst.ps = inst.mdp.d0;
   const auto cls = one_hot(inst.mdp);
   const auto mom = population_moments(inst.mdp, inst.dist(), cls, cls, inst.pi_e);
   CHECK((mwl(mom, cls, {}).values.array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("singular moment systems raise SingularSystemError")
{
   auto inst = oracle::random_instance(12, 3, 2, 0.9);
   inst.pi_b.probs.row(1) << 1.0, 0.0;
   const auto cls = one_hot(inst.mdp);
   const auto mom = population_moments(inst.mdp, inst.dist(), cls, cls, inst.pi_e);
   CHECK_THROWS_AS(mql(mom, cls, {0.0, 0.0, 0.0}), SingularSystemError);
   CHECK_THROWS_AS(mql(mom, cls, {1.0, 1.0, 0.0}), SingularSystemError);
   CHECK_THROWS_AS(mwl(mom, cls, {0.0, 0.0, 0.0}), SingularSystemError);
   try {
      mql(mom, cls, {0.0, 0.0, 0.0});
   } catch (const SingularSystemError& e) {
      CHECK(e.condition() > kMaxCondition);
   }
   CHECK_THROWS_AS(mql(mom, cls, {1.0, -1.0, 0.0}), ValidationError);
}

TEST_CASE("direct method")
{
   const Fixture f(oracle::random_instance(13));
   CHECK(dm_value(f.exact.q, f.inst.mdp, f.inst.pi_e).j_hat == doctest::Approx(f.exact.j).epsilon(1e-12));
   CHECK(dm_value(Vector::Zero(f.exact.q.size()), f.inst.mdp, f.inst.pi_e).j_hat == 0.0);
   Rng rng(1);
   const Vector q = gaussian(f.exact.q.size(), rng);
   double hand = 0.0;
   for (std::size_t s = 0; s < f.inst.mdp.n_states; ++s)
      for (std::size_t a = 0; a < f.inst.mdp.n_actions; ++a)
         hand += f.inst.mdp.d0(static_cast<Eigen::Index>(s))
                 * f.inst.pi_e.probs(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a))
                 * q(static_cast<Eigen::Index>(f.inst.mdp.index(s, a)));
   CHECK(dm_value(q, f.inst.mdp, f.inst.pi_e).j_hat == doctest::Approx((1.0 - f.inst.mdp.gamma) * hand).epsilon(1e-12));
}

TEST_CASE("importance sampling")
{
   const Fixture f(oracle::random_instance(14, 4, 2, 0.8));
   const auto data = draw_dataset(f.inst.mdp, f.dist, 20000, 5);
   const auto stats = TransitionStats::from_dataset(data);
   double mean_r = 0.0;
   for (const auto& t : data.tuples)
      mean_r += t.r;
   mean_r /= static_cast<double>(data.size());
   CHECK(is_value(Vector::Ones(8), stats).j_hat == doctest::Approx(mean_r).epsilon(1e-12));
   CHECK(is_value(f.exact.w, f.population).j_hat == doctest::Approx(f.exact.j).epsilon(1e-12));
   const auto est = is_value(f.exact.w, stats);
   CHECK(std::abs(est.j_hat - f.exact.j) < 5.0 * est.std_error);
}

TEST_CASE("doubly robust value matches the tuple oracle")
{
   Rng rng(3);
   for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const Fixture f(oracle::random_instance(seed));
      const auto data = draw_dataset(f.inst.mdp, f.dist, 500, seed);
      const Vector w = gaussian(f.exact.w.size(), rng);
      const Vector q = gaussian(f.exact.q.size(), rng);
      const auto est = dr_value(w, q, TransitionStats::from_dataset(data), f.inst.mdp, f.inst.pi_e);
      CHECK(est.j_hat == doctest::Approx(oracle::tuple_dr(data, w, q, f.inst.mdp, f.inst.pi_e)).epsilon(1e-11));
   }
}

TEST_CASE("double robustness and the product form in population")
{
   Rng rng(7);
   for (std::uint64_t seed = 1; seed <= 30; ++seed) {
      const Fixture f(oracle::random_instance(seed));
      const auto n = f.exact.q.size();
      for (int k = 0; k < 10; ++k) {
         const Vector q = gaussian(n, rng, 5.0);
         const Vector w = gaussian(n, rng, 5.0);
         const auto& mdp = f.inst.mdp;
         CHECK(std::abs(dr_value(f.exact.w, q, f.population, mdp, f.inst.pi_e).j_hat - f.exact.j) < 1e-10);
         CHECK(std::abs(dr_value(w, f.exact.q, f.population, mdp, f.inst.pi_e).j_hat - f.exact.j) < 1e-10);
         const double gap = dr_value(w, q, f.population, mdp, f.inst.pi_e).j_hat - f.exact.j;
         CHECK(std::abs(gap - product_term(f, w, q)) < 1e-10);
      }
   }
}

TEST_CASE("cross-fitting averages the two folds")
{
   const Fixture f(oracle::random_instance(21, 4, 2, 0.9));
   const auto data = draw_dataset(f.inst.mdp, f.dist, 4000, 6);
   const auto cls = one_hot(f.inst.mdp);
   const auto classes = NuisanceClasses::shared(cls, cls);
   const StabilizerConfig stab;
   const auto est = crossfit_dr(data, classes, stab, f.inst.mdp, f.inst.pi_e, 77);
   REQUIRE(est.folds.size() == 2);

   const auto [first, second] = split_half(data, 77);
   const double j0 = oracle::tuple_dr(second, est.folds[0].w.values, est.folds[0].q.values, f.inst.mdp, f.inst.pi_e);
   const double j1 = oracle::tuple_dr(first, est.folds[1].w.values, est.folds[1].q.values, f.inst.mdp, f.inst.pi_e);
   CHECK(est.folds[0].j_hat == doctest::Approx(j0).epsilon(1e-11));
   CHECK(est.folds[1].j_hat == doctest::Approx(j1).epsilon(1e-11));
   CHECK(est.j_hat == doctest::Approx(0.5 * (j0 + j1)).epsilon(1e-12));

   // Fold nuisances recomputed independently on each half.
   const auto fit = minimax_fitter(classes, stab, f.inst.mdp, f.inst.pi_e);
   const auto on_first = fit(TransitionStats::from_dataset(first));
   CHECK((on_first.q.values - est.folds[0].q.values).cwiseAbs().maxCoeff() < 1e-12);

   // Swapping the fold labels gives the same estimate.
   const auto on_second = fit(TransitionStats::from_dataset(second));
   const double swapped = 0.5 * (oracle::tuple_dr(first, on_second.w.values, on_second.q.values, f.inst.mdp, f.inst.pi_e)
                                 + oracle::tuple_dr(second, on_first.w.values, on_first.q.values, f.inst.mdp, f.inst.pi_e));
   CHECK(est.j_hat == doctest::Approx(swapped).epsilon(1e-12));

   const auto again = crossfit_dr(data, classes, stab, f.inst.mdp, f.inst.pi_e, 77);
   CHECK(again.j_hat == est.j_hat);
   CHECK(std::isfinite(est.std_error));
}

TEST_CASE("cross-fitting with exact nuisances equals plain DR")
{
   const Fixture f(oracle::random_instance(22, 3, 2, 0.9));
   const auto data = draw_dataset(f.inst.mdp, f.dist, 1000, 9);
   const NuisanceFitter exact_fit = [&](const TransitionStats&) {
      NuisancePair p;
      p.w.values = f.exact.w;
      p.q.values = f.exact.q;
      return p;
   };
   const auto cf = crossfit_dr(data, exact_fit, f.inst.mdp, f.inst.pi_e, 3);
   const auto full = dr_full(data, exact_fit, f.inst.mdp, f.inst.pi_e);
   CHECK(cf.j_hat == doctest::Approx(full.j_hat).epsilon(1e-12));
}

TEST_CASE("cross-fitting reports the failing fold")
{
   const Fixture f(oracle::random_instance(23, 3, 2, 0.9));
   const auto data = draw_dataset(f.inst.mdp, f.dist, 100, 9);
   const NuisanceFitter failing = [](const TransitionStats&) -> NuisancePair { throw SingularSystemError("boom", 1e20); };
   CHECK_THROWS_AS(crossfit_dr(data, failing, f.inst.mdp, f.inst.pi_e, 1), FoldError);
}

TEST_CASE("FQI at gamma zero with one iteration regresses r")
{
   const auto inst = oracle::random_instance(24, 3, 2, 0.0);
   const auto data = draw_dataset(inst.mdp, inst.dist(), 1500, 10);
   Vector sum = Vector::Zero(6), count = Vector::Zero(6);
   for (const auto& t : data.tuples) {
      sum(static_cast<Eigen::Index>(inst.mdp.index(t.s, t.a))) += t.r;
      count(static_cast<Eigen::Index>(inst.mdp.index(t.s, t.a))) += 1.0;
   }
   const auto res = fqi(data, one_hot(inst.mdp), 1, Vector::Zero(6), inst.mdp, inst.pi_e, 1);
   CHECK(res.iterates.size() == 2);
   CHECK((res.final() - sum.cwiseQuotient(count)).cwiseAbs().maxCoeff() < 1e-12);
   CHECK(res.estimate.variant == Variant::fqi);
}

TEST_CASE("population FQI with one-hot decays geometrically")
{
   for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const Fixture f(oracle::stationary_instance(seed, 4, 2, 0.9));
      const auto ops = build_operators(f.inst.mdp, f.inst.pi_e, f.dist);
      const double rate = f.inst.mdp.gamma * operator_norm_check(ops, 1.0, 1.0).norm;
      const Vector f0 = Vector::Zero(f.exact.q.size());
      const auto res = fqi_population(f.inst.mdp, f.dist, one_hot(f.inst.mdp), 12, f0, f.inst.pi_e);
      const double e0 = ops.norm(f0 - f.exact.q);
      for (std::size_t t = 1; t < res.iterates.size(); ++t) {
         CHECK((res.iterates[t] - ops.bellman(res.iterates[t - 1])).cwiseAbs().maxCoeff() < 1e-12);
         CHECK(ops.norm(res.iterates[t] - f.exact.q) <= std::pow(rate, static_cast<double>(t)) * e0 + 1e-12);
      }
   }
}

TEST_CASE("MDL is the min-max of the DR functional over dictionaries")
{
   const Fixture f(oracle::random_instance(25, 3, 2, 0.9));
   const auto data = draw_dataset(f.inst.mdp, f.dist, 400, 2);
   const auto stats = TransitionStats::from_dataset(data);
   Rng rng(4);
   std::vector<Vector> dict_w, dict_q;
   for (int k = 0; k < 3; ++k) {
      dict_w.push_back(gaussian(6, rng));
      dict_q.push_back(gaussian(6, rng));
   }
   double best = std::numeric_limits<double>::infinity();
   for (const auto& w : dict_w) {
      double worst = -std::numeric_limits<double>::infinity();
      for (const auto& q : dict_q)
         worst = std::max(worst, oracle::tuple_dr(data, w, q, f.inst.mdp, f.inst.pi_e));
      best = std::min(best, worst);
   }
   CHECK(mdl(stats, dict_w, dict_q, f.inst.mdp, f.inst.pi_e).j_hat == doctest::Approx(best).epsilon(1e-11));

   double single = -std::numeric_limits<double>::infinity();
   for (const auto& q : dict_q)
      single = std::max(single, oracle::tuple_dr(data, dict_w[1], q, f.inst.mdp, f.inst.pi_e));
   CHECK(mdl(stats, {dict_w[1]}, dict_q, f.inst.mdp, f.inst.pi_e).j_hat == doctest::Approx(single).epsilon(1e-11));

   CHECK(mdl(f.population, {f.exact.w}, {f.exact.q}, f.inst.mdp, f.inst.pi_e).j_hat
         == doctest::Approx(f.exact.j).epsilon(1e-12));
   CHECK_THROWS_AS(mdl(stats, {}, dict_q, f.inst.mdp, f.inst.pi_e), std::invalid_argument);
}

TEST_CASE("minimax enumeration matches a tuple-level oracle")
{
   const Fixture f(oracle::random_instance(26, 3, 2, 0.9));
   const auto data = draw_dataset(f.inst.mdp, f.dist, 400, 3);
   const auto stats = TransitionStats::from_dataset(data);
   Rng rng(8);
   std::vector<Vector> dict_w, dict_q;
   for (int k = 0; k < 4; ++k) {
      dict_w.push_back(gaussian(6, rng));
      dict_q.push_back(gaussian(6, rng));
   }
   for (auto objective : {MinimaxObjective::mwl, MinimaxObjective::mql}) {
      const bool pick_w = objective == MinimaxObjective::mwl;
      const auto& outer = pick_w ? dict_w : dict_q;
      const auto& inner = pick_w ? dict_q : dict_w;
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_index = 0;
      for (std::size_t i = 0; i < outer.size(); ++i) {
         double worst = 0.0;
         for (const auto& c : inner) {
            const double l = pick_w ? enumerate_loss(data, outer[i], c, f.inst.mdp, f.inst.pi_e, objective)
                                    : enumerate_loss(data, c, outer[i], f.inst.mdp, f.inst.pi_e, objective);
            worst = std::max(worst, l);
         }
         if (worst < best) {
            best = worst;
            best_index = i;
         }
      }
      const auto est = minimax_enumerate(stats, dict_w, dict_q, objective, f.inst.mdp, f.inst.pi_e);
      REQUIRE(est.dictionary_index.has_value());
      CHECK(*est.dictionary_index == best_index);
      CHECK(est.objective_value == doctest::Approx(best).epsilon(1e-11));
   }

   // Truth in the dictionary wins in population.
   std::vector<Vector> with_truth = dict_q;
   with_truth.push_back(f.exact.q);
   const auto q_hat = minimax_enumerate(f.population, dict_w, with_truth, MinimaxObjective::mql, f.inst.mdp, f.inst.pi_e);
   CHECK(*q_hat.dictionary_index == with_truth.size() - 1);
   CHECK(q_hat.objective_value < 1e-12);
   std::vector<Vector> w_truth = dict_w;
   w_truth.insert(w_truth.begin(), f.exact.w);
   const auto w_hat = minimax_enumerate(f.population, w_truth, dict_q, MinimaxObjective::mwl, f.inst.mdp, f.inst.pi_e);
   CHECK(*w_hat.dictionary_index == 0);
}

TEST_CASE("variant names round trip")
{
   for (auto v : {Variant::dm, Variant::is, Variant::dr, Variant::dr_crossfit, Variant::fqi, Variant::mdl})
      CHECK(parse_variant(to_string(v)) == v);
   CHECK_THROWS_AS(parse_variant("bogus"), std::invalid_argument);
}
