#include "mope/diagnostics.hpp"

#include <algorithm>
#include <complex>
#include <stdexcept>
#include <cmath>
#include <limits>

#include "mope/estimators.hpp"
#include "mope/rng.hpp"

namespace mope {

namespace {

/// A^{-1/2} for symmetric positive definite A, eigenvalues floored at 1e-14.
Matrix inverse_sqrt(const Matrix& a)
{
   const Matrix sym = 0.5 * (a + a.transpose());
   Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
   const Vector values = eig.eigenvalues().cwiseMax(1e-14).cwiseSqrt().cwiseInverse();
   return eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
}

Vector gaussian(std::size_t n, Rng& rng)
{
   Vector out(static_cast<Eigen::Index>(n));
   for (Eigen::Index i = 0; i < out.size(); ++i)
      out(i) = rng.normal();
   return out;
}

}  // namespace

ConcentrabilityReport concentrability(const TabularMDP& mdp, const Policy& pi_e, const DataDistribution& dist)
{
   validate(dist, mdp);
   ConcentrabilityReport out;
   const Vector& ps = dist.state_weights();
   const Vector next = next_state_marginal(mdp, dist);
   const double inf = std::numeric_limits<double>::infinity();

   out.c_m = 0.0;
   for (Eigen::Index s = 0; s < ps.size(); ++s) {
      if (next(s) == 0.0)
         continue;
      out.c_m = std::max(out.c_m, ps(s) > 0.0 ? next(s) / ps(s) : inf);
   }

   try {
      out.c_eta = instantaneous_ratio(pi_e, dist.behavior()).maxCoeff();
   } catch (const SupportError&) {
      out.c_eta = inf;
   }

   const Vector d = discounted_occupancy(mdp, pi_e);
   const Vector& joint = dist.joint();
   out.c_w = 0.0;
   for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (d(i) == 0.0)
         continue;
      out.c_w = std::max(out.c_w, joint(i) > 0.0 ? d(i) / joint(i) : inf);
   }

   out.gamma_contraction = mdp.gamma * std::sqrt(out.c_m * out.c_eta);
   out.stationary = (ps - next).cwiseAbs().maxCoeff() <= 1e-9;
   return out;
}

EfficiencyReport efficiency_bound(const TabularMDP& mdp, const Policy& pi_e, const DataDistribution& dist)
{
   validate(dist, mdp);
   if (!dist.full_support())
      throw SupportError("efficiency bound needs P_{S,A}(s,a) > 0 for every pair");
   const auto exact = exact_solution(mdp, pi_e, dist);
   const Vector reward_var = mdp.reward_variance();
   const Vector r_bar = mdp.mean_reward();
   const Vector next_v = mdp.transition * exact.v;
   const Vector next_v_sq = mdp.transition * exact.v.cwiseAbs2();
   const Vector& joint = dist.joint();
   const double g = mdp.gamma;

   EfficiencyReport out;
   out.per_cell.resize(exact.q.size());
   for (Eigen::Index i = 0; i < exact.q.size(); ++i) {
      const double v_var = std::max(next_v_sq(i) - next_v(i) * next_v(i), 0.0);
      const double residual = r_bar(i) - exact.q(i) + g * next_v(i);
      out.self_check = std::max(out.self_check, residual * residual);
      const double w = exact.w(i);
      out.per_cell(i) = joint(i) * w * w * (reward_var(i) + g * g * v_var + residual * residual);
   }
   if (!(out.self_check < kBellmanSelfCheck))
      throw std::logic_error("efficiency bound: Bellman residual of q_pi is " + std::to_string(out.self_check));
   out.eb = out.per_cell.sum();
   return out;
}

RecoveryReport recovery_constant(const OperatorSet& ops, const LinearClass& cls, const Embedding& embedding)
{
   if (!embedding.exists)
      throw std::invalid_argument("recovery constant needs a matrix embedding of the "
                                  + to_string(embedding.kind) + " operator");
   cls.require_independent(ops.x_weight);
   const Matrix& m = embedding.matrix;
   const auto d = m.rows();
   if (ops.gamma > 0.0) {
      const Eigen::VectorXcd spectrum = m.eigenvalues();
      for (Eigen::Index i = 0; i < spectrum.size(); ++i)
         if (std::abs(spectrum(i) - std::complex<double>(1.0 / ops.gamma, 0.0)) <= 1e-10)
            throw RankDeficientError("recovery constant: embedding has eigenvalue 1/gamma, M_bar is singular");
   }

   const Matrix x = cls.gram(ops.x_weight);
   RecoveryReport out;
   out.m_bar = ops.gamma * m.transpose() - Matrix::Identity(d, d);
   const Matrix s = out.m_bar * x * out.m_bar.transpose();
   const Matrix root = inverse_sqrt(s);
   Matrix k = root * x * root;
   k = 0.5 * (k + k.transpose());
   Eigen::SelfAdjointEigenSolver<Matrix> eig(k, Eigen::EigenvaluesOnly);
   out.singular_values = eig.eigenvalues();
   out.c_iota = std::sqrt(std::max(out.singular_values.maxCoeff(), 0.0));
   return out;
}

NormEquivalenceReport norm_equivalence_check(const OperatorSet& ops, const ExactSolution& exact,
                                             const ConcentrabilityReport& conc, std::size_t samples,
                                             std::uint64_t seed, double slack)
{
   NormEquivalenceReport out;
   out.contraction = conc.gamma_contraction;
   out.lower_applicable = out.contraction < 1.0;
   out.worst_slack = std::numeric_limits<double>::infinity();
   const double upper = 1.0 + out.contraction;
   const double lower = 1.0 - out.contraction;

   auto probe = [&](double residual, double distance) {
      ++out.checked;
      double worst = upper * distance - residual;
      if (out.lower_applicable)
         worst = std::min(worst, residual - lower * distance);
      out.worst_slack = std::min(out.worst_slack, worst);
      if (worst < -slack)
         ++out.violations;
   };

   Rng rng(seed);
   const auto n = static_cast<std::size_t>(exact.q.size());
   const double q_scale = std::max(1.0, exact.q.cwiseAbs().maxCoeff());
   const double w_scale = std::max(1.0, exact.w.cwiseAbs().maxCoeff());
   for (std::size_t i = 0; i < samples; ++i) {
      const Vector q = exact.q + q_scale * gaussian(n, rng);
      probe(ops.norm(ops.bellman(q) - q), ops.norm(q - exact.q));
      const Vector w = exact.w + w_scale * gaussian(n, rng);
      probe(ops.norm(ops.backward_bellman(w) - w), ops.norm(w - exact.w));
   }
   out.pass = out.violations == 0;
   return out;
}

MinimaxIdentityReport minimax_identity_check(const TabularMDP& mdp, const Policy& pi_e, const DataDistribution& dist,
                                             const Vector& w, const Vector& q)
{
   const auto exact = exact_solution(mdp, pi_e, dist);
   const auto ops = build_operators(mdp, pi_e, dist);
   MinimaxIdentityReport out;
   out.lhs = dr_influence(w, q, TransitionStats::from_population(mdp, dist), mdp, pi_e).mean;
   out.product = ops.inner(w - exact.w, ops.shifted_forward(q - exact.q));
   out.rhs = out.product + exact.j;
   out.residual = std::abs(out.lhs - out.rhs);
   return out;
}

}  // namespace mope
