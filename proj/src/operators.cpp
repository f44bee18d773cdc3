#include "mope/operators.hpp"

#include <cmath>

#include "mope/function_classes.hpp"

namespace mope {

bool OperatorSet::is_stationary(double tol) const
{
   return (state_weights - next_state_weights).cwiseAbs().maxCoeff() <= tol;
}

OperatorSet build_operators(const TabularMDP& mdp, const Policy& pi_e, const DataDistribution& dist)
{
   if (!dist.full_support())
      throw SupportError("operators need P_{S,A}(s,a) > 0 for every pair");

   OperatorSet ops;
   ops.gamma = mdp.gamma;
   ops.n_states = mdp.n_states;
   ops.n_actions = mdp.n_actions;
   ops.p_pi = pair_transition(mdp, pi_e);
   ops.mean_reward = mdp.mean_reward();
   ops.x_weight = dist.joint();
   ops.state_weights = dist.state_weights();
   ops.next_state_weights = next_state_marginal(mdp, dist);
   ops.eta = instantaneous_ratio(pi_e, dist.behavior());

   // T' f(s,a) = eta(s,a) sum_{s',a'} P(s | s',a') f(s',a') P_{S,A}(s',a') / P_S(s)
   const auto n = static_cast<Eigen::Index>(mdp.n_pairs());
   const auto n_a = static_cast<Eigen::Index>(mdp.n_actions);
   ops.adjoint.resize(n, n);
   for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index s = i / n_a;
      const double scale = ops.eta(i) / ops.state_weights(s);
      for (Eigen::Index j = 0; j < n; ++j)
         ops.adjoint(i, j) = scale * mdp.transition(j, s) * ops.x_weight(j);
   }

   ops.b_prime_offset = (1.0 - mdp.gamma) * initial_pair_distribution(mdp, pi_e).cwiseQuotient(ops.x_weight);
   return ops;
}

Matrix weighted_adjoint(const Matrix& a, const Vector& x_weight)
{
   return x_weight.cwiseInverse().asDiagonal() * a.transpose() * x_weight.asDiagonal();
}

OperatorNormReport operator_norm_check(const OperatorSet& ops, double c_m, double c_eta)
{
   const Vector root = ops.x_weight.cwiseSqrt();
   const Matrix k = root.asDiagonal() * ops.p_pi * root.cwiseInverse().asDiagonal();
   const Matrix gram = k.transpose() * k;

   OperatorNormReport report;
   Vector x = Vector::Ones(gram.rows()).normalized();
   double lambda = 0.0;
   constexpr int kMaxIterations = 100000;
   for (report.iterations = 1; report.iterations <= kMaxIterations; ++report.iterations) {
      Vector y = gram * x;
      const double next = x.dot(y);
      const double len = y.norm();
      if (len == 0.0)
         break;
      x = y / len;
      if (std::abs(next - lambda) <= 1e-15 * std::max(1.0, std::abs(next))) {
         lambda = next;
         break;
      }
      lambda = next;
   }
   report.norm = std::sqrt(std::max(lambda, 0.0));
   report.bound = std::sqrt(c_m * c_eta);
   report.pass = report.norm <= report.bound + 1e-9;
   return report;
}

Embedding embed(const OperatorSet& ops, const LinearClass& cls, EmbeddingKind kind)
{
   cls.require_independent(ops.x_weight);
   const Matrix& phi = cls.features();
   const Matrix mapped = kind == EmbeddingKind::forward ? Matrix(ops.p_pi * phi) : Matrix(ops.adjoint * phi);

   const Vector root = ops.x_weight.cwiseSqrt();
   const Matrix lhs = root.asDiagonal() * phi;
   const Matrix rhs = root.asDiagonal() * mapped;

   Embedding out;
   out.kind = kind;
   out.matrix = lhs.colPivHouseholderQr().solve(rhs);
   out.residual = (rhs - lhs * out.matrix).colwise().norm().maxCoeff();
   out.exists = out.residual < kEmbeddingTolerance;
   return out;
}

std::string to_string(EmbeddingKind kind)
{
   return kind == EmbeddingKind::forward ? "forward" : "adjoint";
}

}  // namespace mope
