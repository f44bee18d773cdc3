#ifndef MOPE_OPERATORS_HPP
#define MOPE_OPERATORS_HPP

#include <optional>
#include <string>

#include "mope/mdp.hpp"

namespace mope {

class LinearClass;

/// Raised when a feature Gram matrix is singular under the data weighting.
class RankDeficientError : public std::runtime_error {
public:
   using std::runtime_error::runtime_error;
};

/**
   Matrix form of the transition operator T, its adjoint T' under the
   P_{S,A}-weighted inner product, and the two Bellman operators

      B  f = r_bar + gamma T f
      B' f = offset + gamma T' f,   offset = (1 - gamma) d0 pi_e / P_{S,A}.

   All vectors are indexed by flattened (s,a).
*/
struct OperatorSet {
   double gamma = 0.0;
   std::size_t n_states = 0;
   std::size_t n_actions = 0;
   /// P^pi: ((s,a),(s',a')) = P(s'|s,a) pi_e(a'|s'); T f = p_pi f.
   Matrix p_pi;
   /// T' as a matrix acting on vectors over pairs.
   Matrix adjoint;
   Vector mean_reward;
   Vector b_prime_offset;
   /// Diagonal of X = E[phi phi^T] for the one-hot basis, i.e. P_{S,A}.
   Vector x_weight;
   Vector state_weights;
   Vector next_state_weights;
   Vector eta;

   Vector forward(const Vector& f) const { return p_pi * f; }
   Vector apply_adjoint(const Vector& f) const { return adjoint * f; }
   Vector bellman(const Vector& f) const { return mean_reward + gamma * (p_pi * f); }
   Vector backward_bellman(const Vector& f) const { return b_prime_offset + gamma * (adjoint * f); }
   /// T_gamma = gamma T - I.
   Vector shifted_forward(const Vector& f) const { return gamma * (p_pi * f) - f; }
   /// T'_gamma = gamma T' - I.
   Vector shifted_adjoint(const Vector& f) const { return gamma * (adjoint * f) - f; }

   double inner(const Vector& u, const Vector& v) const { return u.dot(x_weight.cwiseProduct(v)); }
   double norm(const Vector& u) const { return std::sqrt(inner(u, u)); }

   /// True when P_S equals the law of s' (up to tol), the premise of the posterior form of T'.
   bool is_stationary(double tol = 1e-9) const;
};

OperatorSet build_operators(const TabularMDP& mdp, const Policy& pi_e, const DataDistribution& dist);

/// X^{-1} A^T X for diagonal X: the adjoint of any matrix A under the X-weighted inner product.
Matrix weighted_adjoint(const Matrix& a, const Vector& x_weight);

struct OperatorNormReport {
   double norm = 0.0;
   double bound = 0.0;
   int iterations = 0;
   bool pass = false;
};

/// X-weighted operator norm of T by power iteration, compared against sqrt(C_m C_eta).
OperatorNormReport operator_norm_check(const OperatorSet& ops, double c_m, double c_eta);

enum class EmbeddingKind { forward, adjoint };

/**
   Matrix mean embedding of T (or T') on a linear class:
   T(Phi beta) = Phi (M beta).
*/
struct Embedding {
   EmbeddingKind kind = EmbeddingKind::forward;
   bool exists = false;
   /// Valid when exists; least-squares solution of Phi M = T Phi otherwise.
   Matrix matrix;
   /// Largest X-weighted column residual of T Phi - Phi M.
   double residual = 0.0;
};

inline constexpr double kEmbeddingTolerance = 1e-8;

Embedding embed(const OperatorSet& ops, const LinearClass& cls, EmbeddingKind kind);

std::string to_string(EmbeddingKind kind);

}  // namespace mope

#endif  // MOPE_OPERATORS_HPP
