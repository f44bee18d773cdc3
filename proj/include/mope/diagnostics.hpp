#ifndef MOPE_DIAGNOSTICS_HPP
#define MOPE_DIAGNOSTICS_HPP

#include <cstdint>

#include "mope/function_classes.hpp"
#include "mope/operators.hpp"

namespace mope {

struct ConcentrabilityReport {
   /// max w_pi
   double c_w = 0.0;
   /// max pi_e / pi_b
   double c_eta = 0.0;
   /// max P_{S'} / P_S
   double c_m = 0.0;
   /// gamma sqrt(c_m c_eta)
   double gamma_contraction = 0.0;
   bool stationary = false;
};

ConcentrabilityReport concentrability(const TabularMDP& mdp, const Policy& pi_e, const DataDistribution& dist);

struct EfficiencyReport {
   /// E[w_pi^2 (r - q_pi + gamma v_pi(s'))^2]
   double eb = 0.0;
   /// Contribution of each (s,a) to eb.
   Vector per_cell;
   /// Largest squared Bellman-mean residual; zero up to rounding.
   double self_check = 0.0;
};

inline constexpr double kBellmanSelfCheck = 1e-18;

EfficiencyReport efficiency_bound(const TabularMDP& mdp, const Policy& pi_e, const DataDistribution& dist);

struct RecoveryReport {
   double c_iota = 0.0;
   /// gamma M^T - I for the chosen embedding M.
   Matrix m_bar;
   /// Eigenvalues of (M_bar X M_bar^T)^{-1/2} X (M_bar X M_bar^T)^{-1/2}, ascending.
   Vector singular_values;
};

/**
   Recovery constant C_iota with ||f - f_pi||_2 <= C_iota ||(Bellman - I) f||_2
   on the span of `cls`, where q uses the forward embedding and w the adjoint
   one:
      C_iota^2 = sigma_max(S^{-1/2} X S^{-1/2}),  S = M_bar X M_bar^T.
*/
RecoveryReport recovery_constant(const OperatorSet& ops, const LinearClass& cls, const Embedding& embedding);

struct NormEquivalenceReport {
   double contraction = 0.0;
   bool lower_applicable = false;
   std::size_t checked = 0;
   std::size_t violations = 0;
   /// Smallest (bound - value) seen on either side; negative on violation.
   double worst_slack = 0.0;
   bool pass = false;
};

/**
   (1 - k) ||f - f_pi|| <= ||(Bellman - I) f|| <= (1 + k) ||f - f_pi||,
   k = gamma sqrt(C_m C_eta), for `samples` random q and as many random w.
*/
NormEquivalenceReport norm_equivalence_check(const OperatorSet& ops, const ExactSolution& exact,
                                             const ConcentrabilityReport& conc, std::size_t samples,
                                             std::uint64_t seed, double slack = 1e-9);

struct MinimaxIdentityReport {
   /// Population DR functional at (w, q).
   double lhs = 0.0;
   /// E[(w - w_pi) T_gamma (q - q_pi)] + J
   double rhs = 0.0;
   double product = 0.0;
   double residual = 0.0;
};

MinimaxIdentityReport minimax_identity_check(const TabularMDP& mdp, const Policy& pi_e, const DataDistribution& dist,
                                             const Vector& w, const Vector& q);

}  // namespace mope

#endif  // MOPE_DIAGNOSTICS_HPP
