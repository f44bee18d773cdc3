#ifndef MOPE_FUNCTION_CLASSES_HPP
#define MOPE_FUNCTION_CLASSES_HPP

#include <complex>
#include <string>
#include <vector>

#include "mope/mdp.hpp"
#include "mope/operators.hpp"

namespace mope {

/// Span of the columns of a feature matrix over flattened (s,a).
class LinearClass {
public:
   LinearClass(Matrix features, std::string name);

   const Matrix& features() const { return features_; }
   const std::string& name() const { return name_; }
   std::size_t dim() const { return static_cast<std::size_t>(features_.cols()); }
   std::size_t n_pairs() const { return static_cast<std::size_t>(features_.rows()); }

   Vector values(const Vector& coeffs) const { return features_ * coeffs; }
   /// Phi^T diag(weights) Phi.
   Matrix gram(const Vector& weights) const;
   /// Smallest singular value of diag(weights)^{1/2} Phi.
   double min_singular_value(const Vector& weights) const;
   /// Throws RankDeficientError unless the columns are independent under the weighting.
   void require_independent(const Vector& weights) const;

   /// New class with every feature multiplied by `factor`.
   LinearClass scaled(double factor) const;

private:
   Matrix features_;
   std::string name_;
};

inline constexpr double kIndependenceTolerance = 1e-10;

LinearClass one_hot(const TabularMDP& mdp);
LinearClass constant_class(const TabularMDP& mdp);
/// Features psi_k(s) * eta(s,a) with psi the state indicators.
LinearClass ratio_state_class(const TabularMDP& mdp, const Vector& eta);
/// Features that only depend on the state: phi_k(s,a) = 1{s = k}.
LinearClass state_class(const TabularMDP& mdp);

struct SpanResult {
   bool contained = false;
   double residual = 0.0;
   Vector coeffs;
};

/// Weighted least-squares membership test of `vec` in span(Phi).
SpanResult span_contains(const LinearClass& cls, const Vector& vec, const Vector& weights, double tol = 1e-8);

struct CompletenessReport {
   bool realizable = false;
   double realizability_residual = 0.0;
   bool closed = false;
   /// Largest residual among the mapped feature columns.
   double closure_residual = 0.0;
   bool pass = false;
   std::vector<std::string> warnings;
};

/// q_pi in span(Q) and T_gamma Phi_Q in span(W).
CompletenessReport check_q_completeness(const LinearClass& q_class, const LinearClass& w_class,
                                        const OperatorSet& ops, const ExactSolution& exact);
/// w_pi in span(W) and T'_gamma Phi_W in span(Q).
CompletenessReport check_w_completeness(const LinearClass& w_class, const LinearClass& q_class,
                                        const OperatorSet& ops, const ExactSolution& exact,
                                        bool posterior_construction = false);

struct AdjointCompletenessReport {
   bool embedding_exists = false;
   bool x_nonsingular = false;
   /// min |lambda - 1/gamma| over the spectrum of the embedding; +inf for gamma = 0.
   double spectral_gap = 0.0;
   std::vector<std::complex<double>> spectrum;
   bool pass = false;
};

inline constexpr double kSpectralTolerance = 1e-8;

/// Pass iff the forward embedding M exists, X is nonsingular and 1/gamma is not an eigenvalue of M.
AdjointCompletenessReport check_adjoint_q_completeness(const LinearClass& cls, const OperatorSet& ops);
/// Mirror image with the adjoint embedding M'.
AdjointCompletenessReport check_adjoint_w_completeness(const LinearClass& cls, const OperatorSet& ops);

/// Same test on an explicit embedding matrix.
AdjointCompletenessReport spectral_check(const Matrix& embedding, double gamma, bool x_nonsingular);

/// Entrywise nonnegative with unit row sums: T(beta^T phi) = (M beta)^T phi then averages coefficients.
bool is_stochastic_embedding(const Matrix& m, double tol = 1e-10);

}  // namespace mope

#endif  // MOPE_FUNCTION_CLASSES_HPP
