#include "mope/function_classes.hpp"

#include <cmath>
#include <limits>

namespace mope {

LinearClass::LinearClass(Matrix features, std::string name) : features_(std::move(features)), name_(std::move(name))
{
   if (features_.cols() == 0 || features_.rows() == 0)
      throw ValidationError("linear class '" + name_ + "' has no features");
   if (!features_.allFinite())
      throw ValidationError("linear class '" + name_ + "' has non-finite features");
}

Matrix LinearClass::gram(const Vector& weights) const
{
   return features_.transpose() * weights.asDiagonal() * features_;
}

double LinearClass::min_singular_value(const Vector& weights) const
{
   const Matrix scaled = weights.cwiseSqrt().asDiagonal() * features_;
   if (scaled.rows() < scaled.cols())
      return 0.0;
   Eigen::JacobiSVD<Matrix> svd(scaled);
   return svd.singularValues().minCoeff();
}

void LinearClass::require_independent(const Vector& weights) const
{
   const double sigma = min_singular_value(weights);
   if (!(sigma > kIndependenceTolerance))
      throw RankDeficientError("features of '" + name_ + "' are linearly dependent under the data weighting (sigma_min = "
                               + std::to_string(sigma) + ")");
}

LinearClass LinearClass::scaled(double factor) const
{
   return LinearClass(features_ * factor, name_);
}

LinearClass one_hot(const TabularMDP& mdp)
{
   const auto n = static_cast<Eigen::Index>(mdp.n_pairs());
   return LinearClass(Matrix::Identity(n, n), "onehot");
}

LinearClass constant_class(const TabularMDP& mdp)
{
   return LinearClass(Matrix::Ones(static_cast<Eigen::Index>(mdp.n_pairs()), 1), "constant");
}

LinearClass state_class(const TabularMDP& mdp)
{
   Matrix phi = Matrix::Zero(static_cast<Eigen::Index>(mdp.n_pairs()), static_cast<Eigen::Index>(mdp.n_states));
   for (std::size_t s = 0; s < mdp.n_states; ++s)
      for (std::size_t a = 0; a < mdp.n_actions; ++a)
         phi(static_cast<Eigen::Index>(mdp.index(s, a)), static_cast<Eigen::Index>(s)) = 1.0;
   return LinearClass(std::move(phi), "state");
}

LinearClass ratio_state_class(const TabularMDP& mdp, const Vector& eta)
{
   Matrix phi = state_class(mdp).features();
   phi = eta.asDiagonal() * phi;
   return LinearClass(std::move(phi), "ratio_state");
}

SpanResult span_contains(const LinearClass& cls, const Vector& vec, const Vector& weights, double tol)
{
   const Vector root = weights.cwiseSqrt();
   const Matrix lhs = root.asDiagonal() * cls.features();
   const Vector rhs = root.cwiseProduct(vec);
   SpanResult out;
   out.coeffs = lhs.colPivHouseholderQr().solve(rhs);
   out.residual = (rhs - lhs * out.coeffs).norm();
   out.contained = out.residual < tol;
   return out;
}

namespace {

double closure_residual(const Matrix& mapped, const LinearClass& target, const Vector& weights)
{
   double worst = 0.0;
   for (Eigen::Index j = 0; j < mapped.cols(); ++j)
      worst = std::max(worst, span_contains(target, mapped.col(j), weights).residual);
   return worst;
}

}  // namespace

CompletenessReport check_q_completeness(const LinearClass& q_class, const LinearClass& w_class,
                                        const OperatorSet& ops, const ExactSolution& exact)
{
   CompletenessReport report;
   const auto real = span_contains(q_class, exact.q, ops.x_weight);
   report.realizable = real.contained;
   report.realizability_residual = real.residual;

   const Matrix& phi = q_class.features();
   const Matrix mapped = ops.gamma * (ops.p_pi * phi) - phi;
   report.closure_residual = closure_residual(mapped, w_class, ops.x_weight);
   report.closed = report.closure_residual < kEmbeddingTolerance;
   report.pass = report.realizable && report.closed;
   return report;
}

CompletenessReport check_w_completeness(const LinearClass& w_class, const LinearClass& q_class,
                                        const OperatorSet& ops, const ExactSolution& exact,
                                        bool posterior_construction)
{
   CompletenessReport report;
   if (exact.w.size() != static_cast<Eigen::Index>(w_class.n_pairs()))
      throw SupportError("w_pi is undefined without full support of the data distribution");
   if (posterior_construction && !ops.is_stationary())
      report.warnings.push_back("P_S differs from the law of s'; the posterior-linear construction assumes stationarity");

   const auto real = span_contains(w_class, exact.w, ops.x_weight);
   report.realizable = real.contained;
   report.realizability_residual = real.residual;

   const Matrix& phi = w_class.features();
   const Matrix mapped = ops.gamma * (ops.adjoint * phi) - phi;
   report.closure_residual = closure_residual(mapped, q_class, ops.x_weight);
   report.closed = report.closure_residual < kEmbeddingTolerance;
   report.pass = report.realizable && report.closed;
   return report;
}

AdjointCompletenessReport spectral_check(const Matrix& embedding, double gamma, bool x_nonsingular)
{
   AdjointCompletenessReport report;
   report.embedding_exists = true;
   report.x_nonsingular = x_nonsingular;
   Eigen::EigenSolver<Matrix> solver(embedding, false);
   const auto values = solver.eigenvalues();
   report.spectrum.assign(values.data(), values.data() + values.size());
   if (gamma == 0.0) {
      report.spectral_gap = std::numeric_limits<double>::infinity();
   } else {
      const std::complex<double> target(1.0 / gamma, 0.0);
      report.spectral_gap = std::numeric_limits<double>::infinity();
      for (const auto& lambda : report.spectrum)
         report.spectral_gap = std::min(report.spectral_gap, std::abs(lambda - target));
   }
   report.pass = report.x_nonsingular && report.spectral_gap > kSpectralTolerance;
   return report;
}

namespace {

AdjointCompletenessReport adjoint_check(const LinearClass& cls, const OperatorSet& ops, EmbeddingKind kind)
{
   const bool x_ok = cls.min_singular_value(ops.x_weight) > kIndependenceTolerance;
   if (!x_ok) {
      AdjointCompletenessReport report;
      report.x_nonsingular = false;
      return report;
   }
   const Embedding e = embed(ops, cls, kind);
   if (!e.exists) {
      AdjointCompletenessReport report;
      report.x_nonsingular = true;
      return report;
   }
   return spectral_check(e.matrix, ops.gamma, true);
}

}  // namespace

AdjointCompletenessReport check_adjoint_q_completeness(const LinearClass& cls, const OperatorSet& ops)
{
   return adjoint_check(cls, ops, EmbeddingKind::forward);
}

AdjointCompletenessReport check_adjoint_w_completeness(const LinearClass& cls, const OperatorSet& ops)
{
   return adjoint_check(cls, ops, EmbeddingKind::adjoint);
}

bool is_stochastic_embedding(const Matrix& m, double tol)
{
   if ((m.array() < -tol).any())
      return false;
   return ((m.rowwise().sum().array() - 1.0).abs() <= tol).all();
}

}  // namespace mope
