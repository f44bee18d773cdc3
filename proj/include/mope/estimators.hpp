#ifndef MOPE_ESTIMATORS_HPP
#define MOPE_ESTIMATORS_HPP

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mope/function_classes.hpp"
#include "mope/sampling.hpp"

namespace mope {

/// Raised when a moment system cannot be solved; carries the condition number that tripped it.
class SingularSystemError : public std::runtime_error {
public:
   SingularSystemError(const std::string& what, double condition)
       : std::runtime_error(what + " (condition number " + std::to_string(condition) + ")"), condition_(condition)
   {
   }
   double condition() const { return condition_; }

private:
   double condition_;
};

/// Raised by cross-fitting when a nuisance fit fails on one fold.
class FoldError : public std::runtime_error {
public:
   FoldError(std::size_t fold, const std::string& what)
       : std::runtime_error("fold " + std::to_string(fold) + ": " + what), fold_(fold)
   {
   }
   std::size_t fold() const { return fold_; }

private:
   std::size_t fold_;
};

/**
   Stabilizer weights of the two minimax problems.

   lambda_w multiplies ||J q||^2 in the w-problem and lambda_q multiplies
   ||w||^2 in the q-problem. A zero weight selects the unstabilized
   estimator, which is defined as the least-squares solution of the moment
   system (the inner sup is infinite off the moment manifold for a linear
   span, so the plain minimax problem is degenerate).

   ridge = 0 means automatic: 1e-10 * trace/d is added to G (or H) only
   when its condition number exceeds 1e12. A positive ridge is always
   added.
*/
struct StabilizerConfig {
   double lambda_w = 1.0;
   double lambda_q = 1.0;
   double ridge = 0.0;
};

void validate(const StabilizerConfig& stab);

inline constexpr double kMaxCondition = 1e12;

enum class NuisanceKind { q, w };

struct NuisanceEstimate {
   NuisanceKind kind = NuisanceKind::q;
   Vector coeffs;
   /// Phi * coeffs over flattened (s,a).
   Vector values;
   double objective_value = 0.0;
   /// Condition number of the matrix inverted last.
   double condition = 0.0;
   bool ridge_applied = false;
   /// Set when the estimate was picked from a finite dictionary.
   std::optional<std::size_t> dictionary_index;
};

/// q-estimate from moments of (W2, Q2).
NuisanceEstimate mql(const MomentSet& moments, const LinearClass& q_class, const StabilizerConfig& stab);
/// w-estimate from moments of (W1, Q1).
NuisanceEstimate mwl(const MomentSet& moments, const LinearClass& w_class, const StabilizerConfig& stab);

enum class Variant { dm, is, dr, dr_crossfit, fqi, mdl };

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);

struct FoldRecord {
   std::size_t fold = 0;
   /// Tuples the influence term was averaged over.
   std::size_t n_eval = 0;
   double j_hat = 0.0;
   double influence_variance = 0.0;
   NuisanceEstimate w;
   NuisanceEstimate q;
};

struct OpeEstimate {
   Variant variant = Variant::dm;
   double j_hat = 0.0;
   /// sqrt(var(influence)/n); NaN when not defined (population mode or DM).
   double std_error = std::numeric_limits<double>::quiet_NaN();
   std::vector<NuisanceEstimate> nuisances;
   std::vector<FoldRecord> folds;
   std::map<std::string, double> diagnostics;
};

/// (1 - gamma) E_{d0}[q(s0, pi_e)].
OpeEstimate dm_value(const Vector& q, const TabularMDP& mdp, const Policy& pi_e);
/// E_n[w(s,a) r].
OpeEstimate is_value(const Vector& w, const TransitionStats& stats);
/// E_n[w (r - q + gamma q(s', pi_e))] + (1 - gamma) E_{d0}[q(s0, pi_e)].
OpeEstimate dr_value(const Vector& w, const Vector& q, const TransitionStats& stats, const TabularMDP& mdp,
                     const Policy& pi_e);

/// Mean and variance of the doubly robust influence term under `stats`.
struct InfluenceSummary {
   double mean = 0.0;
   double variance = 0.0;
};
InfluenceSummary dr_influence(const Vector& w, const Vector& q, const TransitionStats& stats, const TabularMDP& mdp,
                              const Policy& pi_e);

/// Classes for the two nuisance problems: w from (w1, q1), q from (q2, w2).
struct NuisanceClasses {
   LinearClass w1;
   LinearClass q1;
   LinearClass q2;
   LinearClass w2;

   /// Same w-class and q-class for both problems.
   static NuisanceClasses shared(const LinearClass& w, const LinearClass& q) { return {w, q, q, w}; }
};

struct NuisancePair {
   NuisanceEstimate w;
   NuisanceEstimate q;
};

using NuisanceFitter = std::function<NuisancePair(const TransitionStats&)>;

/// MWL and MQL on the given statistics.
NuisanceFitter minimax_fitter(NuisanceClasses classes, StabilizerConfig stab, TabularMDP mdp, Policy pi_e);

/// Plain DR with both nuisances fit on the full sample.
OpeEstimate dr_full(const TransitionDataset& data, const NuisanceFitter& fit, const TabularMDP& mdp, const Policy& pi_e);

/**
   Two-fold cross-fitting: nuisances fit on one half are used to average
   the influence term on the other half, then the roles swap and the two
   fold values are averaged.
*/
OpeEstimate crossfit_dr(const TransitionDataset& data, const NuisanceFitter& fit, const TabularMDP& mdp,
                        const Policy& pi_e, std::uint64_t seed);
OpeEstimate crossfit_dr(const TransitionDataset& data, const NuisanceClasses& classes, const StabilizerConfig& stab,
                        const TabularMDP& mdp, const Policy& pi_e, std::uint64_t seed);

struct FqiResult {
   /// f_0, f_1, ..., f_T.
   std::vector<Vector> iterates;
   OpeEstimate estimate;
   std::vector<std::string> warnings;

   const Vector& final() const { return iterates.back(); }
};

/// One regression per bin: f_t = argmin_q sum (r + gamma f_{t-1}(s', pi_e) - q(s,a))^2.
FqiResult fqi(const std::vector<TransitionStats>& bins, const LinearClass& q_class, const Vector& f0,
              const TabularMDP& mdp, const Policy& pi_e);
/// Sample-split FQI: shuffle with `seed`, cut into T bins.
FqiResult fqi(const TransitionDataset& data, const LinearClass& q_class, std::size_t iterations, const Vector& f0,
              const TabularMDP& mdp, const Policy& pi_e, std::uint64_t seed);
/// Population regression: each step projects B f_{t-1} onto the class in L2(P_{S,A}).
FqiResult fqi_population(const TabularMDP& mdp, const DataDistribution& dist, const LinearClass& q_class,
                         std::size_t iterations, const Vector& f0, const Policy& pi_e);

/// min over dict_w of max over dict_q of the DR functional; exact enumeration.
OpeEstimate mdl(const TransitionStats& stats, const std::vector<Vector>& dict_w, const std::vector<Vector>& dict_q,
                const TabularMDP& mdp, const Policy& pi_e);

enum class MinimaxObjective { mwl, mql };

/**
   Unstabilized minimax over finite dictionaries with the absolute value
   inside:
     mwl: min_w max_q |E_n[w(-q + gamma v')] + (1 - gamma) E_{d0}[v]|
     mql: min_q max_w |E_n[w(r - q + gamma v')]|
*/
NuisanceEstimate minimax_enumerate(const TransitionStats& stats, const std::vector<Vector>& dict_w,
                                   const std::vector<Vector>& dict_q, MinimaxObjective objective,
                                   const TabularMDP& mdp, const Policy& pi_e);

}  // namespace mope

#endif  // MOPE_ESTIMATORS_HPP
