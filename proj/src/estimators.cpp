#include "mope/estimators.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "mope/rng.hpp"

namespace mope {

namespace {

double symmetric_condition(const Matrix& a)
{
   Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
   const double lo = eig.eigenvalues().minCoeff();
   const double hi = eig.eigenvalues().maxCoeff();
   if (!(lo > 0.0))
      return std::numeric_limits<double>::infinity();
   return hi / lo;
}

/// Applies the ridge policy of StabilizerConfig in place; returns whether a ridge was added.
bool regularize(Matrix& a, double ridge)
{
   if (ridge > 0.0) {
      a.diagonal().array() += ridge;
      return true;
   }
   if (symmetric_condition(a) > kMaxCondition) {
      const double scale = a.trace() / static_cast<double>(a.rows());
      a.diagonal().array() += 1e-10 * (scale > 0.0 ? scale : 1.0);
      return true;
   }
   return false;
}

struct GmmSolution {
   Vector coeffs;
   double objective = 0.0;
   double condition = 0.0;
   bool ridge_applied = false;
};

/**
   argmin_theta (y - D theta)^T S^{-1} (y - D theta) / (4 lambda) for lambda > 0,
   least squares D theta = y for lambda = 0.
*/
GmmSolution gmm_solve(const Matrix& design, const Vector& target, const Matrix& inner, double lambda, double ridge,
                      const char* what)
{
   GmmSolution out;
   if (lambda > 0.0) {
      Matrix weight = inner;
      out.ridge_applied = regularize(weight, ridge);
      const Eigen::LDLT<Matrix> inner_solver(weight);
      if (inner_solver.info() != Eigen::Success)
         throw SingularSystemError(std::string(what) + ": inner moment matrix is not positive definite",
                                   symmetric_condition(weight));
      const Matrix weighted = inner_solver.solve(design);
      Matrix normal = design.transpose() * weighted;
      normal = 0.5 * (normal + normal.transpose());
      out.condition = symmetric_condition(normal);
      if (!(out.condition <= kMaxCondition))
         throw SingularSystemError(std::string(what) + ": moment system is singular", out.condition);
      out.coeffs = normal.ldlt().solve(weighted.transpose() * target);
      const Vector residual = target - design * out.coeffs;
      out.objective = residual.dot(inner_solver.solve(residual)) / (4.0 * lambda);
   } else {
      Eigen::JacobiSVD<Matrix> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const auto& sv = svd.singularValues();
      const bool tall = design.rows() >= design.cols();
      out.condition = (tall && sv.minCoeff() > 0.0) ? sv.maxCoeff() / sv.minCoeff()
                                                     : std::numeric_limits<double>::infinity();
      if (!(out.condition <= kMaxCondition))
         throw SingularSystemError(std::string(what) + ": moment matrix lacks full column rank", out.condition);
      out.coeffs = svd.solve(target);
      out.objective = (target - design * out.coeffs).squaredNorm();
   }
   return out;
}

/// c(i, j) = q(i) - gamma v(j) for pair i and next state j.
Matrix bellman_residual_grid(const Vector& q, const Vector& v, double gamma)
{
   return q.replicate(1, v.size()) - gamma * v.transpose().replicate(q.size(), 1);
}

}  // namespace

void validate(const StabilizerConfig& stab)
{
   if (!(stab.lambda_w >= 0.0) || !(stab.lambda_q >= 0.0) || !(stab.ridge >= 0.0))
      throw ValidationError("stabilizer weights and ridge must be nonnegative");
}

NuisanceEstimate mql(const MomentSet& moments, const LinearClass& q_class, const StabilizerConfig& stab)
{
   validate(stab);
   const auto sol = gmm_solve(moments.m, moments.b, moments.g, stab.lambda_q, stab.ridge, "mql");
   NuisanceEstimate out;
   out.kind = NuisanceKind::q;
   out.coeffs = sol.coeffs;
   out.values = q_class.values(sol.coeffs);
   out.objective_value = sol.objective;
   out.condition = sol.condition;
   out.ridge_applied = sol.ridge_applied;
   return out;
}

NuisanceEstimate mwl(const MomentSet& moments, const LinearClass& w_class, const StabilizerConfig& stab)
{
   validate(stab);
   // N = E[(-phi_q + gamma phi'_q) phi_w^T] = -M^T; c(beta) = N beta + (1 - gamma) mu0.
   const Matrix n = -moments.m.transpose();
   const Vector target = -(1.0 - moments.gamma) * moments.mu0;
   const auto sol = gmm_solve(n, target, moments.h, stab.lambda_w, stab.ridge, "mwl");
   NuisanceEstimate out;
   out.kind = NuisanceKind::w;
   out.coeffs = sol.coeffs;
   out.values = w_class.values(sol.coeffs);
   out.objective_value = sol.objective;
   out.condition = sol.condition;
   out.ridge_applied = sol.ridge_applied;
   return out;
}

std::string to_string(Variant v)
{
   switch (v) {
   case Variant::dm: return "dm";
   case Variant::is: return "is";
   case Variant::dr: return "dr";
   case Variant::dr_crossfit: return "drcf";
   case Variant::fqi: return "fqi";
   case Variant::mdl: return "mdl";
   }
   return "unknown";
}

Variant parse_variant(const std::string& name)
{
   if (name == "dm" || name == "mql")
      return Variant::dm;
   if (name == "is" || name == "mwl")
      return Variant::is;
   if (name == "dr")
      return Variant::dr;
   if (name == "drcf")
      return Variant::dr_crossfit;
   if (name == "fqi")
      return Variant::fqi;
   if (name == "mdl")
      return Variant::mdl;
   throw std::invalid_argument("unknown estimator variant '" + name + "'");
}

OpeEstimate dm_value(const Vector& q, const TabularMDP& mdp, const Policy& pi_e)
{
   OpeEstimate out;
   out.variant = Variant::dm;
   out.j_hat = (1.0 - mdp.gamma) * initial_pair_distribution(mdp, pi_e).dot(q);
   return out;
}

OpeEstimate is_value(const Vector& w, const TransitionStats& stats)
{
   OpeEstimate out;
   out.variant = Variant::is;
   out.j_hat = w.dot(stats.pair_reward());
   const double second = w.cwiseAbs2().dot(stats.reward_sq.rowwise().sum());
   if (stats.n && *stats.n > 0)
      out.std_error = std::sqrt(std::max(second - out.j_hat * out.j_hat, 0.0) / static_cast<double>(*stats.n));
   return out;
}

InfluenceSummary dr_influence(const Vector& w, const Vector& q, const TransitionStats& stats, const TabularMDP& mdp,
                              const Policy& pi_e)
{
   const Vector v = state_value(pi_e, q);
   const Matrix c = bellman_residual_grid(q, v, mdp.gamma);
   const double k = (1.0 - mdp.gamma) * mdp.d0.dot(v);
   const double total = stats.mass.sum();

   // psi = w (r - c) + k on every (s,a,s') cell
   const Matrix centered = stats.reward - c.cwiseProduct(stats.mass);
   const Matrix centered_sq = stats.reward_sq - 2.0 * c.cwiseProduct(stats.reward) + c.cwiseAbs2().cwiseProduct(stats.mass);

   InfluenceSummary out;
   const double linear = w.dot(centered.rowwise().sum());
   out.mean = linear + k * total;
   const double second = w.cwiseAbs2().dot(centered_sq.rowwise().sum()) + 2.0 * k * linear + k * k * total;
   out.variance = std::max(second - out.mean * out.mean, 0.0);
   return out;
}

OpeEstimate dr_value(const Vector& w, const Vector& q, const TransitionStats& stats, const TabularMDP& mdp,
                     const Policy& pi_e)
{
   if (w.size() != q.size() || w.size() != static_cast<Eigen::Index>(mdp.n_pairs()))
      throw ValidationError("dr_value: nuisances must both be vectors over (s,a)");
   const auto infl = dr_influence(w, q, stats, mdp, pi_e);
   OpeEstimate out;
   out.variant = Variant::dr;
   out.j_hat = infl.mean;
   if (stats.n && *stats.n > 0)
      out.std_error = std::sqrt(infl.variance / static_cast<double>(*stats.n));
   return out;
}

NuisanceFitter minimax_fitter(NuisanceClasses classes, StabilizerConfig stab, TabularMDP mdp, Policy pi_e)
{
   return [classes = std::move(classes), stab, mdp = std::move(mdp), pi_e = std::move(pi_e)](const TransitionStats& stats) {
      NuisancePair out;
      out.w = mwl(moments(stats, classes.w1, classes.q1, mdp, pi_e), classes.w1, stab);
      out.q = mql(moments(stats, classes.w2, classes.q2, mdp, pi_e), classes.q2, stab);
      return out;
   };
}

OpeEstimate dr_full(const TransitionDataset& data, const NuisanceFitter& fit, const TabularMDP& mdp, const Policy& pi_e)
{
   const auto stats = TransitionStats::from_dataset(data);
   const auto nuisances = fit(stats);
   OpeEstimate out = dr_value(nuisances.w.values, nuisances.q.values, stats, mdp, pi_e);
   out.nuisances = {nuisances.w, nuisances.q};
   return out;
}

OpeEstimate crossfit_dr(const TransitionDataset& data, const NuisanceFitter& fit, const TabularMDP& mdp,
                        const Policy& pi_e, std::uint64_t seed)
{
   if (data.size() < 4)
      throw std::invalid_argument("crossfit_dr needs at least four tuples");
   const auto [first, second] = split_half(data, seed);
   const std::array<TransitionStats, 2> stats{TransitionStats::from_dataset(first), TransitionStats::from_dataset(second)};

   OpeEstimate out;
   out.variant = Variant::dr_crossfit;
   double pooled_variance = 0.0;
   for (std::size_t fold = 0; fold < 2; ++fold) {
      const auto& train = stats[fold];
      const auto& eval = stats[1 - fold];
      NuisancePair nuisances;
      try {
         nuisances = fit(train);
      } catch (const std::exception& e) {
         throw FoldError(fold, e.what());
      }
      const auto infl = dr_influence(nuisances.w.values, nuisances.q.values, eval, mdp, pi_e);
      FoldRecord record;
      record.fold = fold;
      record.n_eval = *eval.n;
      record.j_hat = infl.mean;
      record.influence_variance = infl.variance;
      record.w = std::move(nuisances.w);
      record.q = std::move(nuisances.q);
      pooled_variance += infl.variance * static_cast<double>(record.n_eval);
      out.folds.push_back(std::move(record));
   }
   out.j_hat = 0.5 * (out.folds[0].j_hat + out.folds[1].j_hat);
   pooled_variance /= static_cast<double>(data.size());
   out.std_error = std::sqrt(pooled_variance / static_cast<double>(data.size()));
   out.diagnostics["j_fold0"] = out.folds[0].j_hat;
   out.diagnostics["j_fold1"] = out.folds[1].j_hat;
   return out;
}

OpeEstimate crossfit_dr(const TransitionDataset& data, const NuisanceClasses& classes, const StabilizerConfig& stab,
                        const TabularMDP& mdp, const Policy& pi_e, std::uint64_t seed)
{
   return crossfit_dr(data, minimax_fitter(classes, stab, mdp, pi_e), mdp, pi_e, seed);
}

FqiResult fqi(const std::vector<TransitionStats>& bins, const LinearClass& q_class, const Vector& f0,
              const TabularMDP& mdp, const Policy& pi_e)
{
   if (bins.empty())
      throw std::invalid_argument("fqi needs at least one iteration");
   if (f0.size() != static_cast<Eigen::Index>(mdp.n_pairs()))
      throw ValidationError("fqi: f0 must be a vector over (s,a)");

   const Matrix& phi = q_class.features();
   const Matrix average = policy_average(pi_e);
   FqiResult out;
   out.iterates.push_back(f0);
   for (std::size_t t = 0; t < bins.size(); ++t) {
      const auto& stats = bins[t];
      const Vector next_value = average * out.iterates.back();
      Matrix design = phi.transpose() * stats.pair_mass().asDiagonal() * phi;
      const Vector rhs = phi.transpose() * (stats.pair_reward() + mdp.gamma * (stats.mass * next_value));
      if (regularize(design, 0.0))
         out.warnings.push_back("bin " + std::to_string(t + 1) + ": singular regression design, ridge applied");
      const Vector coeffs = design.ldlt().solve(rhs);
      out.iterates.push_back(phi * coeffs);
   }
   out.estimate = dm_value(out.final(), mdp, pi_e);
   out.estimate.variant = Variant::fqi;
   out.estimate.diagnostics["iterations"] = static_cast<double>(bins.size());
   return out;
}

FqiResult fqi(const TransitionDataset& data, const LinearClass& q_class, std::size_t iterations, const Vector& f0,
              const TabularMDP& mdp, const Policy& pi_e, std::uint64_t seed)
{
   std::vector<TransitionStats> bins;
   for (const auto& bin : split_bins(data, iterations, seed))
      bins.push_back(TransitionStats::from_dataset(bin));
   return fqi(bins, q_class, f0, mdp, pi_e);
}

FqiResult fqi_population(const TabularMDP& mdp, const DataDistribution& dist, const LinearClass& q_class,
                         std::size_t iterations, const Vector& f0, const Policy& pi_e)
{
   const std::vector<TransitionStats> bins(iterations, TransitionStats::from_population(mdp, dist));
   return fqi(bins, q_class, f0, mdp, pi_e);
}

OpeEstimate mdl(const TransitionStats& stats, const std::vector<Vector>& dict_w, const std::vector<Vector>& dict_q,
                const TabularMDP& mdp, const Policy& pi_e)
{
   if (dict_w.empty() || dict_q.empty())
      throw std::invalid_argument("mdl needs nonempty dictionaries");
   double best = std::numeric_limits<double>::infinity();
   std::size_t best_w = 0;
   std::size_t best_q = 0;
   for (std::size_t i = 0; i < dict_w.size(); ++i) {
      double worst = -std::numeric_limits<double>::infinity();
      std::size_t worst_q = 0;
      for (std::size_t j = 0; j < dict_q.size(); ++j) {
         const double value = dr_influence(dict_w[i], dict_q[j], stats, mdp, pi_e).mean;
         if (value > worst) {
            worst = value;
            worst_q = j;
         }
      }
      if (worst < best) {
         best = worst;
         best_w = i;
         best_q = worst_q;
      }
   }
   OpeEstimate out;
   out.variant = Variant::mdl;
   out.j_hat = best;
   out.diagnostics["argmin_w"] = static_cast<double>(best_w);
   out.diagnostics["argmax_q"] = static_cast<double>(best_q);
   return out;
}

NuisanceEstimate minimax_enumerate(const TransitionStats& stats, const std::vector<Vector>& dict_w,
                                   const std::vector<Vector>& dict_q, MinimaxObjective objective,
                                   const TabularMDP& mdp, const Policy& pi_e)
{
   if (dict_w.empty() || dict_q.empty())
      throw std::invalid_argument("minimax_enumerate needs nonempty dictionaries");
   const double total = stats.mass.sum();

   // loss(w, q) for either objective
   auto loss = [&](const Vector& w, const Vector& q) {
      const Vector v = state_value(pi_e, q);
      const Matrix c = bellman_residual_grid(q, v, mdp.gamma);
      const Vector moved = c.cwiseProduct(stats.mass).rowwise().sum();
      if (objective == MinimaxObjective::mwl)
         return std::abs(-w.dot(moved) + (1.0 - mdp.gamma) * mdp.d0.dot(v) * total);
      return std::abs(w.dot(stats.pair_reward() - moved));
   };

   const bool pick_w = objective == MinimaxObjective::mwl;
   const auto& outer = pick_w ? dict_w : dict_q;
   const auto& inner = pick_w ? dict_q : dict_w;
   double best = std::numeric_limits<double>::infinity();
   std::size_t best_index = 0;
   for (std::size_t i = 0; i < outer.size(); ++i) {
      double worst = -std::numeric_limits<double>::infinity();
      for (const auto& critic : inner)
         worst = std::max(worst, pick_w ? loss(outer[i], critic) : loss(critic, outer[i]));
      if (worst < best) {
         best = worst;
         best_index = i;
      }
   }
   NuisanceEstimate out;
   out.kind = pick_w ? NuisanceKind::w : NuisanceKind::q;
   out.values = outer[best_index];
   out.coeffs = Vector::Unit(static_cast<Eigen::Index>(outer.size()), static_cast<Eigen::Index>(best_index));
   out.objective_value = best;
   out.dictionary_index = best_index;
   return out;
}

}  // namespace mope
