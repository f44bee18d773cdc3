#include "mope/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include "mope/diagnostics.hpp"
#include "mope/rng.hpp"

namespace mope {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
   if (p.empty())
      return {};
   const std::filesystem::path path(p);
   return path.is_absolute() ? path : base / path;
}

bool strictly_increasing(const std::vector<std::size_t>& v)
{
   for (std::size_t i = 1; i < v.size(); ++i)
      if (v[i] <= v[i - 1])
         return false;
   return true;
}

StudyInputs with_classes(const StudyInputs& inputs, NuisanceClasses classes)
{
   return {inputs.problem, std::move(classes)};
}

}  // namespace

void validate(const StudyConfig& config)
{
   if (config.n_grid.empty() || !strictly_increasing(config.n_grid))
      throw ValidationError("n_grid must be nonempty and strictly increasing");
   if (config.n_grid.front() == 0)
      throw ValidationError("n_grid entries must be positive");
   if (config.replications < 2)
      throw ValidationError("replications must be at least 2");
   if (config.t_grid.empty() || !strictly_increasing(config.t_grid) || config.t_grid.front() == 0)
      throw ValidationError("t_grid must be nonempty, positive and strictly increasing");
   validate(config.estimator.stab);
   if (config.estimator.variant == Variant::mdl)
      throw ValidationError("studies do not support mdl; it needs finite dictionaries");
}

StudyConfig study_config_from_json(const io::json& j, const std::filesystem::path& base_dir)
{
   StudyConfig c;
   try {
      c.mdp_path = resolve(base_dir, j.at("mdp").get<std::string>());
      c.pi_e_path = resolve(base_dir, j.at("pi_e").get<std::string>());
      c.pi_b_path = resolve(base_dir, j.at("pi_b").get<std::string>());
      c.ps_path = resolve(base_dir, j.value("ps", std::string{}));
      if (j.contains("estimator")) {
         const auto& e = j.at("estimator");
         c.estimator.variant = parse_variant(e.value("variant", std::string("drcf")));
         c.estimator.stab.lambda_w = e.value("lambda_w", 1.0);
         c.estimator.stab.lambda_q = e.value("lambda_q", 1.0);
         c.estimator.stab.ridge = e.value("ridge", 0.0);
         c.estimator.fqi_iterations = e.value("fqi_iterations", std::size_t{10});
         auto cls = [&](const char* key) {
            const auto spec = e.value(key, std::string("onehot"));
            const bool builtin = spec == "onehot" || spec == "constant" || spec == "state";
            return builtin ? spec : resolve(base_dir, spec).string();
         };
         c.estimator.q_class = cls("q_class");
         c.estimator.w_class = cls("w_class");
      }
      c.n_grid = j.at("n_grid").get<std::vector<std::size_t>>();
      c.replications = j.at("replications").get<std::size_t>();
      c.base_seed = j.value("base_seed", std::uint64_t{0});
      c.output_dir = resolve(base_dir, j.value("output_dir", std::string("results")));
      c.threads = j.value("threads", std::size_t{0});
      c.population = j.value("population", false);
      c.misspecified_class = j.value("misspecified_class", std::string("constant"));
      if (j.contains("t_grid"))
         c.t_grid = j.at("t_grid").get<std::vector<std::size_t>>();
   } catch (const io::json::exception& e) {
      throw io::FormatError(std::string("study config: ") + e.what());
   }
   validate(c);
   return c;
}

StudyConfig load_study_config(const std::filesystem::path& path)
{
   return study_config_from_json(io::read_json(path), path.parent_path());
}

StudyInputs load_inputs(const StudyConfig& config)
{
   auto mdp = io::load_mdp(config.mdp_path);
   auto pi_e = io::load_policy(config.pi_e_path);
   auto pi_b = io::load_policy(config.pi_b_path);
   validate(pi_e, mdp.n_states, mdp.n_actions);
   validate(pi_b, mdp.n_states, mdp.n_actions);
   Vector ps = config.ps_path.empty() ? stationary_state_distribution(mdp, pi_b) : io::load_vector(config.ps_path);
   DataDistribution dist(std::move(ps), std::move(pi_b));
   validate(dist, mdp);
   const auto w = io::load_class(config.estimator.w_class, mdp);
   const auto q = io::load_class(config.estimator.q_class, mdp);
   return {OpeProblem{std::move(mdp), std::move(pi_e), std::move(dist)}, NuisanceClasses::shared(w, q)};
}

namespace {

/// `data` is null in population mode, where `dist` supplies the exact law.
OpeEstimate run_on_stats(const EstimatorSpec& spec, const NuisanceClasses& classes, const TabularMDP& mdp,
                         const Policy& pi_e, const TransitionStats& stats, const TransitionDataset* data,
                         const DataDistribution* dist, std::uint64_t seed)
{
   switch (spec.variant) {
   case Variant::dm: {
      const auto q = mql(moments(stats, classes.w2, classes.q2, mdp, pi_e), classes.q2, spec.stab);
      auto out = dm_value(q.values, mdp, pi_e);
      out.nuisances = {q};
      return out;
   }
   case Variant::is: {
      const auto w = mwl(moments(stats, classes.w1, classes.q1, mdp, pi_e), classes.w1, spec.stab);
      auto out = is_value(w.values, stats);
      out.nuisances = {w};
      return out;
   }
   case Variant::dr:
   case Variant::dr_crossfit: {
      const auto fit = minimax_fitter(classes, spec.stab, mdp, pi_e);
      if (data && spec.variant == Variant::dr_crossfit)
         return crossfit_dr(*data, fit, mdp, pi_e, mix_seed(seed, 1));
      const auto nuisances = fit(stats);
      auto out = dr_value(nuisances.w.values, nuisances.q.values, stats, mdp, pi_e);
      out.variant = spec.variant;
      out.nuisances = {nuisances.w, nuisances.q};
      return out;
   }
   case Variant::fqi: {
      const Vector f0 = Vector::Zero(static_cast<Eigen::Index>(mdp.n_pairs()));
      auto result = data ? fqi(*data, classes.q2, spec.fqi_iterations, f0, mdp, pi_e, mix_seed(seed, 2))
                         : fqi_population(mdp, *dist, classes.q2, spec.fqi_iterations, f0, pi_e);
      return result.estimate;
   }
   case Variant::mdl:
      break;
   }
   throw std::invalid_argument("mdl needs finite dictionaries and cannot run from linear classes");
}

}  // namespace

OpeEstimate run_variant(const EstimatorSpec& spec, const NuisanceClasses& classes, const TabularMDP& mdp,
                        const Policy& pi_e, const TransitionDataset& data, std::uint64_t seed)
{
   return run_on_stats(spec, classes, mdp, pi_e, TransitionStats::from_dataset(data), &data, nullptr, seed);
}

OpeEstimate run_variant_population(const EstimatorSpec& spec, const NuisanceClasses& classes,
                                   const OpeProblem& problem)
{
   return run_on_stats(spec, classes, problem.mdp, problem.pi_e,
                       TransitionStats::from_population(problem.mdp, problem.dist), nullptr, &problem.dist, 0);
}

std::uint64_t replication_seed(std::uint64_t base, std::size_t n_index, std::size_t replication)
{
   return mix_seed(mix_seed(base, n_index), replication);
}

std::vector<StudyRow> run_replications(const StudyConfig& config, const StudyInputs& inputs,
                                       const EstimatorSpec& spec)
{
   const auto& problem = inputs.problem;
   const double j_true = policy_value(problem.mdp, problem.pi_e);
   const std::size_t reps = config.replications;
   std::vector<StudyRow> rows(config.n_grid.size() * reps);

   auto task = [&](std::size_t index) {
      const std::size_t k = index / reps;
      const std::size_t i = index % reps;
      StudyRow& row = rows[index];
      row.n = config.n_grid[k];
      row.replication = i;
      row.seed = replication_seed(config.base_seed, k, i);
      row.j_true = j_true;
      try {
         const auto est = config.population
                             ? run_variant_population(spec, inputs.classes, problem)
                             : run_variant(spec, inputs.classes, problem.mdp, problem.pi_e,
                                           draw_dataset(problem.mdp, problem.dist, row.n, row.seed), row.seed);
         row.j_hat = est.j_hat;
         row.std_error = est.std_error;
         row.error = row.j_hat - j_true;
      } catch (const std::exception& e) {
         row.failure = e.what();
         row.j_hat = kNaN;
         row.std_error = kNaN;
         row.error = kNaN;
      }
   };

   std::size_t threads = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.threads;
   threads = std::min(threads, rows.size());
   if (threads <= 1) {
      for (std::size_t t = 0; t < rows.size(); ++t)
         task(t);
      return rows;
   }
   std::atomic<std::size_t> next{0};
   std::vector<std::thread> pool;
   pool.reserve(threads);
   for (std::size_t w = 0; w < threads; ++w)
      pool.emplace_back([&] {
         for (std::size_t t = next++; t < rows.size(); t = next++)
            task(t);
      });
   for (auto& th : pool)
      th.join();
   return rows;
}

std::pair<double, double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
   const auto k = x.size();
   if (k < 2 || y.size() != k)
      return {kNaN, kNaN};
   double mx = 0.0;
   double my = 0.0;
   for (std::size_t i = 0; i < k; ++i) {
      mx += std::log(x[i]);
      my += std::log(y[i]);
   }
   mx /= static_cast<double>(k);
   my /= static_cast<double>(k);
   double sxx = 0.0;
   double sxy = 0.0;
   for (std::size_t i = 0; i < k; ++i) {
      const double dx = std::log(x[i]) - mx;
      sxx += dx * dx;
      sxy += dx * (std::log(y[i]) - my);
   }
   const double slope = sxy / sxx;
   if (k < 3)
      return {slope, kNaN};
   double rss = 0.0;
   for (std::size_t i = 0; i < k; ++i) {
      const double fit = my + slope * (std::log(x[i]) - mx);
      rss += (std::log(y[i]) - fit) * (std::log(y[i]) - fit);
   }
   return {slope, std::sqrt(rss / static_cast<double>(k - 2) / sxx)};
}

StudySummary summarize(const std::vector<StudyRow>& rows, double eb)
{
   StudySummary out;
   out.eb = eb;
   out.degenerate = !(eb > kDegenerateEb);

   std::map<std::size_t, std::vector<const StudyRow*>> by_n;
   for (const auto& row : rows)
      by_n[row.n].push_back(&row);

   std::vector<double> xs;
   std::vector<double> ys;
   for (const auto& [n, group] : by_n) {
      SizeSummary s;
      s.n = n;
      std::vector<double> errors;
      std::size_t plugin_total = 0;
      std::size_t plugin_hits = 0;
      for (const auto* row : group) {
         if (!row->ok()) {
            ++s.failures;
            continue;
         }
         errors.push_back(row->error);
         if (std::isfinite(row->std_error) && row->std_error > 0.0) {
            ++plugin_total;
            if (std::abs(row->error) <= 1.96 * row->std_error)
               ++plugin_hits;
         }
      }
      s.count = errors.size();
      const double nd = static_cast<double>(n);
      if (s.count == 0) {
         s.rmse = s.mean_error = s.scaled_variance = s.var_ratio = s.coverage = s.plugin_coverage = kNaN;
         out.sizes.push_back(s);
         continue;
      }
      double sum = 0.0;
      double sq = 0.0;
      for (const double e : errors) {
         sum += e;
         sq += e * e;
      }
      const double count = static_cast<double>(s.count);
      s.mean_error = sum / count;
      s.rmse = std::sqrt(sq / count);
      double centered = 0.0;
      for (const double e : errors)
         centered += (e - s.mean_error) * (e - s.mean_error);
      s.scaled_variance = s.count > 1 ? nd * centered / (count - 1.0) : kNaN;
      if (out.degenerate) {
         s.var_ratio = kNaN;
         s.coverage = kNaN;
      } else {
         s.var_ratio = s.scaled_variance / eb;
         const double half = 1.96 * std::sqrt(eb / nd);
         const auto hits = std::count_if(errors.begin(), errors.end(), [&](double e) { return std::abs(e) <= half; });
         s.coverage = static_cast<double>(hits) / count;
      }
      s.plugin_coverage = plugin_total > 0 ? static_cast<double>(plugin_hits) / static_cast<double>(plugin_total)
                                           : kNaN;
      out.sizes.push_back(s);
      if (s.rmse > 0.0) {
         xs.push_back(nd);
         ys.push_back(s.rmse);
      }
   }
   std::tie(out.slope, out.slope_se) = loglog_slope(xs, ys);
   return out;
}

namespace {

double exact_eb(const OpeProblem& problem)
{
   try {
      return efficiency_bound(problem.mdp, problem.pi_e, problem.dist).eb;
   } catch (const SupportError&) {
      return kNaN;
   }
}

}  // namespace

StudyResult run_rate_study(const StudyConfig& config, const StudyInputs& inputs)
{
   validate(config);
   StudyResult out;
   out.rows = run_replications(config, inputs, config.estimator);
   out.summary = summarize(out.rows, exact_eb(inputs.problem));
   return out;
}

StudyResult run_rate_study(const StudyConfig& config)
{
   return run_rate_study(config, load_inputs(config));
}

StudyResult run_clt_study(const StudyConfig& config, const StudyInputs& inputs)
{
   validate(config);
   const double eb = efficiency_bound(inputs.problem.mdp, inputs.problem.pi_e, inputs.problem.dist).eb;
   StudyResult out;
   out.rows = run_replications(config, inputs, config.estimator);
   out.summary = summarize(out.rows, eb);
   return out;
}

StudyResult run_clt_study(const StudyConfig& config)
{
   return run_clt_study(config, load_inputs(config));
}

RobustnessResult run_robustness_study(const StudyConfig& config, const StudyInputs& inputs)
{
   validate(config);
   const auto& problem = inputs.problem;
   const auto exact = exact_solution(problem.mdp, problem.pi_e, problem.dist);
   const auto bad = io::load_class(config.misspecified_class, problem.mdp);
   const auto& good = inputs.classes;
   const auto population = TransitionStats::from_population(problem.mdp, problem.dist);
   const double eb = exact_eb(problem);

   struct ArmSpec {
      const char* name;
      bool w_correct;
      bool q_correct;
   };
   const ArmSpec specs[] = {
      {"both_correct", true, true},
      {"w_correct_only", true, false},
      {"q_correct_only", false, true},
      {"both_wrong", false, false},
   };

   RobustnessResult out;
   for (const auto& spec : specs) {
      RobustnessArm arm;
      arm.name = spec.name;
      arm.w_correct = spec.w_correct;
      arm.q_correct = spec.q_correct;
      NuisanceClasses classes{spec.w_correct ? good.w1 : bad, spec.w_correct ? good.q1 : bad,
                              spec.q_correct ? good.q2 : bad, spec.q_correct ? good.w2 : bad};
      if (!spec.w_correct && span_contains(bad, exact.w, problem.dist.joint()).contained)
         arm.excludes_truth = false;
      if (!spec.q_correct && span_contains(bad, exact.q, problem.dist.joint()).contained)
         arm.excludes_truth = false;

      const auto limit = minimax_fitter(classes, config.estimator.stab, problem.mdp, problem.pi_e)(population);
      arm.population_bias = std::abs(
         minimax_identity_check(problem.mdp, problem.pi_e, problem.dist, limit.w.values, limit.q.values).product);

      const auto arm_inputs = with_classes(inputs, classes);
      arm.result.rows = run_replications(config, arm_inputs, config.estimator);
      arm.result.summary = summarize(arm.result.rows, eb);
      out.arms.push_back(std::move(arm));
   }
   return out;
}

RobustnessResult run_robustness_study(const StudyConfig& config)
{
   return run_robustness_study(config, load_inputs(config));
}

FqiDecayTable run_fqi_decay(const StudyConfig&, const StudyInputs& inputs, const std::vector<std::size_t>& t_grid)
{
   if (t_grid.empty() || !strictly_increasing(t_grid) || t_grid.front() == 0)
      throw ValidationError("t_grid must be nonempty, positive and strictly increasing");
   const auto& problem = inputs.problem;
   const auto& mdp = problem.mdp;
   const double g = mdp.gamma;
   const auto exact = exact_solution(mdp, problem.pi_e, problem.dist);
   const auto ops = build_operators(mdp, problem.pi_e, problem.dist);
   const Vector f0 = Vector::Zero(static_cast<Eigen::Index>(mdp.n_pairs()));

   FqiDecayTable out;
   out.c_q = mdp.r_max / (1.0 - g);
   out.w_norm = ops.norm(exact.w);
   for (const auto t : t_grid) {
      const auto result = fqi_population(mdp, problem.dist, inputs.classes.q2, t, f0, problem.pi_e);
      FqiDecayRow row;
      row.t = t;
      row.error = std::abs(result.estimate.j_hat - exact.j);
      for (std::size_t k = 1; k < result.iterates.size(); ++k)
         row.epsilon = std::max(row.epsilon, ops.norm(result.iterates[k] - ops.bellman(result.iterates[k - 1])));
      row.gamma_term = std::pow(g, 0.5 * static_cast<double>(t));
      row.bound = (1.0 - row.gamma_term) * (1.0 + std::sqrt(g)) / std::sqrt(1.0 - g) * out.w_norm * row.epsilon
                  + 2.0 * row.gamma_term * (1.0 - g) * out.c_q;
      row.within_bound = row.error <= row.bound + 1e-12;
      out.rows.push_back(row);
   }
   for (std::size_t k = 1; k < out.rows.size(); ++k) {
      const auto& a = out.rows[k - 1];
      const auto& b = out.rows[k];
      const double steps = static_cast<double>(b.t - a.t);
      out.step_factors.push_back(a.error > 0.0 && b.error > 0.0 ? std::pow(b.error / a.error, 1.0 / steps) : kNaN);
   }
   return out;
}

FqiDecayTable run_fqi_decay(const StudyConfig& config)
{
   return run_fqi_decay(config, load_inputs(config), config.t_grid);
}

std::string rows_csv(const std::vector<StudyRow>& rows)
{
   std::ostringstream out;
   out << "n,replication,seed,j_hat,j_true,error,std_error\n";
   for (const auto& r : rows)
      out << r.n << ',' << r.replication << ',' << r.seed << ',' << io::format_double(r.j_hat) << ','
          << io::format_double(r.j_true) << ',' << io::format_double(r.error) << ','
          << io::format_double(r.std_error) << '\n';
   return out.str();
}

io::json summary_json(const StudySummary& summary)
{
   io::json sizes = io::json::array();
   for (const auto& s : summary.sizes)
      sizes.push_back({{"n", s.n},
                       {"count", s.count},
                       {"failures", s.failures},
                       {"rmse", s.rmse},
                       {"mean_error", s.mean_error},
                       {"scaled_variance", s.scaled_variance},
                       {"var_ratio", s.var_ratio},
                       {"coverage", s.coverage},
                       {"plugin_coverage", s.plugin_coverage}});
   io::json j;
   j["slope"] = summary.slope;
   j["slope_se"] = summary.slope_se;
   j["eb"] = summary.eb;
   j["degenerate"] = summary.degenerate;
   j["var_ratio"] = summary.sizes.empty() ? kNaN : summary.sizes.back().var_ratio;
   j["coverage"] = summary.sizes.empty() ? kNaN : summary.sizes.back().coverage;
   j["sizes"] = sizes;
   return j;
}

io::json to_json(const RobustnessResult& result)
{
   io::json arms = io::json::array();
   for (const auto& arm : result.arms)
      arms.push_back({{"arm", arm.name},
                      {"w_correct", arm.w_correct},
                      {"q_correct", arm.q_correct},
                      {"excludes_truth", arm.excludes_truth},
                      {"population_bias", arm.population_bias},
                      {"summary", summary_json(arm.result.summary)}});
   return {{"arms", arms}};
}

io::json to_json(const FqiDecayTable& table)
{
   io::json rows = io::json::array();
   for (const auto& r : table.rows)
      rows.push_back({{"T", r.t},
                      {"error", r.error},
                      {"epsilon", r.epsilon},
                      {"gamma_term", r.gamma_term},
                      {"bound", r.bound},
                      {"within_bound", r.within_bound}});
   return {{"c_q", table.c_q}, {"w_norm", table.w_norm}, {"rows", rows}, {"step_factors", table.step_factors}};
}

std::string fqi_csv(const FqiDecayTable& table)
{
   std::ostringstream out;
   out << "T,error,epsilon,gamma_term,bound\n";
   for (const auto& r : table.rows)
      out << r.t << ',' << io::format_double(r.error) << ',' << io::format_double(r.epsilon) << ','
          << io::format_double(r.gamma_term) << ',' << io::format_double(r.bound) << '\n';
   return out.str();
}

std::string rate_plot_svg(const StudySummary& summary, const std::string& title)
{
   std::vector<std::pair<double, double>> pts;
   for (const auto& s : summary.sizes)
      if (s.count > 0 && s.rmse > 0.0)
         pts.emplace_back(std::log(static_cast<double>(s.n)), std::log(s.rmse));

   constexpr double width = 520.0;
   constexpr double height = 360.0;
   constexpr double margin = 50.0;
   std::ostringstream svg;
   svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
   svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
   svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
       << title << "</text>\n";
   if (pts.empty()) {
      svg << "</svg>\n";
      return svg.str();
   }
   double x0 = pts.front().first, x1 = x0, y0 = pts.front().second, y1 = y0;
   for (const auto& [x, y] : pts) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
   }
   if (x1 - x0 < 1e-9) {
      x0 -= 0.5;
      x1 += 0.5;
   }
   if (y1 - y0 < 1e-9) {
      y0 -= 0.5;
      y1 += 0.5;
   }
   auto px = [&](double x) { return margin + (x - x0) / (x1 - x0) * (width - 2 * margin); };
   auto py = [&](double y) { return height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin); };
   char buf[160];
   svg << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin << "\" y2=\""
       << height - margin << "\" stroke=\"black\"/>\n";
   svg << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\"" << height - margin
       << "\" stroke=\"black\"/>\n";
   svg << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">log n</text>\n";
   svg << "<text x=\"14\" y=\"" << height / 2 << "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 "
       << height / 2 << ")\">log RMSE</text>\n";
   for (const auto& [x, y] : pts) {
      std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"4\" fill=\"steelblue\"/>\n", px(x), py(y));
      svg << buf;
   }
   if (std::isfinite(summary.slope) && pts.size() >= 2) {
      double mx = 0.0, my = 0.0;
      for (const auto& [x, y] : pts) {
         mx += x;
         my += y;
      }
      mx /= static_cast<double>(pts.size());
      my /= static_cast<double>(pts.size());
      const double ya = my + summary.slope * (x0 - mx);
      const double yb = my + summary.slope * (x1 - mx);
      std::snprintf(buf, sizeof buf,
                    "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"firebrick\" stroke-dasharray=\"5,3\"/>\n",
                    px(x0), py(ya), px(x1), py(yb));
      svg << buf;
      std::snprintf(buf, sizeof buf,
                    "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
                    "slope %.3f</text>\n",
                    width - margin, margin, summary.slope);
      svg << buf;
   }
   svg << "</svg>\n";
   return svg.str();
}

void write_study(const StudyConfig& config, const std::string& prefix, const StudyResult& result, bool plot)
{
   io::write_text(config.output_dir / (prefix + ".csv"), rows_csv(result.rows));
   io::write_text(config.output_dir / (prefix + "_summary.json"), summary_json(result.summary).dump(2) + "\n");
   if (plot)
      io::write_text(config.output_dir / (prefix + ".svg"), rate_plot_svg(result.summary, prefix));
}

}  // namespace mope
