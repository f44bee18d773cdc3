// Command-line front end: exact solutions, sampling, estimation, diagnostics and studies.

#include <cmath>
#include <iostream>
#include <limits>
#include <optional>

#include "CLI11.hpp"
#include "mope/diagnostics.hpp"
#include "mope/experiments.hpp"
#include "mope/rng.hpp"

using namespace mope;
using io::json;

namespace {

struct ProblemArgs {
   std::string mdp;
   std::string pi_e;
   std::string pi_b;
   std::string ps;
};

void add_problem_options(CLI::App* cmd, ProblemArgs& args, bool need_pi_e, bool need_pi_b)
{
   cmd->add_option("--mdp", args.mdp, "MDP JSON file")->required()->check(CLI::ExistingFile);
   auto* e = cmd->add_option("--pi-e", args.pi_e, "evaluation policy JSON")->check(CLI::ExistingFile);
   auto* b = cmd->add_option("--pi-b", args.pi_b, "behavior policy JSON")->check(CLI::ExistingFile);
   cmd->add_option("--ps", args.ps, "state weights P_S JSON (default: stationary law of pi_b)")
      ->check(CLI::ExistingFile);
   if (need_pi_e)
      e->required();
   if (need_pi_b)
      b->required();
}

OpeProblem load_problem(const ProblemArgs& args)
{
   auto mdp = io::load_mdp(args.mdp);
   auto pi_e = io::load_policy(args.pi_e);
   auto pi_b = io::load_policy(args.pi_b);
   validate(pi_e, mdp.n_states, mdp.n_actions);
   validate(pi_b, mdp.n_states, mdp.n_actions);
   Vector ps = args.ps.empty() ? stationary_state_distribution(mdp, pi_b) : io::load_vector(args.ps);
   DataDistribution dist(std::move(ps), std::move(pi_b));
   validate(dist, mdp);
   return {std::move(mdp), std::move(pi_e), std::move(dist)};
}

/// NaN and infinities become null.
json number(double x)
{
   return std::isfinite(x) ? json(x) : json(nullptr);
}

json nuisance_json(const NuisanceEstimate& est)
{
   return {{"kind", est.kind == NuisanceKind::q ? "q" : "w"},
           {"coeffs", io::to_json(est.coeffs)},
           {"values", io::to_json(est.values)},
           {"objective", number(est.objective_value)},
           {"condition", number(est.condition)},
           {"ridge_applied", est.ridge_applied}};
}

json recovery_json(const OperatorSet& ops, const LinearClass& cls, EmbeddingKind kind)
{
   const auto emb = embed(ops, cls, kind);
   if (!emb.exists)
      return {{"exists", false}, {"residual", emb.residual}};
   try {
      const auto r = recovery_constant(ops, cls, emb);
      return {{"exists", true}, {"c_iota", r.c_iota}, {"eigenvalues", io::to_json(r.singular_values)}};
   } catch (const std::exception& e) {
      return {{"exists", true}, {"error", e.what()}};
   }
}

json completeness_json(const CompletenessReport& r)
{
   return {{"realizable", r.realizable},
           {"realizability_residual", r.realizability_residual},
           {"closed", r.closed},
           {"closure_residual", r.closure_residual},
           {"pass", r.pass},
           {"warnings", r.warnings}};
}

json adjoint_json(const AdjointCompletenessReport& r)
{
   return {{"embedding_exists", r.embedding_exists},
           {"x_nonsingular", r.x_nonsingular},
           {"spectral_gap", number(r.spectral_gap)},
           {"pass", r.pass}};
}

std::vector<Vector> load_dictionary(const std::string& path)
{
   std::vector<Vector> out;
   for (const auto& v : io::read_json(path))
      out.push_back(io::vector_from_json(v));
   return out;
}

void print(const json& j)
{
   std::cout << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv)
{
   CLI::App app{"Minimax off-policy evaluation on tabular MDPs"};
   app.require_subcommand(1);

   // exact
   ProblemArgs exact_args;
   auto* exact_cmd = app.add_subcommand("exact", "Print J, q and w of the evaluation policy");
   add_problem_options(exact_cmd, exact_args, true, true);

   // generate
   RandomMdpOptions gen_opt;
   std::uint64_t gen_seed = 0;
   std::string gen_dir = ".";
   auto* gen_cmd = app.add_subcommand("generate", "Write a random MDP, policies and state weights");
   gen_cmd->add_option("--states", gen_opt.n_states, "number of states")->check(CLI::PositiveNumber);
   gen_cmd->add_option("--actions", gen_opt.n_actions, "number of actions")->check(CLI::PositiveNumber);
   gen_cmd->add_option("--gamma", gen_opt.gamma, "discount")->check(CLI::Range(0.0, 0.999999));
   gen_cmd->add_option("--reward-support", gen_opt.reward_support, "reward outcomes per (s,a)")
      ->check(CLI::PositiveNumber);
   gen_cmd->add_option("--seed", gen_seed, "RNG seed");
   gen_cmd->add_option("--out-dir", gen_dir, "directory for mdp.json, pi_e.json, pi_b.json, ps.json");

   // sample
   ProblemArgs sample_args;
   std::size_t sample_n = 1000;
   std::uint64_t sample_seed = 0;
   std::string sample_out;
   auto* sample_cmd = app.add_subcommand("sample", "Draw an i.i.d. transition dataset");
   add_problem_options(sample_cmd, sample_args, false, true);
   sample_cmd->add_option("--n", sample_n, "number of tuples")->required();
   sample_cmd->add_option("--seed", sample_seed, "RNG seed");
   sample_cmd->add_option("--out", sample_out, "output CSV (stdout when omitted)");

   // estimate
   ProblemArgs est_args;
   std::string variant = "drcf";
   std::string data_path;
   std::string q_spec = "onehot";
   std::string w_spec = "onehot";
   StabilizerConfig stab;
   std::uint64_t est_seed = 0;
   std::size_t iterations = 10;
   std::string dict_w_path;
   std::string dict_q_path;
   auto* est_cmd = app.add_subcommand("estimate", "Estimate J from a dataset");
   add_problem_options(est_cmd, est_args, true, false);
   est_cmd->add_option("--variant", variant, "mql|mwl|dm|is|dr|drcf|fqi|mdl")
      ->check(CLI::IsMember({"mql", "mwl", "dm", "is", "dr", "drcf", "fqi", "mdl"}));
   est_cmd->add_option("--data", data_path, "dataset CSV")->required()->check(CLI::ExistingFile);
   est_cmd->add_option("--q-class", q_spec, "onehot|constant|state|features.csv");
   est_cmd->add_option("--w-class", w_spec, "onehot|constant|state|features.csv");
   est_cmd->add_option("--lambda", stab.lambda_w, "stabilizer of the w-problem")->check(CLI::NonNegativeNumber);
   est_cmd->add_option("--lambda-q", stab.lambda_q, "stabilizer of the q-problem")->check(CLI::NonNegativeNumber);
   est_cmd->add_option("--ridge", stab.ridge, "ridge on G/H (0 = automatic)")->check(CLI::NonNegativeNumber);
   est_cmd->add_option("--seed", est_seed, "seed for fold and bin splits");
   est_cmd->add_option("--iterations", iterations, "FQI iterations (bins)");
   est_cmd->add_option("--dict-w", dict_w_path, "MDL: JSON list of w vectors")->check(CLI::ExistingFile);
   est_cmd->add_option("--dict-q", dict_q_path, "MDL: JSON list of q vectors")->check(CLI::ExistingFile);

   // diagnose
   auto* diag_cmd = app.add_subcommand("diagnose", "Operator, completeness and constant checks");
   diag_cmd->require_subcommand(1);
   ProblemArgs diag_args;
   std::string check = "adjoint";
   std::uint64_t diag_seed = 0;
   auto* ops_cmd = diag_cmd->add_subcommand("operators", "Adjointness, fixed points or operator norm");
   add_problem_options(ops_cmd, diag_args, true, true);
   ops_cmd->add_option("--check", check, "adjoint|fixedpoint|norm")
      ->check(CLI::IsMember({"adjoint", "fixedpoint", "norm"}));
   ops_cmd->add_option("--seed", diag_seed, "seed of the random probes");
   auto* comp_cmd = diag_cmd->add_subcommand("completeness", "Realizability and Bellman completeness of two classes");
   add_problem_options(comp_cmd, diag_args, true, true);
   comp_cmd->add_option("--q-class", q_spec, "onehot|constant|state|features.csv");
   comp_cmd->add_option("--w-class", w_spec, "onehot|constant|state|features.csv");
   auto* all_cmd = diag_cmd->add_subcommand("all", "Concentrability, EB, recovery constants, norm equivalence");
   add_problem_options(all_cmd, diag_args, true, true);
   all_cmd->add_option("--class", q_spec, "class for the recovery constants (onehot default)");
   all_cmd->add_option("--seed", diag_seed, "seed of the random probes");

   // studies
   std::string config_path;
   bool plot = false;
   std::optional<std::size_t> threads;
   std::string output_dir;
   std::vector<CLI::App*> study_cmds;
   for (const char* name : {"rates", "clt", "robustness", "fqi"}) {
      auto* cmd = app.add_subcommand(name, std::string("Run the ") + name + " study");
      cmd->add_option("--config", config_path, "study JSON")->required()->check(CLI::ExistingFile);
      cmd->add_flag("--plot", plot, "also write an SVG of log RMSE against log n");
      cmd->add_option("--threads", threads, "override the worker count of the config");
      cmd->add_option("--output-dir", output_dir, "override the output directory of the config");
      study_cmds.push_back(cmd);
   }

   CLI11_PARSE(app, argc, argv);

   try {
      if (*gen_cmd) {
         const auto mdp = random_mdp(gen_opt, gen_seed);
         const auto pi_e = random_policy(mdp.n_states, mdp.n_actions, mix_seed(gen_seed, 1), 0.2);
         const auto pi_b = random_policy(mdp.n_states, mdp.n_actions, mix_seed(gen_seed, 2), 0.5);
         const auto ps = random_simplex(mdp.n_states, mix_seed(gen_seed, 3), 0.5);
         const std::filesystem::path dir(gen_dir);
         io::write_text(dir / "mdp.json", io::to_json(mdp).dump(2) + "\n");
         io::write_text(dir / "pi_e.json", io::to_json(pi_e).dump(2) + "\n");
         io::write_text(dir / "pi_b.json", io::to_json(pi_b).dump(2) + "\n");
         io::write_text(dir / "ps.json", io::to_json(ps).dump(2) + "\n");
      } else if (*exact_cmd) {
         const auto problem = load_problem(exact_args);
         const auto sol = exact_solution(problem.mdp, problem.pi_e, problem.dist);
         print({{"J", sol.j},
                {"q", io::to_json(sol.q)},
                {"v", io::to_json(sol.v)},
                {"w", sol.w.size() ? io::to_json(sol.w) : json(nullptr)}});
      } else if (*sample_cmd) {
         auto mdp = io::load_mdp(sample_args.mdp);
         auto pi_b = io::load_policy(sample_args.pi_b);
         validate(pi_b, mdp.n_states, mdp.n_actions);
         Vector ps = sample_args.ps.empty() ? stationary_state_distribution(mdp, pi_b) : io::load_vector(sample_args.ps);
         DataDistribution dist(std::move(ps), std::move(pi_b));
         validate(dist, mdp);
         const auto data = draw_dataset(mdp, dist, sample_n, sample_seed);
         if (sample_out.empty())
            io::write_dataset(std::cout, data);
         else
            io::save_dataset(sample_out, data);
      } else if (*est_cmd) {
         const auto mdp = io::load_mdp(est_args.mdp);
         const auto pi_e = io::load_policy(est_args.pi_e);
         validate(pi_e, mdp.n_states, mdp.n_actions);
         const auto data = io::load_dataset(data_path, mdp);
         validate(stab);
         const auto v = parse_variant(variant);
         OpeEstimate est;
         if (v == Variant::mdl) {
            if (dict_w_path.empty() || dict_q_path.empty())
               throw std::invalid_argument("mdl needs --dict-w and --dict-q");
            est = mdl(TransitionStats::from_dataset(data), load_dictionary(dict_w_path), load_dictionary(dict_q_path),
                      mdp, pi_e);
         } else {
            const auto w = io::load_class(w_spec, mdp);
            const auto q = io::load_class(q_spec, mdp);
            EstimatorSpec spec;
            spec.variant = v;
            spec.stab = stab;
            spec.fqi_iterations = iterations;
            est = run_variant(spec, NuisanceClasses::shared(w, q), mdp, pi_e, data, est_seed);
         }
         json diagnostics(est.diagnostics);
         diagnostics["n"] = data.size();
         diagnostics["std_error"] = number(est.std_error);
         json out{{"j_hat", est.j_hat}, {"variant", variant}, {"diagnostics", diagnostics}};
         json nuisances = json::array();
         for (const auto& n : est.nuisances)
            nuisances.push_back(nuisance_json(n));
         for (const auto& f : est.folds)
            nuisances.push_back({{"fold", f.fold}, {"j_hat", f.j_hat}, {"w", nuisance_json(f.w)}, {"q", nuisance_json(f.q)}});
         out["nuisances"] = nuisances;
         print(out);
      } else if (*ops_cmd) {
         const auto problem = load_problem(diag_args);
         const auto ops = build_operators(problem.mdp, problem.pi_e, problem.dist);
         json out{{"check", check}};
         if (check == "adjoint") {
            Rng rng(diag_seed);
            double worst = 0.0;
            const auto n = ops.p_pi.rows();
            for (int k = 0; k < 50; ++k) {
               Vector f(n), g(n);
               for (Eigen::Index i = 0; i < n; ++i) {
                  f(i) = rng.normal();
                  g(i) = rng.normal();
               }
               worst = std::max(worst, std::abs(ops.inner(f, ops.forward(g)) - ops.inner(ops.apply_adjoint(f), g)));
            }
            out["residual"] = worst;
            out["pass"] = worst < 1e-9;
         } else if (check == "fixedpoint") {
            const auto sol = exact_solution(problem.mdp, problem.pi_e, problem.dist);
            const double rq = (ops.bellman(sol.q) - sol.q).cwiseAbs().maxCoeff();
            const double rw = (ops.backward_bellman(sol.w) - sol.w).cwiseAbs().maxCoeff();
            out["q_residual"] = rq;
            out["w_residual"] = rw;
            out["pass"] = rq < 1e-9 && rw < 1e-9;
         } else {
            const auto conc = concentrability(problem.mdp, problem.pi_e, problem.dist);
            const auto r = operator_norm_check(ops, conc.c_m, conc.c_eta);
            out["norm"] = r.norm;
            out["bound"] = r.bound;
            out["iterations"] = r.iterations;
            out["pass"] = r.pass;
         }
         print(out);
      } else if (*comp_cmd) {
         const auto problem = load_problem(diag_args);
         const auto ops = build_operators(problem.mdp, problem.pi_e, problem.dist);
         const auto sol = exact_solution(problem.mdp, problem.pi_e, problem.dist);
         const auto q = io::load_class(q_spec, problem.mdp);
         const auto w = io::load_class(w_spec, problem.mdp);
         print({{"q_completeness", completeness_json(check_q_completeness(q, w, ops, sol))},
                {"w_completeness", completeness_json(check_w_completeness(w, q, ops, sol))},
                {"adjoint_q_completeness", adjoint_json(check_adjoint_q_completeness(q, ops))},
                {"adjoint_w_completeness", adjoint_json(check_adjoint_w_completeness(w, ops))}});
      } else if (*all_cmd) {
         const auto problem = load_problem(diag_args);
         const auto ops = build_operators(problem.mdp, problem.pi_e, problem.dist);
         const auto sol = exact_solution(problem.mdp, problem.pi_e, problem.dist);
         const auto cls = io::load_class(q_spec, problem.mdp);
         const auto conc = concentrability(problem.mdp, problem.pi_e, problem.dist);
         const auto eb = efficiency_bound(problem.mdp, problem.pi_e, problem.dist);
         const auto ne = norm_equivalence_check(ops, sol, conc, 100, diag_seed);
         print({{"concentrability",
                 {{"c_w", number(conc.c_w)},
                  {"c_eta", number(conc.c_eta)},
                  {"c_m", number(conc.c_m)},
                  {"gamma_contraction", number(conc.gamma_contraction)},
                  {"stationary", conc.stationary}}},
                {"eb", eb.eb},
                {"eb_per_cell", io::to_json(eb.per_cell)},
                {"c_iota_q", recovery_json(ops, cls, EmbeddingKind::forward)},
                {"c_iota_w", recovery_json(ops, cls, EmbeddingKind::adjoint)},
                {"norm_equiv",
                 {{"pass", ne.pass},
                  {"checked", ne.checked},
                  {"violations", ne.violations},
                  {"lower_applicable", ne.lower_applicable},
                  {"worst_slack", number(ne.worst_slack)}}}});
      } else {
         auto config = load_study_config(config_path);
         if (threads)
            config.threads = *threads;
         if (!output_dir.empty())
            config.output_dir = output_dir;
         if (*study_cmds[0]) {
            const auto result = run_rate_study(config);
            write_study(config, "rates", result, plot);
            print(summary_json(result.summary));
         } else if (*study_cmds[1]) {
            const auto result = run_clt_study(config);
            write_study(config, "clt", result, plot);
            print(summary_json(result.summary));
         } else if (*study_cmds[2]) {
            const auto result = run_robustness_study(config);
            for (const auto& arm : result.arms)
               write_study(config, "robustness_" + arm.name, arm.result, plot);
            const auto j = to_json(result);
            io::write_text(config.output_dir / "robustness_summary.json", j.dump(2) + "\n");
            print(j);
         } else {
            const auto table = run_fqi_decay(config);
            io::write_text(config.output_dir / "fqi.csv", fqi_csv(table));
            const auto j = to_json(table);
            io::write_text(config.output_dir / "fqi_summary.json", j.dump(2) + "\n");
            print(j);
         }
      }
   } catch (const std::exception& e) {
      std::cerr << "mope: " << e.what() << '\n';
      return 1;
   }
   return 0;
}
