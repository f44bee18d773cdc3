#ifndef MOPE_EXPERIMENTS_HPP
#define MOPE_EXPERIMENTS_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mope/estimators.hpp"
#include "mope/io.hpp"

namespace mope {

struct EstimatorSpec {
   Variant variant = Variant::dr_crossfit;
   StabilizerConfig stab;
   std::string q_class = "onehot";
   std::string w_class = "onehot";
   /// Bins for sample-split FQI.
   std::size_t fqi_iterations = 10;
};

struct StudyConfig {
   std::filesystem::path mdp_path;
   std::filesystem::path pi_e_path;
   std::filesystem::path pi_b_path;
   /// Empty: the stationary law of the behavior kernel.
   std::filesystem::path ps_path;
   EstimatorSpec estimator;
   std::vector<std::size_t> n_grid;
   std::size_t replications = 2;
   std::uint64_t base_seed = 0;
   std::filesystem::path output_dir = "results";
   /// Worker threads; 0 picks the hardware concurrency.
   std::size_t threads = 0;
   /// Replace every sample by exact population statistics.
   bool population = false;
   /// Class that stands in for a misspecified one in the robustness arms.
   std::string misspecified_class = "constant";
   std::vector<std::size_t> t_grid{1, 2, 4, 8, 16};
};

void validate(const StudyConfig& config);

/// Relative paths are resolved against `base_dir`.
StudyConfig study_config_from_json(const io::json& j, const std::filesystem::path& base_dir);
StudyConfig load_study_config(const std::filesystem::path& path);

/// In-memory inputs of a study.
struct StudyInputs {
   OpeProblem problem;
   NuisanceClasses classes;
};

StudyInputs load_inputs(const StudyConfig& config);

/// Runs one estimator variant on a batch; `seed` drives fold and bin splits.
OpeEstimate run_variant(const EstimatorSpec& spec, const NuisanceClasses& classes, const TabularMDP& mdp,
                        const Policy& pi_e, const TransitionDataset& data, std::uint64_t seed);
/// Same estimator with exact population statistics in place of a batch.
OpeEstimate run_variant_population(const EstimatorSpec& spec, const NuisanceClasses& classes,
                                   const OpeProblem& problem);

struct StudyRow {
   std::size_t n = 0;
   std::size_t replication = 0;
   std::uint64_t seed = 0;
   double j_hat = 0.0;
   double j_true = 0.0;
   double error = 0.0;
   double std_error = 0.0;
   /// Nonempty when the estimator threw; the row is left out of aggregates.
   std::string failure;

   bool ok() const { return failure.empty(); }
};

struct SizeSummary {
   std::size_t n = 0;
   std::size_t count = 0;
   std::size_t failures = 0;
   double rmse = 0.0;
   double mean_error = 0.0;
   /// n * sample variance of the errors.
   double scaled_variance = 0.0;
   /// n * var / EB; NaN when EB is degenerate.
   double var_ratio = 0.0;
   /// Share of rows with |error| <= 1.96 sqrt(EB / n).
   double coverage = 0.0;
   /// Same with the plug-in standard error of each row.
   double plugin_coverage = 0.0;
};

struct StudySummary {
   std::vector<SizeSummary> sizes;
   double slope = 0.0;
   double slope_se = 0.0;
   double eb = 0.0;
   bool degenerate = false;
};

inline constexpr double kDegenerateEb = 1e-14;

struct StudyResult {
   std::vector<StudyRow> rows;
   StudySummary summary;
};

/// Seed of replication i at grid point k.
std::uint64_t replication_seed(std::uint64_t base, std::size_t n_index, std::size_t replication);

/// Pure function of the rows.
StudySummary summarize(const std::vector<StudyRow>& rows, double eb);

/// Ordinary least squares slope of log y on log x with its standard error.
std::pair<double, double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Runs every (n, replication) task, `threads` at a time, into preallocated slots.
std::vector<StudyRow> run_replications(const StudyConfig& config, const StudyInputs& inputs,
                                       const EstimatorSpec& spec);

StudyResult run_rate_study(const StudyConfig& config, const StudyInputs& inputs);
StudyResult run_rate_study(const StudyConfig& config);

StudyResult run_clt_study(const StudyConfig& config, const StudyInputs& inputs);
StudyResult run_clt_study(const StudyConfig& config);

struct RobustnessArm {
   std::string name;
   bool w_correct = true;
   bool q_correct = true;
   /// Whether the misspecified class really leaves out w_pi / q_pi.
   bool excludes_truth = true;
   /// |E[(w* - w_pi) T_gamma (q* - q_pi)]| at the population nuisances.
   double population_bias = 0.0;
   StudyResult result;
};

struct RobustnessResult {
   std::vector<RobustnessArm> arms;
};

RobustnessResult run_robustness_study(const StudyConfig& config, const StudyInputs& inputs);
RobustnessResult run_robustness_study(const StudyConfig& config);

struct FqiDecayRow {
   std::size_t t = 0;
   double error = 0.0;
   /// max_t ||f_t - B f_{t-1}||_2
   double epsilon = 0.0;
   double gamma_term = 0.0;
   double bound = 0.0;
   bool within_bound = false;
};

struct FqiDecayTable {
   std::vector<FqiDecayRow> rows;
   double c_q = 0.0;
   double w_norm = 0.0;
   /// (err(T_k) / err(T_{k-1}))^{1 / (T_k - T_{k-1})} per step; NaN where an error is zero.
   std::vector<double> step_factors;
};

FqiDecayTable run_fqi_decay(const StudyConfig& config, const StudyInputs& inputs, const std::vector<std::size_t>& t_grid);
FqiDecayTable run_fqi_decay(const StudyConfig& config);

// --- output --------------------------------------------------------------

/// Columns n,replication,seed,j_hat,j_true,error,std_error.
std::string rows_csv(const std::vector<StudyRow>& rows);
io::json summary_json(const StudySummary& summary);
io::json to_json(const RobustnessResult& result);
io::json to_json(const FqiDecayTable& table);
std::string fqi_csv(const FqiDecayTable& table);
/// log RMSE against log n with the fitted line.
std::string rate_plot_svg(const StudySummary& summary, const std::string& title);

/// Writes <prefix>.csv, <prefix>_summary.json and, with `plot`, <prefix>.svg under the output directory.
void write_study(const StudyConfig& config, const std::string& prefix, const StudyResult& result, bool plot);

}  // namespace mope

#endif  // MOPE_EXPERIMENTS_HPP
