#pragma once

#include "fmre/estimators.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace fmre {

/// One cell of a risk table. kappa/lambda are NaN where the scenario has no
/// such parameter; they print as empty CSV fields.
struct RiskRow {
  std::string scenario;
  std::string estimator;
  int p = 0;
  int n = 0;
  double kappa = std::numeric_limits<double>::quiet_NaN();
  double lambda = std::numeric_limits<double>::quiet_NaN();
  int reps = 0;
  int failures = 0;
  double risk = 0.0;
  double mc_se = 0.0;
  std::uint64_t seed = 0;
};

struct SimConfig {
  SimConfig(std::string scenario_, ModelParams true_params_)
      : scenario(std::move(scenario_)), true_params(std::move(true_params_)) {}

  std::string scenario;
  ModelParams true_params;
  // Observations per replicate. The Wishart scenarios observe a single
  // matrix whose degrees of freedom play the role of the sample size.
  int sample_size = 1;
  int replicates = 100;
  std::vector<std::string> estimators;
  McmcConfig mcmc;
  MreOptions mre;
  int wishart_inner_draws = 2000;  // MLE / MoM inner Monte-Carlo size
  int true_mean_draws = 200000;    // draws behind the true Wishart Frechet mean
  std::uint64_t master_seed = 42;
  int threads = 0;  // 0: FMRE_THREADS env var, then hardware concurrency
  TorusMleOptions torus_mle_opts;
  int gibbs_burn_in_sweeps = 50;

  void validate() const;
};

/// Paired per-replicate losses: column e holds the observed squared
/// distances of estimator e across the replicates that succeeded for every
/// estimator (failures are dropped from all columns).
struct LossTable {
  std::vector<std::string> estimators;
  Mat losses;  // used replicates x estimators
  int failures = 0;
};

LossTable estimate_losses(const SimConfig& cfg);

/// Risk rows (mean loss and Monte-Carlo standard error) for each estimator.
std::vector<RiskRow> estimate_risk(const SimConfig& cfg);

struct TableOptions {
  int replicates = 0;  // 0: the table's published default (500 / 1000)
  std::uint64_t seed = 42;
  McmcConfig mcmc;
  MreOptions mre;
  int wishart_inner_draws = 2000;
  int threads = 0;
  std::optional<int> p_filter;
  std::optional<int> n_filter;
  std::optional<double> lambda_filter;
};

/// Wishart risk table: (p in {2,4}) x (n in {5,10,40}) with the sample
/// Frechet mean X/n, the MLE, and the MREs on the X/n and Sigma_MoM orbits.
std::vector<RiskRow> run_table1(const TableOptions& opts = {});

/// Torus risk table: p = 3, kappa_i = 2, the five (lambda, n) scenarios,
/// with the sample Frechet mean, the profile MLE, and the MLE-orbit adaptive
/// MRE; emits per-estimator risks plus ratio rows against the adaptive MRE.
std::vector<RiskRow> run_table2(const TableOptions& opts = {});

std::string rows_to_csv(const std::vector<RiskRow>& rows);
std::string rows_to_json(const std::vector<RiskRow>& rows);

/// Command line entry point (subcommands table1, table2, estimate, sample,
/// frechet-mean). Returns 0 on success, 1 on configuration errors, 2 on
/// numerical failures.
int cli_main(int argc, const char* const* argv);

}  // namespace fmre
