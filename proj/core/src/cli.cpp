#include "fmre/frechet.hpp"
#include "fmre/harness.hpp"
#include "fmre/rng.hpp"
#include "fmre/serialization.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

namespace fmre {

namespace {

using nlohmann::json;

void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open output file: " + path);
  out << content;
}

Vec to_vec(const std::vector<double>& v) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out(i) = v[i];
  return out;
}

// Scalars broadcast to the requested length; lists must match it.
Vec broadcast(const std::vector<double>& v, int len, const char* what) {
  if (static_cast<int>(v.size()) == len) return to_vec(v);
  if (v.size() == 1) return Vec::Constant(len, v[0]);
  throw std::invalid_argument(std::string(what) + ": expected 1 or " + std::to_string(len) +
                              " values");
}

struct McmcFlags {
  int iterations = 1500;
  int burn_in = 500;
  int thin = 1;
  std::string proposal = "haar";
  double rw_scale = 0.3;

  void attach(CLI::App* cmd) {
    cmd->add_option("--mcmc-iters", iterations, "MCMC iterations");
    cmd->add_option("--burn-in", burn_in, "MCMC burn-in");
    cmd->add_option("--thin", thin, "MCMC thinning");
    cmd->add_option("--proposal", proposal, "MCMC proposal: haar or rw")
        ->check(CLI::IsMember({"haar", "rw"}));
    cmd->add_option("--rw-scale", rw_scale, "random-walk proposal scale");
  }

  McmcConfig build(std::uint64_t seed) const {
    McmcConfig cfg;
    cfg.iterations = iterations;
    cfg.burn_in = burn_in;
    cfg.thin = thin;
    cfg.proposal = proposal == "rw" ? ProposalKind::RandomWalk : ProposalKind::UniformHaar;
    cfg.random_walk_scale = rw_scale;
    cfg.seed = seed;
    return cfg;
  }
};

std::vector<ManifoldPoint> load_data(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open data file: " + path);
  return read_data_file(in);
}

MetricKind parse_metric(const std::string& m) {
  if (m == "intrinsic") return MetricKind::Intrinsic;
  if (m == "extrinsic") return MetricKind::Extrinsic;
  throw std::invalid_argument("metric must be intrinsic or extrinsic");
}

json point_json(const ManifoldPoint& p) { return json::parse(point_to_json(p)); }

json diagnostics_json(const MreDiagnostics& d) {
  json out;
  out["acceptance_rate"] = d.acceptance_rate;
  out["chain_length"] = d.chain_length;
  out["frechet_converged"] = d.frechet_converged;
  return out;
}

int run_sample(const std::string& family, int dim, int rows, int cols, int p, int dof,
               double radius, const std::vector<double>& kappa,
               const std::vector<double>& lambda, const std::vector<double>& mu,
               const std::vector<double>& sigma_eigs, int n, std::uint64_t seed,
               int gibbs_burn_in, const std::string& out_path) {
  std::mt19937_64 rng = make_rng(seed);
  ModelParams params = [&]() -> ModelParams {
    if (family == "vmf") {
      Vec m = mu.empty() ? Vec::Unit(dim + 1, 0) : to_vec(mu);
      return VmfParams(UnitVector::normalized(m), kappa.at(0));
    }
    if (family == "hyperbolic") {
      HyperboloidPoint m = mu.empty() ? HyperboloidPoint::apex(dim, radius)
                                      : HyperboloidPoint(to_vec(mu), radius);
      return HyperbolicParams(m, kappa.at(0));
    }
    if (family == "langevin") {
      return LangevinParams(StiefelFrame::canonical(rows, cols), lambda.at(0));
    }
    if (family == "wishart") {
      Vec eigs = sigma_eigs.empty() ? Vec::LinSpaced(p, 1.0, static_cast<double>(p))
                                    : broadcast(sigma_eigs, p, "--sigma-eigs");
      return WishartParams(dof, SpdMatrix(eigs.asDiagonal()));
    }
    if (family == "torus") {
      Vec angles = mu.empty() ? Vec::Zero(p) : broadcast(mu, p, "--mu-angles");
      return TorusModelParams(TorusPoint::from_angles(angles),
                              broadcast(kappa, p, "--kappa"),
                              broadcast(lambda, p * (p - 1) / 2, "--lambda"));
    }
    throw std::invalid_argument("unknown family: " + family);
  }();
  std::vector<ManifoldPoint> points;
  points.reserve(n);
  if (family == "torus") {
    const auto& tp = std::get<TorusModelParams>(params);
    for (const auto& x : torus_sample_iid(tp, n, rng, gibbs_burn_in)) points.emplace_back(x);
  } else {
    points = sample_points(params, n, rng);
  }
  std::ostringstream body;
  write_data_file(body, points);
  write_output(out_path, body.str());
  return 0;
}

OrbitLabel orbit_from_flags(const std::vector<ManifoldPoint>& data,
                            const std::vector<double>& orbit_kappa,
                            const std::vector<double>& orbit_lambda,
                            const std::vector<double>& orbit_eigs, int dof) {
  if (std::holds_alternative<UnitVector>(data.front())) {
    return VmfOrbit{orbit_kappa.at(0)};
  }
  if (std::holds_alternative<HyperboloidPoint>(data.front())) {
    return HyperbolicOrbit{orbit_kappa.at(0), std::get<HyperboloidPoint>(data.front()).radius()};
  }
  if (std::holds_alternative<StiefelFrame>(data.front())) {
    return LangevinOrbit{orbit_lambda.at(0)};
  }
  if (std::holds_alternative<SpdMatrix>(data.front())) {
    Vec eigs = to_vec(orbit_eigs);
    std::sort(eigs.data(), eigs.data() + eigs.size(), std::greater<double>());
    return WishartOrbit{eigs, dof};
  }
  int p = std::get<TorusPoint>(data.front()).size();
  return TorusOrbit{broadcast(orbit_kappa, p, "--orbit-kappa"),
                    broadcast(orbit_lambda, p * (p - 1) / 2, "--orbit-lambda")};
}

int run_estimate(const std::string& estimator, const std::string& data_path,
                 const std::string& metric, std::uint64_t seed, int dof, int inner_draws,
                 int pop_draws, int quad_resolution, const McmcFlags& mcmc,
                 const std::vector<double>& orbit_kappa, const std::vector<double>& orbit_lambda,
                 const std::vector<double>& orbit_eigs, const std::string& orbit_from,
                 const std::string& out_path) {
  std::vector<ManifoldPoint> data = load_data(data_path);
  std::mt19937_64 rng = make_rng(seed);
  McmcConfig cfg = mcmc.build(seed);
  MreOptions opts;
  opts.population_mean_draws = pop_draws;
  json out;
  out["estimator"] = estimator;

  if (estimator == "sample-frechet") {
    FrechetResult res = sample_frechet_mean(data, parse_metric(metric));
    out["estimate"] = point_json(res.mean);
    out["objective"] = res.objective;
    out["converged"] = res.converged;
  } else if (estimator == "vmf-mre") {
    std::vector<UnitVector> xs;
    for (const auto& q : data) xs.push_back(std::get<UnitVector>(q));
    out["estimate"] = point_json(mre_vmf_closed_form(xs, parse_metric(metric)));
  } else if (estimator == "hyperbolic-mre") {
    std::vector<HyperboloidPoint> xs;
    for (const auto& q : data) xs.push_back(std::get<HyperboloidPoint>(q));
    out["estimate"] = point_json(mre_hyperbolic_closed_form(xs));
  } else if (estimator == "langevin-mre") {
    std::vector<StiefelFrame> xs;
    for (const auto& q : data) xs.push_back(std::get<StiefelFrame>(q));
    out["estimate"] = point_json(mre_langevin_single_obs(xs));
  } else if (estimator == "wishart-mle") {
    const auto& x = std::get<SpdMatrix>(data.front());
    out["estimate"] = point_json(wishart_mle_frechet(x, dof, inner_draws, rng));
  } else if (estimator == "wishart-mom-orbit") {
    const auto& x = std::get<SpdMatrix>(data.front());
    WishartMomResult mom = wishart_mom_orbit(x, dof, inner_draws, rng);
    json orbit;
    orbit["eigenvalues"] = std::vector<double>(
        mom.orbit.eigenvalues.data(), mom.orbit.eigenvalues.data() + mom.orbit.eigenvalues.size());
    orbit["dof"] = mom.orbit.dof;
    out["orbit"] = orbit;
    out["residual"] = mom.residual;
    out["converged"] = mom.converged;
  } else if (estimator == "torus-mle") {
    std::vector<TorusPoint> xs;
    for (const auto& q : data) xs.push_back(std::get<TorusPoint>(q));
    TorusMleOptions mle_opts;
    mle_opts.quad_resolution = quad_resolution;
    TorusMleResult mle = torus_mle(xs, mle_opts);
    json params;
    Vec angles = mle.params.mu.angles();
    params["mu_angles"] = std::vector<double>(angles.data(), angles.data() + angles.size());
    params["kappa"] = std::vector<double>(mle.params.kappa.data(),
                                          mle.params.kappa.data() + mle.params.kappa.size());
    params["lambda"] = std::vector<double>(mle.params.lambda.data(),
                                           mle.params.lambda.data() + mle.params.lambda.size());
    out["params"] = params;
    out["profile_log_lik"] = mle.profile_log_lik;
    out["converged"] = mle.converged;
  } else if (estimator == "mre-mc") {
    OrbitLabel orbit = orbit_from_flags(data, orbit_kappa, orbit_lambda, orbit_eigs, dof);
    auto [estimate, diag] = mre_monte_carlo(data, orbit, cfg, rng, opts);
    out["estimate"] = point_json(estimate);
    out["diagnostics"] = diagnostics_json(diag);
  } else if (estimator == "adaptive-mre") {
    OrbitEstimator orbit_est;
    if (std::holds_alternative<SpdMatrix>(data.front())) {
      orbit_est = orbit_from == "mom" ? wishart_mom_orbit_estimator(dof, inner_draws)
                                      : wishart_mle_orbit_estimator(dof);
    } else if (std::holds_alternative<TorusPoint>(data.front())) {
      TorusMleOptions mle_opts;
      mle_opts.quad_resolution = quad_resolution;
      orbit_est = torus_mle_orbit_estimator(mle_opts);
    } else {
      throw std::invalid_argument("adaptive-mre: supported for spd and torus data");
    }
    AdaptiveMreResult res = adaptive_mre(data, orbit_est, cfg, rng, opts);
    out["estimate"] = point_json(res.estimate);
    out["diagnostics"] = diagnostics_json(res.diagnostics);
  } else {
    throw std::invalid_argument("unknown estimator: " + estimator);
  }
  write_output(out_path, out.dump(2) + "\n");
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Equivariant Frechet mean estimation on homogeneous manifolds"};
  app.require_subcommand(1);

  // ---- table1 / table2 -----------------------------------------------------
  struct TableFlags {
    int reps = 0;
    std::uint64_t seed = 42;
    int threads = 0;
    int inner_draws = 2000;
    int pop_draws = 20000;
    std::string out_path;
    std::string format = "csv";
    int p_filter = 0;
    int n_filter = 0;
    double lambda_filter = 0.0;
    bool has_lambda = false;
    McmcFlags mcmc;
  };
  TableFlags t1, t2;

  auto attach_table = [](CLI::App* cmd, TableFlags& f, bool table1) {
    cmd->add_option("--reps", f.reps, "replicates (0 = published default)");
    cmd->add_option("--seed", f.seed, "master seed");
    cmd->add_option("--threads", f.threads, "worker threads (0 = auto)");
    cmd->add_option("--inner-draws", f.inner_draws, "Wishart MLE/MoM inner Monte-Carlo draws");
    cmd->add_option("--pop-draws", f.pop_draws, "population-mean Monte-Carlo draws");
    cmd->add_option("--out", f.out_path, "output path (default stdout)");
    cmd->add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    if (table1) {
      cmd->add_option("--p", f.p_filter, "restrict to one matrix dimension (2 or 4)");
    }
    cmd->add_option("--n", f.n_filter, "restrict to one sample size");
    f.mcmc.attach(cmd);
    cmd->set_config("--config", "", "flat key=value config file; flags override");
  };

  CLI::App* table1 = app.add_subcommand("table1", "Wishart covariance risk table");
  attach_table(table1, t1, true);
  CLI::App* table2 = app.add_subcommand("table2", "torus model risk table");
  attach_table(table2, t2, false);
  table2->add_option("--lambda", t2.lambda_filter, "restrict to one interaction strength")
      ->each([&t2](const std::string&) { t2.has_lambda = true; });

  // ---- sample ---------------------------------------------------------------
  struct SampleFlags {
    std::string family;
    int dim = 2;
    int rows = 4;
    int cols = 2;
    int p = 2;
    int dof = 10;
    double radius = 1.0;
    std::vector<double> kappa{2.0};
    std::vector<double> lambda{1.0};
    std::vector<double> mu;
    std::vector<double> sigma_eigs;
    int n = 100;
    std::uint64_t seed = 42;
    int gibbs_burn_in = 50;
    std::string out_path;
  } sf;
  CLI::App* sample = app.add_subcommand("sample", "draw from a parametric family");
  sample->add_option("--family", sf.family, "vmf, hyperbolic, langevin, wishart or torus")
      ->required()
      ->check(CLI::IsMember({"vmf", "hyperbolic", "langevin", "wishart", "torus"}));
  sample->add_option("--dim", sf.dim, "sphere/hyperboloid dimension k");
  sample->add_option("--rows", sf.rows, "Stiefel ambient dimension p");
  sample->add_option("--cols", sf.cols, "Stiefel frame size k");
  sample->add_option("--p", sf.p, "matrix dimension / torus components");
  sample->add_option("--dof", sf.dof, "Wishart degrees of freedom");
  sample->add_option("--radius", sf.radius, "hyperboloid radius R");
  sample->add_option("--kappa", sf.kappa, "concentration(s)")->delimiter(',');
  sample->add_option("--lambda", sf.lambda, "Langevin/torus interaction(s)")->delimiter(',');
  sample->add_option("--mu", sf.mu, "location coordinates (family specific)")->delimiter(',');
  sample->add_option("--mu-angles", sf.mu, "torus location angles")->delimiter(',');
  sample->add_option("--sigma-eigs", sf.sigma_eigs, "Wishart scale eigenvalues")->delimiter(',');
  sample->add_option("--n", sf.n, "number of draws");
  sample->add_option("--seed", sf.seed, "seed");
  sample->add_option("--gibbs-burn-in", sf.gibbs_burn_in, "torus Gibbs burn-in sweeps");
  sample->add_option("--out", sf.out_path, "output path (default stdout)");
  sample->set_config("--config", "", "flat key=value config file; flags override");

  // ---- estimate -------------------------------------------------------------
  struct EstimateFlags {
    std::string estimator;
    std::string data_path;
    std::string metric = "intrinsic";
    std::uint64_t seed = 42;
    int dof = 10;
    int inner_draws = 2000;
    int pop_draws = 20000;
    int quad_resolution = 64;
    std::vector<double> orbit_kappa{1.0};
    std::vector<double> orbit_lambda{1.0};
    std::vector<double> orbit_eigs{1.0};
    std::string orbit_from = "mle";
    std::string out_path;
    McmcFlags mcmc;
  } ef;
  CLI::App* estimate = app.add_subcommand("estimate", "run one estimator on a data file");
  estimate->add_option("--estimator", ef.estimator, "estimator id")->required();
  estimate->add_option("--data", ef.data_path, "input data file")->required();
  estimate->add_option("--metric", ef.metric, "intrinsic or extrinsic")
      ->check(CLI::IsMember({"intrinsic", "extrinsic"}));
  estimate->add_option("--seed", ef.seed, "seed");
  estimate->add_option("--dof", ef.dof, "Wishart degrees of freedom");
  estimate->add_option("--inner-draws", ef.inner_draws, "inner Monte-Carlo draws");
  estimate->add_option("--pop-draws", ef.pop_draws, "population-mean draws");
  estimate->add_option("--quad-resolution", ef.quad_resolution, "torus quadrature nodes per axis");
  estimate->add_option("--orbit-kappa", ef.orbit_kappa, "orbit concentration(s)")->delimiter(',');
  estimate->add_option("--orbit-lambda", ef.orbit_lambda, "orbit interaction(s)")->delimiter(',');
  estimate->add_option("--orbit-eigs", ef.orbit_eigs, "orbit eigenvalues")->delimiter(',');
  estimate->add_option("--orbit-from", ef.orbit_from, "adaptive orbit source: mle or mom")
      ->check(CLI::IsMember({"mle", "mom"}));
  estimate->add_option("--out", ef.out_path, "output path (default stdout)");
  ef.mcmc.attach(estimate);
  estimate->set_config("--config", "", "flat key=value config file; flags override");

  // ---- frechet-mean ----------------------------------------------------------
  struct MeanFlags {
    std::string data_path;
    std::string metric = "intrinsic";
    std::string out_path;
  } mf;
  CLI::App* fmean = app.add_subcommand("frechet-mean", "sample Frechet mean of a data file");
  fmean->add_option("--data", mf.data_path, "input data file")->required();
  fmean->add_option("--metric", mf.metric, "intrinsic or extrinsic")
      ->check(CLI::IsMember({"intrinsic", "extrinsic"}));
  fmean->add_option("--out", mf.out_path, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*table1 || *table2) {
      const TableFlags& f = *table1 ? t1 : t2;
      TableOptions opts;
      opts.replicates = f.reps;
      opts.seed = f.seed;
      opts.threads = f.threads;
      opts.wishart_inner_draws = f.inner_draws;
      opts.mre.population_mean_draws = f.pop_draws;
      opts.mcmc = f.mcmc.build(f.seed);
      if (f.p_filter > 0) opts.p_filter = f.p_filter;
      if (f.n_filter > 0) opts.n_filter = f.n_filter;
      if (*table2 && t2.has_lambda) opts.lambda_filter = t2.lambda_filter;
      std::vector<RiskRow> rows = *table1 ? run_table1(opts) : run_table2(opts);
      write_output(f.out_path, f.format == "json" ? rows_to_json(rows) : rows_to_csv(rows));
      return 0;
    }
    if (*sample) {
      return run_sample(sf.family, sf.dim, sf.rows, sf.cols, sf.p, sf.dof, sf.radius, sf.kappa,
                        sf.lambda, sf.mu, sf.sigma_eigs, sf.n, sf.seed, sf.gibbs_burn_in,
                        sf.out_path);
    }
    if (*estimate) {
      return run_estimate(ef.estimator, ef.data_path, ef.metric, ef.seed, ef.dof, ef.inner_draws,
                          ef.pop_draws, ef.quad_resolution, ef.mcmc, ef.orbit_kappa,
                          ef.orbit_lambda, ef.orbit_eigs, ef.orbit_from, ef.out_path);
    }
    if (*fmean) {
      std::vector<ManifoldPoint> data = load_data(mf.data_path);
      FrechetResult res = sample_frechet_mean(data, parse_metric(mf.metric));
      json out;
      out["mean"] = point_json(res.mean);
      out["objective"] = res.objective;
      out["converged"] = res.converged;
      out["iterations"] = res.iterations;
      write_output(mf.out_path, out.dump(2) + "\n");
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace fmre
