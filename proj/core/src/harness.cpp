#include "fmre/harness.hpp"

#include "fmre/frechet.hpp"
#include "fmre/rng.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace fmre {

namespace {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("FMRE_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Stable stream tags so each estimator sees the same substream regardless of
// the order or subset requested.
int estimator_tag(const std::string& name) {
  if (name == "sample-frechet") return 1;
  if (name == "mle") return 2;
  if (name == "mre-mle-orbit") return 3;
  if (name == "mre-mom-orbit") return 4;
  if (name == "adaptive-mre") return 5;
  if (name == "mre-closed-form") return 6;
  if (name == "true-mean-oracle") return 7;
  throw std::invalid_argument("unknown estimator: " + name);
}

struct ReplicateOutcome {
  bool failed = false;
  std::vector<double> losses;
};

ManifoldPoint true_frechet_mean(const SimConfig& cfg) {
  return std::visit(
      [&cfg](const auto& params) -> ManifoldPoint {
        using P = std::decay_t<decltype(params)>;
        if constexpr (std::is_same_v<P, VmfParams>) {
          return params.mu;
        } else if constexpr (std::is_same_v<P, HyperbolicParams>) {
          return params.mu;
        } else if constexpr (std::is_same_v<P, LangevinParams>) {
          return params.h;
        } else if constexpr (std::is_same_v<P, TorusModelParams>) {
          return params.mu;
        } else {
          // Population log-Euclidean mean of X/n by a large fixed-seed MC run.
          std::mt19937_64 rng = make_rng(cfg.master_seed, 0, 9001);
          int p = params.sigma.dim();
          Mat acc = Mat::Zero(p, p);
          for (int j = 0; j < cfg.true_mean_draws; ++j) {
            acc += matrix_log(wishart_sample(params, rng));
          }
          acc = acc / static_cast<double>(cfg.true_mean_draws) -
                std::log(static_cast<double>(params.dof)) * Mat::Identity(p, p);
          return matrix_exp(0.5 * (acc + acc.transpose()));
        }
      },
      cfg.true_params);
}

std::vector<ManifoldPoint> draw_data(const SimConfig& cfg, std::mt19937_64& rng) {
  if (std::holds_alternative<WishartParams>(cfg.true_params)) {
    return {wishart_sample(std::get<WishartParams>(cfg.true_params), rng)};
  }
  if (std::holds_alternative<TorusModelParams>(cfg.true_params)) {
    const auto& params = std::get<TorusModelParams>(cfg.true_params);
    std::vector<ManifoldPoint> out;
    out.reserve(cfg.sample_size);
    for (const auto& x : torus_sample_iid(params, cfg.sample_size, rng, cfg.gibbs_burn_in_sweeps)) {
      out.emplace_back(x);
    }
    return out;
  }
  return sample_points(cfg.true_params, cfg.sample_size, rng);
}

ManifoldPoint run_estimator(const SimConfig& cfg, const std::string& name,
                            const std::vector<ManifoldPoint>& data,
                            const ManifoldPoint& truth, std::mt19937_64& rng) {
  if (name == "true-mean-oracle") return truth;
  if (name == "sample-frechet") {
    if (std::holds_alternative<WishartParams>(cfg.true_params)) {
      const auto& x = std::get<SpdMatrix>(data.front());
      int dof = std::get<WishartParams>(cfg.true_params).dof;
      return SpdMatrix(x.entries() / static_cast<double>(dof));
    }
    FrechetResult res = sample_frechet_mean(data, MetricKind::Intrinsic, cfg.mre.frechet);
    if (!res.converged) throw std::runtime_error("sample-frechet: solver did not converge");
    return res.mean;
  }
  if (std::holds_alternative<WishartParams>(cfg.true_params)) {
    const auto& x = std::get<SpdMatrix>(data.front());
    int dof = std::get<WishartParams>(cfg.true_params).dof;
    if (name == "mle") {
      return wishart_mle_frechet(x, dof, cfg.wishart_inner_draws, rng);
    }
    if (name == "mre-mle-orbit") {
      OrbitLabel orbit = wishart_mle_orbit_estimator(dof)(data, rng);
      return mre_monte_carlo(data, orbit, cfg.mcmc, rng, cfg.mre).first;
    }
    if (name == "mre-mom-orbit") {
      OrbitLabel orbit = wishart_mom_orbit_estimator(dof, cfg.wishart_inner_draws)(data, rng);
      return mre_monte_carlo(data, orbit, cfg.mcmc, rng, cfg.mre).first;
    }
  }
  if (std::holds_alternative<VmfParams>(cfg.true_params) && name == "mre-closed-form") {
    std::vector<UnitVector> xs;
    for (const auto& p : data) xs.push_back(std::get<UnitVector>(p));
    return mre_vmf_closed_form(xs);
  }
  if (std::holds_alternative<HyperbolicParams>(cfg.true_params) && name == "mre-closed-form") {
    std::vector<HyperboloidPoint> xs;
    for (const auto& p : data) xs.push_back(std::get<HyperboloidPoint>(p));
    return mre_hyperbolic_closed_form(xs);
  }
  if (std::holds_alternative<LangevinParams>(cfg.true_params) && name == "mre-closed-form") {
    std::vector<StiefelFrame> xs;
    for (const auto& p : data) xs.push_back(std::get<StiefelFrame>(p));
    return mre_langevin_single_obs(xs);
  }
  throw std::invalid_argument("estimator " + name + " is not available for this family");
}

// The torus MLE fit is shared between the "mle" and "adaptive-mre" columns
// of a replicate, so both see the identical fit (paired design).
ReplicateOutcome run_torus_replicate(const SimConfig& cfg, const std::vector<ManifoldPoint>& data,
                                     const ManifoldPoint& truth, std::uint64_t replicate) {
  ReplicateOutcome out;
  out.losses.resize(cfg.estimators.size(), 0.0);
  bool needs_fit = false;
  for (const auto& e : cfg.estimators) {
    if (e == "mle" || e == "adaptive-mre") needs_fit = true;
  }
  std::optional<TorusMleResult> fit;
  if (needs_fit) {
    std::vector<TorusPoint> xs;
    for (const auto& p : data) xs.push_back(std::get<TorusPoint>(p));
    fit = torus_mle(xs, cfg.torus_mle_opts);
  }
  for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
    const std::string& name = cfg.estimators[e];
    std::mt19937_64 rng = make_rng(cfg.master_seed, 1 + replicate, 100 + estimator_tag(name));
    ManifoldPoint est = truth;
    if (name == "mle") {
      est = fit->params.mu;
    } else if (name == "adaptive-mre") {
      OrbitLabel orbit = TorusOrbit{fit->params.kappa, fit->params.lambda};
      est = mre_monte_carlo(data, orbit, cfg.mcmc, rng, cfg.mre).first;
    } else {
      est = run_estimator(cfg, name, data, truth, rng);
    }
    double d = manifold_distance(est, truth, MetricKind::Intrinsic);
    out.losses[e] = d * d;
  }
  return out;
}

ReplicateOutcome run_replicate(const SimConfig& cfg, const ManifoldPoint& truth,
                               std::uint64_t replicate) {
  ReplicateOutcome out;
  try {
    std::mt19937_64 data_rng = make_rng(cfg.master_seed, 1 + replicate, 0);
    std::vector<ManifoldPoint> data = draw_data(cfg, data_rng);
    if (std::holds_alternative<TorusModelParams>(cfg.true_params)) {
      return run_torus_replicate(cfg, data, truth, replicate);
    }
    out.losses.resize(cfg.estimators.size(), 0.0);
    for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
      std::mt19937_64 rng =
          make_rng(cfg.master_seed, 1 + replicate, 100 + estimator_tag(cfg.estimators[e]));
      ManifoldPoint est = run_estimator(cfg, cfg.estimators[e], data, truth, rng);
      double d = manifold_distance(est, truth, MetricKind::Intrinsic);
      out.losses[e] = d * d;
    }
  } catch (const std::exception&) {
    out.failed = true;
  }
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void SimConfig::validate() const {
  if (replicates < 1) throw std::invalid_argument("SimConfig: replicates must be >= 1");
  if (sample_size < 1) throw std::invalid_argument("SimConfig: sample_size must be >= 1");
  if (estimators.empty()) throw std::invalid_argument("SimConfig: no estimators");
  for (const auto& e : estimators) estimator_tag(e);
  mcmc.validate();
}

LossTable estimate_losses(const SimConfig& cfg) {
  cfg.validate();
  ManifoldPoint truth = true_frechet_mean(cfg);
  int reps = cfg.replicates;
  std::vector<ReplicateOutcome> outcomes(reps);
  int threads = std::min(resolve_threads(cfg.threads), reps);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      int r = next.fetch_add(1);
      if (r >= reps) return;
      outcomes[r] = run_replicate(cfg, truth, static_cast<std::uint64_t>(r));
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  int used = 0;
  for (const auto& o : outcomes) used += o.failed ? 0 : 1;
  if (used == 0) {
    throw std::runtime_error("estimate_losses: every replicate failed in scenario " +
                             cfg.scenario);
  }
  LossTable table;
  table.estimators = cfg.estimators;
  table.failures = reps - used;
  table.losses.resize(used, static_cast<int>(cfg.estimators.size()));
  int row = 0;
  for (const auto& o : outcomes) {
    if (o.failed) continue;
    for (std::size_t e = 0; e < cfg.estimators.size(); ++e) table.losses(row, e) = o.losses[e];
    ++row;
  }
  return table;
}

std::vector<RiskRow> estimate_risk(const SimConfig& cfg) {
  LossTable table = estimate_losses(cfg);
  int used = static_cast<int>(table.losses.rows());
  std::vector<RiskRow> rows;
  rows.reserve(table.estimators.size());
  for (std::size_t e = 0; e < table.estimators.size(); ++e) {
    RiskRow row;
    row.scenario = cfg.scenario;
    row.estimator = table.estimators[e];
    row.reps = used;
    row.failures = table.failures;
    row.seed = cfg.master_seed;
    double mean = table.losses.col(e).mean();
    double var = 0.0;
    for (int r = 0; r < used; ++r) {
      double d = table.losses(r, e) - mean;
      var += d * d;
    }
    var = used > 1 ? var / (used - 1) : 0.0;
    row.risk = mean;
    row.mc_se = std::sqrt(var / used);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<RiskRow> run_table1(const TableOptions& opts) {
  int reps = opts.replicates > 0 ? opts.replicates : 500;
  std::vector<RiskRow> rows;
  for (int p : {2, 4}) {
    if (opts.p_filter && *opts.p_filter != p) continue;
    for (int n : {5, 10, 40}) {
      if (opts.n_filter && *opts.n_filter != n) continue;
      Vec eigs(p);
      for (int i = 0; i < p; ++i) eigs(i) = static_cast<double>(i + 1);
      SimConfig cfg("wishart_p" + std::to_string(p) + "_n" + std::to_string(n),
                    WishartParams(n, SpdMatrix(eigs.asDiagonal())));
      cfg.sample_size = 1;
      cfg.replicates = reps;
      cfg.estimators = {"sample-frechet", "mle", "mre-mle-orbit", "mre-mom-orbit"};
      cfg.mcmc = opts.mcmc;
      cfg.mre = opts.mre;
      cfg.wishart_inner_draws = opts.wishart_inner_draws;
      cfg.master_seed = opts.seed;
      cfg.threads = opts.threads;
      for (RiskRow& row : estimate_risk(cfg)) {
        row.p = p;
        row.n = n;
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::vector<RiskRow> run_table2(const TableOptions& opts) {
  int reps = opts.replicates > 0 ? opts.replicates : 1000;
  const int p = 3;
  const double kappa_value = 2.0;
  struct Scenario {
    double lambda;
    int n;
  };
  const Scenario scenarios[] = {{1.0, 25}, {1.0, 5}, {3.0, 25}, {3.0, 15}, {3.0, 5}};
  std::vector<RiskRow> rows;
  for (const auto& sc : scenarios) {
    if (opts.n_filter && *opts.n_filter != sc.n) continue;
    if (opts.lambda_filter && std::abs(*opts.lambda_filter - sc.lambda) > 1e-12) continue;
    Vec kappa = Vec::Constant(p, kappa_value);
    Vec lambda = Vec::Constant(p * (p - 1) / 2, sc.lambda);
    Vec mu_angles = Vec::Constant(p, 0.5 * std::numbers::pi);  // mu_i = (0, 1)
    std::ostringstream name;
    name << "torus_p" << p << "_k" << format_double(kappa_value) << "_l"
         << format_double(sc.lambda) << "_n" << sc.n;
    SimConfig cfg(name.str(), TorusModelParams(TorusPoint::from_angles(mu_angles), kappa, lambda));
    cfg.sample_size = sc.n;
    cfg.replicates = reps;
    cfg.estimators = {"sample-frechet", "mle", "adaptive-mre"};
    cfg.mcmc = opts.mcmc;
    cfg.mre = opts.mre;
    cfg.master_seed = opts.seed;
    cfg.threads = opts.threads;
    LossTable table = estimate_losses(cfg);
    int used = static_cast<int>(table.losses.rows());
    int adaptive = -1;
    for (std::size_t e = 0; e < table.estimators.size(); ++e) {
      if (table.estimators[e] == "adaptive-mre") adaptive = static_cast<int>(e);
    }
    auto push_row = [&](const std::string& est, double risk, double se) {
      RiskRow row;
      row.scenario = cfg.scenario;
      row.estimator = est;
      row.p = p;
      row.n = sc.n;
      row.kappa = kappa_value;
      row.lambda = sc.lambda;
      row.reps = used;
      row.failures = table.failures;
      row.risk = risk;
      row.mc_se = se;
      row.seed = cfg.master_seed;
      rows.push_back(std::move(row));
    };
    std::vector<double> means(table.estimators.size());
    for (std::size_t e = 0; e < table.estimators.size(); ++e) {
      double mean = table.losses.col(e).mean();
      means[e] = mean;
      double var = 0.0;
      for (int r = 0; r < used; ++r) {
        double d = table.losses(r, e) - mean;
        var += d * d;
      }
      var = used > 1 ? var / (used - 1) : 0.0;
      push_row(table.estimators[e], mean, std::sqrt(var / used));
    }
    if (adaptive >= 0) {
      for (std::size_t e = 0; e < table.estimators.size(); ++e) {
        if (static_cast<int>(e) == adaptive) continue;
        // Delta-method standard error with the paired covariance.
        double ma = means[e];
        double mb = means[adaptive];
        double va = 0.0, vb = 0.0, cab = 0.0;
        for (int r = 0; r < used; ++r) {
          double da = table.losses(r, e) - ma;
          double db = table.losses(r, adaptive) - mb;
          va += da * da;
          vb += db * db;
          cab += da * db;
        }
        double denom = used > 1 ? (used - 1.0) * used : 1.0;
        va /= denom;
        vb /= denom;
        cab /= denom;
        double ratio = ma / mb;
        double var_ratio = va / (mb * mb) + (ma * ma / (mb * mb * mb * mb)) * vb -
                           2.0 * (ma / (mb * mb * mb)) * cab;
        push_row("ratio:" + table.estimators[e] + "/adaptive-mre", ratio,
                 std::sqrt(std::max(0.0, var_ratio)));
      }
    }
  }
  return rows;
}

std::string rows_to_csv(const std::vector<RiskRow>& rows) {
  std::ostringstream out;
  out << "scenario,estimator,p,n,kappa,lambda,reps,failures,risk,mc_se,seed\n";
  for (const auto& r : rows) {
    out << r.scenario << ',' << r.estimator << ',' << r.p << ',' << r.n << ','
        << format_double(r.kappa) << ',' << format_double(r.lambda) << ',' << r.reps << ','
        << r.failures << ',' << format_double(r.risk) << ',' << format_double(r.mc_se) << ','
        << r.seed << '\n';
  }
  return out.str();
}

std::string rows_to_json(const std::vector<RiskRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json obj;
    obj["scenario"] = r.scenario;
    obj["estimator"] = r.estimator;
    obj["p"] = r.p;
    obj["n"] = r.n;
    if (!std::isnan(r.kappa)) obj["kappa"] = r.kappa;
    if (!std::isnan(r.lambda)) obj["lambda"] = r.lambda;
    obj["reps"] = r.reps;
    obj["failures"] = r.failures;
    obj["risk"] = r.risk;
    obj["mc_se"] = r.mc_se;
    obj["seed"] = r.seed;
    arr.push_back(std::move(obj));
  }
  return arr.dump(2) + "\n";
}

}  // namespace fmre
