#include "kpca/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace kpca {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// splitmix64 step; decorrelates per-cell seed streams.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<std::string> split_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  return parse(in, path);
}

ExperimentConfig ExperimentConfig::parse(std::istream& in, const std::string& origin) {
  ExperimentConfig cfg;
  cfg.variants = {Variant::ekpca};
  cfg.norms = {Norm::H};

  KernelKind kind = KernelKind::spectral;
  double bandwidth = 1.0, offset = 0.0;
  int degree = 2;
  Index features = 200;

  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw std::invalid_argument("config: " + origin + ":" + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    const auto trim = [](std::string& s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(value);
    if (key.empty() || value.empty()) fail("expected key = value");

    try {
      if (key == "kernel") kind = kernel_kind_from_string(value);
      else if (key == "alpha") cfg.alpha = std::stod(value);
      else if (key == "features") features = std::stol(value);
      else if (key == "bandwidth") bandwidth = std::stod(value);
      else if (key == "degree") degree = std::stoi(value);
      else if (key == "offset") offset = std::stod(value);
      else if (key == "theta") cfg.theta = std::stod(value);
      else if (key == "dim") cfg.dim = std::stol(value);
      else if (key == "n") {
        cfg.n_schedule.clear();
        for (const auto& tok : split_tokens(value)) cfg.n_schedule.push_back(std::stol(tok));
      } else if (key == "trials") cfg.trials = std::stol(value);
      else if (key == "variants") {
        cfg.variants.clear();
        for (const auto& tok : split_tokens(value)) cfg.variants.push_back(variant_from_string(tok));
      } else if (key == "norms") {
        cfg.norms.clear();
        for (const auto& tok : split_tokens(value)) {
          if (tok == "H") cfg.norms.push_back(Norm::H);
          else if (tok == "L2") cfg.norms.push_back(Norm::L2);
          else fail("unknown norm " + tok);
        }
      } else if (key == "m_rule") {
        if (value == "fixed") cfg.m_rule = MRule::fixed;
        else if (value == "theta_log") cfg.m_rule = MRule::theta_log;
        else if (value == "alpha_log") cfg.m_rule = MRule::alpha_log;
        else fail("unknown m_rule " + value);
      } else if (key == "m_coeff") cfg.m_coeff = std::stod(value);
      else if (key == "m_fixed") cfg.m_fixed = std::stol(value);
      else if (key == "rff_gamma") cfg.rff_gamma = std::stod(value);
      else if (key == "n_test") cfg.n_test = std::stol(value);
      else if (key == "proxy_factor") cfg.proxy_factor = std::stol(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "delta") cfg.delta = std::stod(value);
      else if (key == "slope_tol_h") cfg.slope_tol_h = std::stod(value);
      else if (key == "slope_tol_l2") cfg.slope_tol_l2 = std::stod(value);
      else if (key == "out_rows") cfg.out_rows = value;
      else if (key == "out_rates") cfg.out_rates = value;
      else if (key == "out_plot") cfg.out_plot = value;
      else if (key == "out_theory") cfg.out_theory = value;
      else fail("unknown key " + key);
    } catch (const std::invalid_argument& err) {
      if (std::string(err.what()).rfind("config:", 0) == 0) throw;
      fail(err.what());
    } catch (const std::exception& err) {
      fail(err.what());
    }
  }

  switch (kind) {
    case KernelKind::gaussian: cfg.kernel = KernelSpec::gaussian(bandwidth); break;
    case KernelKind::linear: cfg.kernel = KernelSpec::linear(); break;
    case KernelKind::polynomial: cfg.kernel = KernelSpec::polynomial(degree, offset); break;
    case KernelKind::spectral:
      cfg.kernel = KernelSpec::spectral_power_law(features, cfg.alpha);
      break;
  }
  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  if (!(theta > 0.0 && theta <= alpha))
    throw std::invalid_argument("config: theta must lie in (0, alpha]");
  if (n_schedule.empty()) throw std::invalid_argument("config: n schedule is empty");
  for (std::size_t i = 0; i < n_schedule.size(); ++i) {
    if (n_schedule[i] < 2) throw std::invalid_argument("config: n must be >= 2");
    if (i > 0 && n_schedule[i] <= n_schedule[i - 1])
      throw std::invalid_argument("config: n schedule must be strictly increasing");
  }
  if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  if (variants.empty()) throw std::invalid_argument("config: no variants selected");
  if (norms.empty()) throw std::invalid_argument("config: no norms selected");
  if (n_test < 2) throw std::invalid_argument("config: n_test must be >= 2");
  if (m_rule == MRule::fixed && m_fixed < 1)
    throw std::invalid_argument("config: fixed m rule needs m_fixed >= 1");
  if (!(rff_gamma > 0.0 && rff_gamma <= 1.0))
    throw std::invalid_argument("config: rff_gamma must lie in (0, 1]");
}

Index ExperimentConfig::ell_for(Index n) const {
  return static_cast<Index>(
      std::ceil(std::pow(static_cast<double>(n), theta / alpha) - 1e-12));
}

Index ExperimentConfig::m_for(Index n) const {
  double m = 0.0;
  switch (m_rule) {
    case MRule::fixed: return std::min<Index>(m_fixed, n);
    case MRule::theta_log:
      m = m_coeff * std::pow(static_cast<double>(n), theta) * std::log(static_cast<double>(n));
      break;
    case MRule::alpha_log:
      m = m_coeff * std::pow(static_cast<double>(n), alpha / (2.0 * alpha - 1.0)) *
          std::log(static_cast<double>(n));
      break;
  }
  return std::min<Index>(static_cast<Index>(std::ceil(m)), n);
}

Index ExperimentConfig::m_rff_for(Index n) const {
  return static_cast<Index>(std::ceil(std::pow(static_cast<double>(n), rff_gamma) - 1e-12));
}

double ExperimentConfig::t_for(Index n) const {
  const double exponent = std::min(theta, alpha / (2.0 * alpha - 1.0));
  return std::pow(static_cast<double>(n), -exponent);
}

namespace {

SampleSet draw_sample(const KernelSpec& kernel, Index n, Index dim, std::uint64_t seed) {
  if (kernel.kind == KernelKind::spectral) return sample_uniform01(n, seed);
  return sample_gaussian(n, dim, seed);
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& config) {
  config.validate();
  SweepResult result;

  const bool spectral = config.kernel.kind == KernelKind::spectral;
  OracleSpectrum oracle;
  if (spectral) oracle = build_oracle(config.kernel);

  const bool wants_rff =
      std::find(config.variants.begin(), config.variants.end(), Variant::rff) !=
      config.variants.end();

  for (std::size_t ni = 0; ni < config.n_schedule.size(); ++ni) {
    const Index n = config.n_schedule[ni];
    const Index ell = config.ell_for(n);
    const Index m = config.m_for(n);
    const Index m_rff = config.m_rff_for(n);
    const double t = config.t_for(n);

    if (spectral) {
      TheoryRow th;
      th.n = n;
      th.ell = ell;
      th.m = m;
      th.t = t;
      th.n_sigma = effective_dim(oracle, t);
      th.n_c_infty = effective_dim_infty(oracle, config.kernel, t);
      const double kappa = config.kernel.kappa();
      th.m_threshold = std::max(67.0, 5.0 * th.n_c_infty) *
                       std::log(4.0 * kappa / (t * config.delta));
      th.m_ok = static_cast<double>(m) >= th.m_threshold;
      const PopulationRecon tails = population_recon(oracle, std::min(ell, oracle.dim()));
      th.r_tail = tails.h_tail;
      th.l2_tail = tails.l2_tail;
      const double lam_next =
          ell < oracle.dim() ? oracle.sigma_eigs(ell) : 0.0;
      const double log_term = std::log(2.0 / config.delta);
      th.r_upper = 3.0 * th.n_sigma * (lam_next + t) + 32.0 * kappa * log_term / n;
      th.r_nys_upper = 6.0 * th.n_sigma * (lam_next + 9.0 * t) + 32.0 * kappa * log_term / n;
      th.t_upper =
          9.0 * th.n_sigma * (lam_next + t) * (lam_next + t) + 64.0 * kappa * kappa * log_term / n;
      th.t_nys_upper = 36.0 * th.n_sigma * (lam_next + 9.0 * t) * (lam_next + 9.0 * t) +
                       32.0 * kappa * kappa * log_term / n;
      result.theory.push_back(th);
    }

    for (Index trial = 0; trial < config.trials; ++trial) {
      const std::uint64_t cell = mix_seed(config.seed, ni * 1000003ULL + trial);
      const SampleSet train = draw_sample(config.kernel, n, config.dim, mix_seed(cell, 1));
      const SampleSet test = draw_sample(config.kernel, config.n_test, config.dim, mix_seed(cell, 2));

      MeanSource mean;
      SampleSet proxy, inner;
      const SampleSet* inner_ptr = nullptr;
      if (spectral) {
        mean = MeanSource::from_oracle(oracle);
      } else {
        proxy = draw_sample(config.kernel, config.proxy_factor * n, config.dim, mix_seed(cell, 3));
        mean = MeanSource::from_proxy(proxy);
        inner = draw_sample(config.kernel, config.n_test, config.dim, mix_seed(cell, 4));
        inner_ptr = &inner;
      }

      for (Variant variant : config.variants) {
        Index m_cell = 0;
        switch (variant) {
          case Variant::ekpca: m_cell = n; break;
          case Variant::nystrom: m_cell = m; break;
          case Variant::rff: m_cell = m_rff; break;
        }
        if (variant == Variant::nystrom && ell >= m_cell) {
          result.skipped.push_back("n=" + std::to_string(n) + " trial=" + std::to_string(trial) +
                                   " nystrom: ell=" + std::to_string(ell) +
                                   " >= m=" + std::to_string(m_cell));
          continue;
        }
        if (variant == Variant::rff && ell > std::min(m_cell, n - 1)) {
          result.skipped.push_back("n=" + std::to_string(n) + " trial=" + std::to_string(trial) +
                                   " rff: ell=" + std::to_string(ell) +
                                   " > min(m,n-1), m=" + std::to_string(m_cell));
          continue;
        }

        FitOptions options;
        options.subsample = m;
        options.rf_features = m_rff;
        options.seed = mix_seed(cell, 16 + static_cast<std::uint64_t>(variant));
        KpcaModel model;
        try {
          model = fit(config.kernel, train, variant, ell, options);
        } catch (const RankError& err) {
          // A sampled feature space may have fewer independent directions
          // than requested (duplicate draws from a discrete spectrum); the
          // best the variant can do is its full rank, so cap and log.
          if (variant == Variant::rff && err.achievable_rank >= 1) {
            model = fit(config.kernel, train, variant, err.achievable_rank, options);
            result.skipped.push_back("n=" + std::to_string(n) + " trial=" +
                                     std::to_string(trial) + " rff: ell capped to rank " +
                                     std::to_string(err.achievable_rank));
          } else {
            result.skipped.push_back("n=" + std::to_string(n) + " trial=" + std::to_string(trial) +
                                     " " + to_string(variant) + ": " + err.what());
            continue;
          }
        }

        ReconOptions ropts;
        ropts.seed = cell;
        ropts.t = t;
        for (Norm norm : config.norms) {
          if (variant == Variant::rff && norm == Norm::H) {
            if (trial == 0)
              result.skipped.push_back("n=" + std::to_string(n) +
                                       " rff: H-norm undefined for random features");
            continue;
          }
          ReconReport report;
          if (norm == Norm::H) {
            report = recon_h(model, config.kernel, &train, mean, test, ropts);
          } else if (variant == Variant::rff) {
            report = recon_rff_l2(model, config.kernel, &train, mean, test, inner_ptr, ropts);
          } else {
            report = recon_l2(model, config.kernel, &train, mean, test, inner_ptr, ropts);
          }
          SweepRow row;
          row.variant = variant;
          row.norm = norm;
          row.n = n;
          row.m = m_cell;
          row.ell = model.ell();  // may be rank-capped for rff
          row.t = t;
          row.trial = trial;
          row.estimate = report.estimate;
          row.se = report.std_error;
          row.n_test = report.n_test;
          row.seed = cell;
          result.rows.push_back(row);
        }
      }
    }
  }

  std::sort(result.rows.begin(), result.rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.variant, a.norm, a.n, a.trial) < std::tie(b.variant, b.norm, b.n, b.trial);
  });
  return result;
}

double predicted_slope(const ExperimentConfig& config, Norm norm) {
  const double alpha = config.alpha;
  const double theta = config.theta;
  if (norm == Norm::H) {
    if (theta < 1.0) return -theta * (1.0 - 1.0 / alpha);
    return -(1.0 - 1.0 / alpha);
  }
  if (theta < alpha / (2.0 * alpha - 1.0)) return -2.0 * theta * (1.0 - 1.0 / (2.0 * alpha));
  return -1.0;
}

RateFit fit_rate(const std::vector<SweepRow>& rows, Variant variant, Norm norm,
                 const ExperimentConfig& config) {
  std::map<Index, std::vector<double>> cells;
  for (const SweepRow& row : rows)
    if (row.variant == variant && row.norm == norm) cells[row.n].push_back(row.estimate);
  if (cells.size() < 3)
    throw std::invalid_argument("fit_rate: need at least 3 distinct n values");

  RateFit fit;
  fit.group = to_string(variant) + "_" + to_string(norm);
  Eigen::VectorXd x(static_cast<Index>(cells.size())), y(static_cast<Index>(cells.size()));
  Index i = 0;
  for (const auto& [n, estimates] : cells) {
    Eigen::Map<const Eigen::VectorXd> v(estimates.data(), static_cast<Index>(estimates.size()));
    const MeanSe stat = pairwise_mean_se(v);
    RateCell cell;
    cell.n = n;
    cell.mean = stat.mean;
    cell.se = stat.se;
    fit.cells.push_back(cell);
    if (!(stat.mean > 0.0))
      throw std::invalid_argument("fit_rate: cell mean must be positive for log-log fit");
    x(i) = std::log(static_cast<double>(n));
    y(i) = std::log(stat.mean);
    ++i;
  }

  const double xbar = x.mean(), ybar = y.mean();
  const double sxx = (x.array() - xbar).square().sum();
  const double sxy = ((x.array() - xbar) * (y.array() - ybar)).sum();
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  const Eigen::VectorXd resid = y - (fit.intercept + fit.slope * x.array()).matrix();
  const double syy = (y.array() - ybar).square().sum();
  fit.r2 = syy > 0.0 ? 1.0 - resid.squaredNorm() / syy : 1.0;
  const Index npts = x.size();
  fit.slope_se =
      npts > 2 ? std::sqrt(resid.squaredNorm() / static_cast<double>(npts - 2) / sxx) : 0.0;
  fit.predicted = predicted_slope(config, norm);
  const double tol = norm == Norm::H ? config.slope_tol_h : config.slope_tol_l2;
  fit.pass = std::abs(fit.slope - fit.predicted) <= tol;
  return fit;
}

std::string rows_csv_header() { return "variant,norm,n,m,ell,t,trial,estimate,se,n_test,seed"; }

std::string rows_csv(const SweepResult& result) {
  std::ostringstream os;
  os << rows_csv_header() << '\n';
  for (const SweepRow& r : result.rows) {
    os << to_string(r.variant) << ',' << to_string(r.norm) << ',' << r.n << ',' << r.m << ','
       << r.ell << ',' << fmt(r.t) << ',' << r.trial << ',' << fmt(r.estimate) << ',' << fmt(r.se)
       << ',' << r.n_test << ',' << r.seed << '\n';
  }
  return os.str();
}

std::string rates_csv(const std::vector<RateFit>& fits) {
  std::ostringstream os;
  os << "group,slope,slope_se,predicted,R2,pass\n";
  for (const RateFit& f : fits) {
    os << f.group << ',' << fmt(f.slope) << ',' << fmt(f.slope_se) << ',' << fmt(f.predicted)
       << ',' << fmt(f.r2) << ',' << (f.pass ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string theory_csv(const SweepResult& result) {
  std::ostringstream os;
  os << "n,ell,m,t,n_sigma,n_c_infty,m_threshold,m_ok,r_tail,l2_tail,r_upper,r_nys_upper,"
        "t_upper,t_nys_upper\n";
  for (const TheoryRow& r : result.theory) {
    os << r.n << ',' << r.ell << ',' << r.m << ',' << fmt(r.t) << ',' << fmt(r.n_sigma) << ','
       << fmt(r.n_c_infty) << ',' << fmt(r.m_threshold) << ',' << (r.m_ok ? 1 : 0) << ','
       << fmt(r.r_tail) << ',' << fmt(r.l2_tail) << ',' << fmt(r.r_upper) << ','
       << fmt(r.r_nys_upper) << ',' << fmt(r.t_upper) << ',' << fmt(r.t_nys_upper) << '\n';
  }
  return os.str();
}

std::string plot_data(const RateFit& fit) {
  std::ostringstream os;
  os << "# " << fit.group << ": x = n, y = mean error, yerr = standard error\n";
  os << "# slope " << fmt(fit.slope) << " predicted " << fmt(fit.predicted) << '\n';
  for (const RateCell& cell : fit.cells)
    os << cell.n << ' ' << fmt(cell.mean) << ' ' << fmt(cell.se) << '\n';
  return os.str();
}

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open output file " + path);
  out << content;
}

}  // namespace

std::vector<RateFit> write_sweep_outputs(const ExperimentConfig& config,
                                         const SweepResult& result) {
  write_file(config.out_rows, rows_csv(result));

  std::vector<RateFit> fits;
  const bool enough_n = config.n_schedule.size() >= 3;
  for (Variant variant : config.variants) {
    for (Norm norm : config.norms) {
      if (variant == Variant::rff && norm == Norm::H) continue;
      bool any = false;
      for (const SweepRow& row : result.rows)
        if (row.variant == variant && row.norm == norm) { any = true; break; }
      if (!any || !enough_n) continue;
      fits.push_back(fit_rate(result.rows, variant, norm, config));
    }
  }
  write_file(config.out_rates, rates_csv(fits));
  if (config.kernel.kind == KernelKind::spectral) write_file(config.out_theory, theory_csv(result));
  for (const RateFit& fit : fits)
    write_file(config.out_plot + "_" + fit.group + ".dat", plot_data(fit));
  return fits;
}

}  // namespace kpca
