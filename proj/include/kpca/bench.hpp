#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "kpca/oracle.hpp"
#include "kpca/recon.hpp"

namespace kpca {

/// Declarative sweep description, parsed from a key = value file. Lists are
/// space separated; '#' starts a comment.
struct ExperimentConfig {
  KernelSpec kernel = KernelSpec::spectral_power_law(200, 2.0);
  double alpha = 2.0;   // eigenvalue decay exponent of the fixture
  double theta = 0.5;   // eigenspace growth: ell = ceil(n^{theta/alpha})
  std::vector<Index> n_schedule;
  Index dim = 1;        // data dimension for non-spectral kernels

  enum class MRule { fixed, theta_log, alpha_log };
  MRule m_rule = MRule::theta_log;  // m = ceil(c n^theta log n) (capped at n)
  double m_coeff = 3.0;             // alpha_log: m = ceil(c n^{alpha/(2alpha-1)} log n)
  Index m_fixed = 0;

  double rff_gamma = 0.4;  // random-feature count m = ceil(n^gamma)

  std::vector<Variant> variants;
  std::vector<Norm> norms;
  Index trials = 1;
  Index n_test = 10000;
  Index proxy_factor = 10;  // proxy sample size = factor * n (non-spectral)
  std::uint64_t seed = 0;
  double delta = 0.05;  // confidence budget for logged theory thresholds
  double slope_tol_h = 0.1;
  double slope_tol_l2 = 0.12;

  std::string out_rows = "rows.csv";
  std::string out_rates = "rates.csv";
  std::string out_plot = "plot";
  std::string out_theory = "theory.csv";

  static ExperimentConfig parse_file(const std::string& path);
  static ExperimentConfig parse(std::istream& in, const std::string& origin);
  void validate() const;

  Index ell_for(Index n) const;
  Index m_for(Index n) const;       // Nystrom subsample size
  Index m_rff_for(Index n) const;   // random-feature count
  double t_for(Index n) const;      // t = n^{-min(theta, alpha/(2alpha-1))}
};

struct SweepRow {
  Variant variant = Variant::ekpca;
  Norm norm = Norm::H;
  Index n = 0, m = 0, ell = 0;
  double t = 0.0;
  Index trial = 0;
  double estimate = 0.0, se = 0.0;
  Index n_test = 0;
  std::uint64_t seed = 0;
};

/// Per-cell oracle quantities and theoretical bound values logged next to the
/// measurements (spectral kernel only).
struct TheoryRow {
  Index n = 0, ell = 0, m = 0;
  double t = 0.0;
  double n_sigma = 0.0;        // effective dimension at t
  double n_c_infty = 0.0;      // grid sup of the uncentered counterpart
  double m_threshold = 0.0;    // subsample size the tail bounds ask for
  bool m_ok = false;
  double r_tail = 0.0, l2_tail = 0.0;          // population tail sums
  double r_upper = 0.0, r_nys_upper = 0.0;     // high-probability upper bounds
  double t_upper = 0.0, t_nys_upper = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<TheoryRow> theory;
  std::vector<std::string> skipped;  // infeasible cells with reasons
};

SweepResult run_sweep(const ExperimentConfig& config);

struct RateCell {
  Index n = 0;
  double mean = 0.0;
  double se = 0.0;  // standard error of the cell mean across trials
};

/// Log-log least squares of per-cell mean errors against n, compared to the
/// predicted decay exponent.
struct RateFit {
  std::string group;
  double slope = 0.0, intercept = 0.0, slope_se = 0.0, r2 = 0.0;
  double predicted = 0.0;
  bool pass = false;
  std::vector<RateCell> cells;
};

RateFit fit_rate(const std::vector<SweepRow>& rows, Variant variant, Norm norm,
                 const ExperimentConfig& config);

/// Predicted decay exponent of the reconstruction error for the given norm.
double predicted_slope(const ExperimentConfig& config, Norm norm);

std::string rows_csv_header();
std::string rows_csv(const SweepResult& result);
std::string rates_csv(const std::vector<RateFit>& fits);
std::string theory_csv(const SweepResult& result);
std::string plot_data(const RateFit& fit);

/// Writes rows, rates, theory, and one plot-data file per group; returns the
/// rate fits.
std::vector<RateFit> write_sweep_outputs(const ExperimentConfig& config,
                                         const SweepResult& result);

}  // namespace kpca
