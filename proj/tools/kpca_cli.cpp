// Command-line front end: verify | bench | fit | embed.
//
// Exit codes: 0 success, 1 verification/runtime failure, 2 input error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "kpca/bench.hpp"
#include "kpca/model_io.hpp"
#include "kpca/verify.hpp"

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

kpca::KernelSpec kernel_from_flags(const std::string& kind, double bandwidth, int degree,
                                   double offset, double alpha, kpca::Index features) {
  switch (kpca::kernel_kind_from_string(kind)) {
    case kpca::KernelKind::gaussian: return kpca::KernelSpec::gaussian(bandwidth);
    case kpca::KernelKind::linear: return kpca::KernelSpec::linear();
    case kpca::KernelKind::polynomial: return kpca::KernelSpec::polynomial(degree, offset);
    case kpca::KernelKind::spectral:
      return kpca::KernelSpec::spectral_power_law(features, alpha);
  }
  throw std::invalid_argument("unknown kernel kind " + kind);
}

int cmd_verify(bool fast) {
  const int failures = kpca::run_verification(fast, std::cout);
  return failures == 0 ? 0 : 1;
}

int cmd_bench(const std::string& config_path, bool seed_set, std::uint64_t seed) {
  kpca::ExperimentConfig config = kpca::ExperimentConfig::parse_file(config_path);
  if (seed_set) config.seed = seed;
  const kpca::SweepResult result = kpca::run_sweep(config);
  const std::vector<kpca::RateFit> fits = kpca::write_sweep_outputs(config, result);
  std::cout << "rows: " << result.rows.size() << " -> " << config.out_rows << '\n';
  if (config.kernel.kind == kpca::KernelKind::spectral)
    std::cout << "theory cells: " << result.theory.size() << " -> " << config.out_theory << '\n';
  for (const kpca::RateFit& fit : fits) {
    std::cout << fit.group << ": slope " << fmt(fit.slope) << " predicted " << fmt(fit.predicted)
              << (fit.pass ? " [ok]" : " [off]") << '\n';
  }
  for (const std::string& skip : result.skipped) std::cout << "skipped: " << skip << '\n';
  return 0;
}

int cmd_fit(const std::string& data_path, const std::string& kernel_kind, double bandwidth,
            int degree, double offset, double alpha, kpca::Index features,
            const std::string& variant_name, kpca::Index ell, kpca::Index m, std::uint64_t seed,
            double rtol, const std::string& out_path) {
  const kpca::KernelSpec spec =
      kernel_from_flags(kernel_kind, bandwidth, degree, offset, alpha, features);
  const kpca::SampleSet data = kpca::load_csv(data_path);
  const kpca::Variant variant = kpca::variant_from_string(variant_name);
  kpca::FitOptions options;
  options.subsample = m;
  options.rf_features = m;
  options.seed = seed;
  options.rtol = rtol;
  if (variant == kpca::Variant::nystrom && m < 1)
    throw std::invalid_argument("fit: nystrom requires --m");
  if (variant == kpca::Variant::rff && m < 1)
    throw std::invalid_argument("fit: rff requires --m (feature count)");
  const kpca::KpcaModel model = kpca::fit(spec, data, variant, ell, options);
  kpca::save_model(model, spec, out_path);
  std::cout << "fitted " << kpca::to_string(variant) << " model: n=" << data.size()
            << " ell=" << model.ell() << " -> " << out_path << '\n';
  return 0;
}

int cmd_embed(const std::string& model_path, const std::string& data_path,
              const std::string& out_path) {
  const kpca::SavedModel saved = kpca::load_model(model_path);
  const kpca::SampleSet data = kpca::load_csv(data_path);
  const Eigen::MatrixXd embedding = kpca::embed(saved.model, saved.kernel, data.points);
  std::ofstream out(out_path);
  if (!out) throw std::invalid_argument("embed: cannot open " + out_path);
  for (kpca::Index j = 0; j < embedding.cols(); ++j)
    out << (j ? "," : "") << "phi_" << (j + 1);
  out << '\n';
  for (kpca::Index i = 0; i < embedding.rows(); ++i) {
    for (kpca::Index j = 0; j < embedding.cols(); ++j) out << (j ? "," : "") << fmt(embedding(i, j));
    out << '\n';
  }
  std::cout << "embedded " << embedding.rows() << " points into " << embedding.cols()
            << " components -> " << out_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"centered kernel PCA with Nystrom and random-feature approximations"};
  app.require_subcommand(1);

  auto* verify = app.add_subcommand("verify", "run the full property suite");
  bool fast = false;
  verify->add_flag("--fast", fast, "smaller Monte Carlo budgets");

  auto* bench = app.add_subcommand("bench", "run a sweep from a config file");
  std::string config_path;
  std::uint64_t bench_seed = 0;
  bench->add_option("--config", config_path, "experiment config file")->required();
  auto* seed_opt = bench->add_option("--seed", bench_seed, "override the config seed");

  auto* fit_cmd = app.add_subcommand("fit", "fit a model on a CSV dataset");
  std::string data_path, kernel_kind = "gaussian", variant_name = "ekpca", out_path;
  double bandwidth = 1.0, offset = 0.0, alpha = 2.0, rtol = kpca::kDefaultRtol;
  int degree = 2;
  kpca::Index features = 200, ell = 2, m = 0;
  std::uint64_t fit_seed = 0;
  fit_cmd->add_option("--data", data_path, "training CSV")->required();
  fit_cmd->add_option("--kernel", kernel_kind, "gaussian|linear|polynomial|spectral");
  fit_cmd->add_option("--bandwidth", bandwidth, "gaussian bandwidth");
  fit_cmd->add_option("--degree", degree, "polynomial degree");
  fit_cmd->add_option("--offset", offset, "polynomial offset");
  fit_cmd->add_option("--alpha", alpha, "spectral decay exponent");
  fit_cmd->add_option("--features", features, "spectral feature count");
  fit_cmd->add_option("--variant", variant_name, "ekpca|nystrom|rff");
  fit_cmd->add_option("--ell", ell, "number of components")->required();
  fit_cmd->add_option("--m", m, "subsample size (nystrom) or feature count (rff)");
  fit_cmd->add_option("--seed", fit_seed, "subsample / feature seed");
  fit_cmd->add_option("--rtol", rtol, "spectral threshold");
  fit_cmd->add_option("--out", out_path, "output model JSON")->required();

  auto* embed_cmd = app.add_subcommand("embed", "embed a CSV dataset with a fitted model");
  std::string model_path, embed_data, embed_out;
  embed_cmd->add_option("--model", model_path, "model JSON from fit")->required();
  embed_cmd->add_option("--data", embed_data, "points CSV")->required();
  embed_cmd->add_option("--out", embed_out, "output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed()) return cmd_verify(fast);
    if (bench->parsed()) return cmd_bench(config_path, seed_opt->count() > 0, bench_seed);
    if (fit_cmd->parsed())
      return cmd_fit(data_path, kernel_kind, bandwidth, degree, offset, alpha, features,
                     variant_name, ell, m, fit_seed, rtol, out_path);
    if (embed_cmd->parsed()) return cmd_embed(model_path, embed_data, embed_out);
  } catch (const std::invalid_argument& err) {
    std::cerr << "input error: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
