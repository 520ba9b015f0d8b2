#include "kpca/recon.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace kpca {

std::string to_string(Norm norm) { return norm == Norm::H ? "H" : "L2"; }

std::string recon_csv_header() { return "variant,norm,n,m,ell,t,estimate,se,n_test,seed"; }

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double pairwise_sum(const double* data, Index size) {
  if (size <= 8) {
    double acc = 0.0;
    for (Index i = 0; i < size; ++i) acc += data[i];
    return acc;
  }
  const Index half = size / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, size - half);
}

}  // namespace

std::string recon_csv_row(const ReconReport& r) {
  std::ostringstream os;
  os << to_string(r.variant) << ',' << to_string(r.norm) << ',' << r.n << ',' << r.m << ','
     << r.ell << ',' << fmt(r.t) << ',' << fmt(r.estimate) << ',' << fmt(r.std_error) << ','
     << r.n_test << ',' << r.seed;
  return os.str();
}

MeanSe pairwise_mean_se(const Eigen::VectorXd& values) {
  const Index n = values.size();
  if (n == 0) throw std::invalid_argument("pairwise_mean_se: empty sample");
  MeanSe out;
  out.mean = pairwise_sum(values.data(), n) / static_cast<double>(n);
  if (n == 1) return out;
  const Eigen::VectorXd sq = (values.array() - out.mean).square();
  const double var = pairwise_sum(sq.data(), n) / static_cast<double>(n - 1);
  out.se = std::sqrt(var / static_cast<double>(n));
  return out;
}

KpcaModel population_model(const OracleSpectrum& oracle, Index ell) {
  if (ell < 0 || ell > oracle.dim())
    throw std::invalid_argument("population_model: ell must lie in [0, D]");
  KpcaModel model;
  model.variant = Variant::rff;
  model.eigenvalues = oracle.sigma_eigs.head(ell);
  model.coeffs = oracle.sigma_vecs.leftCols(ell).transpose();
  model.feature_map = ExactSpectralMap{};
  model.n_train = 0;
  return model;
}

namespace {

// Pointwise kernel diagonal k(y,y).
Eigen::VectorXd kernel_diag(const KernelSpec& spec, const Eigen::MatrixXd& x) {
  switch (spec.kind) {
    case KernelKind::gaussian: return Eigen::VectorXd::Ones(x.rows());
    case KernelKind::linear: return x.rowwise().squaredNorm();
    case KernelKind::polynomial:
      return (x.rowwise().squaredNorm().array() + spec.offset).pow(spec.degree).matrix();
    case KernelKind::spectral:
      return spectral_feature_coords(spec, x).rowwise().squaredNorm();
  }
  throw std::logic_error("kernel_diag: unreachable");
}

struct MeanData {
  double sq_norm = 0.0;
  std::function<Eigen::VectorXd(const Eigen::MatrixXd&)> at_points;
};

MeanData build_mean(const KernelSpec& spec, const MeanSource& mean) {
  if ((mean.oracle != nullptr) == (mean.proxy != nullptr))
    throw std::invalid_argument("recon: mean source must set exactly one of oracle/proxy");
  MeanData data;
  if (mean.oracle != nullptr) {
    if (spec.kind != KernelKind::spectral)
      throw std::invalid_argument("recon: oracle mean requires the spectral kernel");
    const OracleSpectrum* o = mean.oracle;
    data.sq_norm = o->mp_sq_norm;
    data.at_points = [o, &spec](const Eigen::MatrixXd& pts) {
      return mean_function_eval(*o, spec, pts);
    };
  } else {
    const SampleSet* proxy = mean.proxy;
    if (proxy->size() < 1) throw std::invalid_argument("recon: proxy sample is empty");
    data.sq_norm = gram_between(spec, proxy->points, proxy->points).mean();
    data.at_points = [proxy, &spec](const Eigen::MatrixXd& pts) {
      return gram_between(spec, pts, proxy->points).rowwise().mean().eval();
    };
  }
  return data;
}

void check_disjoint(const SampleSet* train, const SampleSet& test) {
  if (train == nullptr) return;
  if (train->size() == test.size() && train->dim() == test.dim() &&
      train->points.isApprox(test.points, 0.0))
    throw std::invalid_argument("recon: test set coincides with the training sample");
}

bool is_random_feature_model(const KpcaModel& model) {
  return std::holds_alternative<RffMap>(model.feature_map) ||
         std::holds_alternative<SpectralRfMap>(model.feature_map);
}

bool is_exact_map_model(const KpcaModel& model) {
  return std::holds_alternative<ExactSpectralMap>(model.feature_map);
}

// Shared context for the RKHS-expansion estimators: eigenfunction values at
// test points, their training-sample means, and their inner products with
// the mean element.
struct HContext {
  Eigen::MatrixXd phi_test;          // T x ell
  Eigen::VectorXd phi_train_mean;    // ell; equals phi_mp when train is null
  Eigen::VectorXd phi_mp;            // ell: <phi_i, m>
  Eigen::MatrixXd a_coords;          // ell x D feature coordinates (spectral only)
  bool has_coords = false;
};

HContext build_h_context(const KpcaModel& model, const KernelSpec& spec, const SampleSet* train,
                         const MeanSource& mean, const SampleSet& test) {
  HContext ctx;

  if (spec.kind == KernelKind::spectral) {
    // Feature coordinates of the eigenfunctions; evaluation through them is
    // algebraically identical to summing kernel expansions.
    if (is_exact_map_model(model)) {
      ctx.a_coords = model.coeffs;
    } else {
      ctx.a_coords = model.coeffs * spectral_feature_coords(spec, model.expansion_points);
    }
    ctx.has_coords = true;
  }
  const auto phi_at = [&](const Eigen::MatrixXd& pts) -> Eigen::MatrixXd {
    if (ctx.has_coords) return spectral_feature_coords(spec, pts) * ctx.a_coords.transpose();
    return eigfun_eval(model, spec, pts);
  };

  ctx.phi_test = phi_at(test.points);
  if (mean.oracle != nullptr) {
    ctx.phi_mp = ctx.a_coords * mean.oracle->mean_coeffs;
  } else {
    // <phi_i, mhat_W> for the proxy mean is the average of phi_i over the
    // proxy sample.
    ctx.phi_mp = phi_at(mean.proxy->points).colwise().mean();
  }

  if (train != nullptr)
    ctx.phi_train_mean = phi_at(train->points).colwise().mean();
  else
    ctx.phi_train_mean = ctx.phi_mp;
  return ctx;
}

ReconReport finalize(const KpcaModel& model, Norm norm, const Eigen::VectorXd& values,
                     const ReconOptions& options) {
  const MeanSe stat = pairwise_mean_se(values);
  ReconReport report;
  report.variant = model.variant;
  report.norm = norm;
  report.n = model.n_train;
  report.m = model.coeffs.cols();
  report.ell = model.ell();
  report.t = options.t;
  report.estimate = stat.mean;
  report.std_error = stat.se;
  report.n_test = values.size();
  report.seed = options.seed;
  return report;
}

constexpr Index kChunk = 512;

// Column variances (unbiased) of a matrix whose columns are residual values
// over the inner sample.
Eigen::VectorXd column_variances(Eigen::MatrixXd& cols) {
  const Index s = cols.rows();
  cols.rowwise() -= cols.colwise().mean();
  return cols.colwise().squaredNorm().transpose() / static_cast<double>(s - 1);
}

}  // namespace

ReconReport recon_h(const KpcaModel& model, const KernelSpec& spec, const SampleSet* train,
                    const MeanSource& mean, const SampleSet& test, const ReconOptions& options) {
  if (is_random_feature_model(model))
    throw std::invalid_argument("recon_h: RKHS-norm error is undefined for random-feature models");
  check_disjoint(train, test);
  const MeanData mean_data = build_mean(spec, mean);
  const HContext ctx = build_h_context(model, spec, train, mean, test);

  const bool spectral_oracle = mean.oracle != nullptr && ctx.has_coords;
  ReconRoute route = options.route;
  if (route == ReconRoute::automatic)
    route = spectral_oracle ? ReconRoute::feature_coords : ReconRoute::kernel_expansion;
  if (route == ReconRoute::feature_coords && !spectral_oracle)
    throw std::invalid_argument("recon_h: feature route requires the spectral kernel and oracle");

  const Eigen::MatrixXd d_mat = ctx.phi_test.rowwise() - ctx.phi_train_mean.transpose();
  Eigen::VectorXd values;

  if (route == ReconRoute::feature_coords) {
    // Exact residual coordinates: g_y = psi(y) - mbar - sum_i d_i a_i.
    Eigen::MatrixXd g = spectral_feature_coords(spec, test.points);
    g.rowwise() -= mean.oracle->mean_coeffs.transpose();
    g.noalias() -= d_mat * ctx.a_coords;
    values = g.rowwise().squaredNorm();
  } else {
    // Orthonormal-expansion form:
    // k(y,y) - 2 m(y) + |m|^2 - 2 sum c_i d_i + sum d_i^2.
    const Eigen::MatrixXd c_mat = ctx.phi_test.rowwise() - ctx.phi_mp.transpose();
    values = kernel_diag(spec, test.points) - 2.0 * mean_data.at_points(test.points);
    values.array() += mean_data.sq_norm;
    values.array() -= 2.0 * (c_mat.array() * d_mat.array()).rowwise().sum();
    values.array() += d_mat.rowwise().squaredNorm().array();
  }
  ReconReport report = finalize(model, Norm::H, values, options);
  return report;
}

ReconReport recon_l2(const KpcaModel& model, const KernelSpec& spec, const SampleSet* train,
                     const MeanSource& mean, const SampleSet& test, const SampleSet* inner,
                     const ReconOptions& options) {
  if (is_random_feature_model(model))
    throw std::invalid_argument("recon_l2: use recon_rff_l2 for random-feature models");
  check_disjoint(train, test);
  const MeanData mean_data = build_mean(spec, mean);
  const HContext ctx = build_h_context(model, spec, train, mean, test);

  const bool spectral_oracle = mean.oracle != nullptr && ctx.has_coords;
  ReconRoute route = options.route;
  if (route == ReconRoute::automatic)
    route = spectral_oracle ? ReconRoute::feature_coords : ReconRoute::kernel_expansion;

  const Eigen::MatrixXd d_mat = ctx.phi_test.rowwise() - ctx.phi_train_mean.transpose();
  Eigen::VectorXd values(test.size());

  if (route == ReconRoute::feature_coords) {
    if (!spectral_oracle)
      throw std::invalid_argument("recon_l2: feature route requires the spectral kernel and oracle");
    // <g, Sigma g> with Sigma = diag(lambda) - mbar mbar^T:
    // sum_j lambda_j g_j^2 - (g . mbar)^2, exact in feature coordinates.
    Eigen::MatrixXd g = spectral_feature_coords(spec, test.points);
    g.rowwise() -= mean.oracle->mean_coeffs.transpose();
    g.noalias() -= d_mat * ctx.a_coords;
    const OracleSpectrum& o = *mean.oracle;
    values =
        (g.array().square().rowwise() * o.feat_eigs.transpose().array()).rowwise().sum().matrix();
    values.array() -= (g * o.mean_coeffs).array().square();
  } else {
    if (inner == nullptr || inner->size() < 2)
      throw std::invalid_argument("recon_l2: inner evaluation sample required for this kernel");
    // ||J g_y||^2 = Var_Z[g_y(Z)] over the inner sample.
    Eigen::MatrixXd phi_inner;
    if (ctx.has_coords)
      phi_inner = spectral_feature_coords(spec, inner->points) * ctx.a_coords.transpose();
    else
      phi_inner = eigfun_eval(model, spec, inner->points);
    const Eigen::VectorXd m_inner = mean_data.at_points(inner->points);
    for (Index start = 0; start < test.size(); start += kChunk) {
      const Index len = std::min(kChunk, test.size() - start);
      Eigen::MatrixXd block =
          gram_between(spec, inner->points, test.points.middleRows(start, len));
      block.colwise() -= m_inner;
      block.noalias() -= phi_inner * d_mat.middleRows(start, len).transpose();
      values.segment(start, len) = column_variances(block);
    }
  }
  return finalize(model, Norm::L2, values, options);
}

ReconReport recon_rff_l2(const KpcaModel& model, const KernelSpec& spec, const SampleSet* train,
                         const MeanSource& mean, const SampleSet& test, const SampleSet* inner,
                         const ReconOptions& options) {
  if (!model.is_feature_model())
    throw std::invalid_argument("recon_rff_l2: model carries no feature map");
  check_disjoint(train, test);
  const MeanData mean_data = build_mean(spec, mean);

  const Eigen::MatrixXd phi_test = eigfun_eval(model, spec, test.points);
  Eigen::VectorXd phi_train_mean;
  if (train != nullptr) {
    phi_train_mean = eigfun_eval(model, spec, train->points).colwise().mean();
  } else if (mean.oracle != nullptr && is_exact_map_model(model)) {
    phi_train_mean = model.coeffs * mean.oracle->mean_coeffs;
  } else {
    throw std::invalid_argument("recon_rff_l2: training sample required");
  }
  // Feature-space weights of the reconstruction r_y = sum_i d_i phi_{m,i}.
  const Eigen::MatrixXd d_mat = phi_test.rowwise() - phi_train_mean.transpose();
  const Eigen::MatrixXd u = d_mat * model.coeffs;  // T x m_features

  const bool sine_supported =
      spec.kind == KernelKind::spectral &&
      (std::holds_alternative<SpectralRfMap>(model.feature_map) || is_exact_map_model(model));
  const bool exact_route = mean.oracle != nullptr && sine_supported;

  ReconRoute route = options.route;
  if (route == ReconRoute::automatic)
    route = exact_route ? ReconRoute::feature_coords : ReconRoute::kernel_expansion;
  if (route == ReconRoute::feature_coords && !exact_route)
    throw std::invalid_argument("recon_rff_l2: exact route requires spectral kernel and oracle");

  Eigen::VectorXd values(test.size());
  if (route == ReconRoute::feature_coords) {
    const OracleSpectrum& o = *mean.oracle;
    const Index d = o.dim();
    // Coordinates of each feature in the sine basis.
    Eigen::MatrixXd feat_coords;
    if (const SpectralRfMap* srf = std::get_if<SpectralRfMap>(&model.feature_map)) {
      feat_coords = Eigen::MatrixXd::Zero(srf->feature_count(), d);
      const double scale =
          std::sqrt(srf->total_mass / static_cast<double>(srf->feature_count()));
      for (Index f = 0; f < srf->feature_count(); ++f)
        feat_coords(f, srf->positions[static_cast<std::size_t>(f)]) += scale;
    } else {
      feat_coords = Eigen::MatrixXd(o.feat_eigs.array().sqrt().matrix().asDiagonal());
    }
    // q_y = k(.,y) - m_P - r_y in sine-basis coordinates; then
    // Var[q] = |q|^2 - (q . mu)^2.
    Eigen::MatrixXd q = (spectral_basis_eval(spec, test.points).array().rowwise() *
                         o.feat_eigs.transpose().array())
                            .matrix();
    q.rowwise() -= (o.feat_eigs.array() * o.basis_means.array()).matrix().transpose();
    q.noalias() -= u * feat_coords;
    values = q.rowwise().squaredNorm();
    values.array() -= (q * o.basis_means).array().square();
  } else {
    if (inner == nullptr || inner->size() < 2)
      throw std::invalid_argument("recon_rff_l2: inner evaluation sample required");
    const Eigen::MatrixXd z_inner = feature_matrix(model.feature_map, spec, inner->points);
    const Eigen::VectorXd m_inner = mean_data.at_points(inner->points);
    for (Index start = 0; start < test.size(); start += kChunk) {
      const Index len = std::min(kChunk, test.size() - start);
      Eigen::MatrixXd block =
          gram_between(spec, inner->points, test.points.middleRows(start, len));
      block.colwise() -= m_inner;
      block.noalias() -= z_inner * u.middleRows(start, len).transpose();
      values.segment(start, len) = column_variances(block);
    }
  }
  return finalize(model, Norm::L2, values, options);
}

}  // namespace kpca
