#include "kpca/estimators.hpp"

#include <cmath>
#include <stdexcept>

namespace kpca {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::ekpca: return "ekpca";
    case Variant::nystrom: return "nystrom";
    case Variant::rff: return "rff";
  }
  return "unknown";
}

Variant variant_from_string(const std::string& name) {
  if (name == "ekpca") return Variant::ekpca;
  if (name == "nystrom") return Variant::nystrom;
  if (name == "rff") return Variant::rff;
  throw std::invalid_argument("unknown variant: " + name);
}

KpcaModel KpcaModel::truncated(Index ell_new) const {
  if (ell_new < 0 || ell_new > ell())
    throw std::invalid_argument("KpcaModel::truncated: ell out of range");
  KpcaModel out = *this;
  out.eigenvalues = eigenvalues.head(ell_new);
  out.coeffs = coeffs.topRows(ell_new);
  return out;
}

namespace {

// Retains the leading eigenpairs above rtol * lambda_max, raising RankError
// with the achievable rank when fewer than `ell` survive.
Index retained_rank(const Eigen::VectorXd& eigs, Index ell, double rtol, Index hard_cap,
                    const char* caller) {
  Index achievable = 0;
  const double top = eigs.size() > 0 ? eigs(0) : 0.0;
  if (top > 0.0) {
    const double cutoff = rtol * top;
    while (achievable < eigs.size() && eigs(achievable) > cutoff) ++achievable;
  }
  achievable = std::min(achievable, hard_cap);
  if (ell > achievable)
    throw RankError(std::string(caller) + ": requested rank exceeds numerical rank", achievable);
  return achievable;
}

}  // namespace

KpcaModel fit_ekpca(const Eigen::MatrixXd& k, Index ell, double rtol) {
  const Index n = k.rows();
  if (k.cols() != n) throw std::invalid_argument("fit_ekpca: Gram matrix must be square");
  if (n < 2) throw std::invalid_argument("fit_ekpca: need at least two points");
  if (ell < 1 || ell > n - 1) throw std::invalid_argument("fit_ekpca: need 1 <= ell <= n-1");

  // G = (1/(n-1)) C_n K C_n shares its nonzero spectrum with
  // (1/(n(n-1))) K H_n and is symmetric.
  const Eigen::MatrixXd g = center_sym(k) / static_cast<double>(n - 1);
  SymEigen<double> eig = sym_eig(g);
  retained_rank(eig.eigenvalues, ell, rtol, n - 1, "fit_ekpca");

  KpcaModel model;
  model.variant = Variant::ekpca;
  model.eigenvalues = eig.eigenvalues.head(ell);
  model.coeffs.resize(ell, n);
  for (Index i = 0; i < ell; ++i)
    model.coeffs.row(i) =
        eig.eigenvectors.col(i).transpose() /
        std::sqrt(static_cast<double>(n - 1) * eig.eigenvalues(i));
  model.n_train = n;
  model.rtol = rtol;
  return model;
}

KpcaModel fit_nystrom(const Eigen::MatrixXd& k_mm, const Eigen::MatrixXd& k_nm, Index ell,
                      double rtol) {
  const Index m = k_mm.rows();
  const Index n = k_nm.rows();
  if (k_mm.cols() != m) throw std::invalid_argument("fit_nystrom: K_mm must be square");
  if (k_nm.cols() != m) throw std::invalid_argument("fit_nystrom: K_nm must be n x m");
  if (n < 2) throw std::invalid_argument("fit_nystrom: need at least two points");
  if (ell < 1 || ell > m - 1) throw std::invalid_argument("fit_nystrom: need 1 <= ell <= m-1");
  if (psd_rank(k_mm, rtol) < ell)
    throw RankError("fit_nystrom: K_mm rank below requested ell", psd_rank(k_mm, rtol));

  const Eigen::MatrixXd r = inv_sqrt_psd(k_mm, rtol);
  // R K_mn H_n K_nm R = n (C_n K_nm R)^T (C_n K_nm R); the Gram form keeps
  // the small eigenvalues accurate when K_mm is ill conditioned.
  const Eigen::MatrixXd y = center_cols(k_nm) * r;
  const Eigen::MatrixXd mmat = y.transpose() * y / static_cast<double>(n - 1);

  // The variational problem runs over the span of centered subsample
  // sections, i.e. over u in ran(K_mm^{1/2} C_m) (generically of dimension
  // m-1). Compress M into an orthonormal basis of that subspace so the
  // eigenfunctions satisfy the projected eigen-equation; for m = n the
  // excluded direction is already null and nothing changes.
  const Eigen::MatrixXd span = sqrt_psd(k_mm, rtol) * centering_matrix<double>(m);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(span, Eigen::ComputeThinU);
  Index subspace_dim = 0;
  while (subspace_dim < svd.singularValues().size() &&
         svd.singularValues()(subspace_dim) > 1e-12 * svd.singularValues()(0))
    ++subspace_dim;
  if (subspace_dim < ell)
    throw RankError("fit_nystrom: centered subsample span below requested ell", subspace_dim);
  const Eigen::MatrixXd basis = svd.matrixU().leftCols(subspace_dim);
  const Eigen::MatrixXd compressed = basis.transpose() * mmat * basis;

  SymEigen<double> eig = sym_eig(compressed);
  retained_rank(eig.eigenvalues, ell, rtol, std::min(subspace_dim, n - 1), "fit_nystrom");

  KpcaModel model;
  model.variant = Variant::nystrom;
  model.eigenvalues = eig.eigenvalues.head(ell);
  model.coeffs = (r * (basis * eig.eigenvectors.leftCols(ell))).transpose();
  model.n_train = n;
  model.rtol = rtol;
  return model;
}

KpcaModel fit_rff(const Eigen::MatrixXd& z, Index ell, double rtol) {
  const Index n = z.rows();
  const Index m = z.cols();
  if (n < 2) throw std::invalid_argument("fit_rff: need at least two points");
  if (ell < 1 || ell > std::min(m, n - 1))
    throw std::invalid_argument("fit_rff: need 1 <= ell <= min(m, n-1)");

  // The pairwise U-statistic over feature differences collapses to the
  // unbiased covariance (1/(n-1)) Z^T C_n Z.
  const Eigen::MatrixXd zc = center_cols(z);

  KpcaModel model;
  model.variant = Variant::rff;
  model.n_train = n;
  model.rtol = rtol;

  if (m <= n) {
    const Eigen::MatrixXd cov = zc.transpose() * zc / static_cast<double>(n - 1);
    SymEigen<double> eig = sym_eig(cov);
    retained_rank(eig.eigenvalues, ell, rtol, std::min(m, n - 1), "fit_rff");
    model.eigenvalues = eig.eigenvalues.head(ell);
    model.coeffs = eig.eigenvectors.leftCols(ell).transpose();
  } else {
    // Dual route for m > n: Zc Zc^T / (n-1) shares the nonzero spectrum and
    // its eigenvectors lift back as v = Zc^T u / sqrt((n-1) lambda).
    const Eigen::MatrixXd dual = zc * zc.transpose() / static_cast<double>(n - 1);
    SymEigen<double> eig = sym_eig(dual);
    retained_rank(eig.eigenvalues, ell, rtol, n - 1, "fit_rff");
    model.eigenvalues = eig.eigenvalues.head(ell);
    Eigen::MatrixXd v = zc.transpose() * eig.eigenvectors.leftCols(ell);
    for (Index i = 0; i < ell; ++i)
      v.col(i) /= std::sqrt(static_cast<double>(n - 1) * eig.eigenvalues(i));
    detail::orient_columns(v);
    model.coeffs = v.transpose();
  }
  return model;
}

Eigen::MatrixXd pbar_projector_coeffs(const Eigen::MatrixXd& k_mm, double rtol) {
  const Index m = k_mm.rows();
  if (k_mm.cols() != m) throw std::invalid_argument("pbar_projector_coeffs: K_mm must be square");
  // H_m K_mm H_m = m^2 C_m K_mm C_m
  const Eigen::MatrixXd inner =
      center_sym(k_mm) * static_cast<double>(m) * static_cast<double>(m);
  if (psd_rank(inner, rtol) == 0)
    throw RankError("pbar_projector_coeffs: centered Gram has rank zero", 0);
  const Eigen::MatrixXd p = pinv_psd(inner, rtol);
  const Eigen::MatrixXd h = static_cast<double>(m) * centering_matrix<double>(m);
  return h * p * h;
}

Eigen::MatrixXd eigfun_eval(const KpcaModel& model, const KernelSpec& spec,
                            const Eigen::MatrixXd& x) {
  if (model.is_feature_model()) {
    const Eigen::MatrixXd z = feature_matrix(model.feature_map, spec, x);
    if (z.cols() != model.coeffs.cols())
      throw std::invalid_argument("eigfun_eval: feature dimension mismatch");
    return z * model.coeffs.transpose();
  }
  if (model.expansion_points.rows() != model.coeffs.cols())
    throw std::invalid_argument("eigfun_eval: model carries no expansion points");
  const Eigen::MatrixXd kx = gram_between(spec, x, model.expansion_points);
  return kx * model.coeffs.transpose();
}

Eigen::VectorXd eigfun_eval_at(const KpcaModel& model, const KernelSpec& spec,
                               const Eigen::Ref<const Eigen::RowVectorXd>& point) {
  return eigfun_eval(model, spec, Eigen::MatrixXd(point)).row(0);
}

Eigen::MatrixXd embed(const KpcaModel& model, const KernelSpec& spec,
                      const Eigen::MatrixXd& x_new) {
  return eigfun_eval(model, spec, x_new);
}

KpcaModel fit(const KernelSpec& spec, const SampleSet& train, Variant variant, Index ell,
              const FitOptions& options) {
  const Index n = train.size();
  KpcaModel model;
  switch (variant) {
    case Variant::ekpca: {
      model = fit_ekpca(gram(spec, train), ell, options.rtol);
      model.expansion_points = train.points;
      model.expansion_indices.resize(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) model.expansion_indices[static_cast<std::size_t>(i)] = i;
      break;
    }
    case Variant::nystrom: {
      if (options.subsample < 1 || options.subsample > n)
        throw std::invalid_argument("fit: nystrom needs 1 <= subsample <= n");
      const std::vector<Index> rows = subsample_uniform(n, options.subsample, options.seed);
      const CrossGram cg = gram_cross(spec, train, rows);
      model = fit_nystrom(cg.k_mm, cg.k_nm, ell, options.rtol);
      model.expansion_indices = rows;
      model.expansion_points.resize(static_cast<Index>(rows.size()), train.dim());
      for (Index j = 0; j < model.expansion_points.rows(); ++j)
        model.expansion_points.row(j) = train.points.row(rows[static_cast<std::size_t>(j)]);
      break;
    }
    case Variant::rff: {
      if (options.rf_features < 1)
        throw std::invalid_argument("fit: rff needs a positive feature count");
      FeatureMap map;
      if (spec.kind == KernelKind::gaussian)
        map = make_rff_map(train.dim(), options.rf_features, spec.bandwidth, options.seed);
      else if (spec.kind == KernelKind::spectral)
        map = make_spectral_rf_map(spec, options.rf_features, options.seed);
      else
        throw std::invalid_argument("fit: no random feature map for this kernel kind");
      const Eigen::MatrixXd z = feature_matrix(map, spec, train.points);
      model = fit_rff(z, ell, options.rtol);
      model.feature_map = std::move(map);
      break;
    }
  }
  model.n_train = n;
  return model;
}

}  // namespace kpca
