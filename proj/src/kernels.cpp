#include "kpca/kernels.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <unordered_set>

namespace kpca {

namespace {

void require_spectral_domain(const KernelSpec& spec, const Eigen::MatrixXd& x) {
  if (spec.kind != KernelKind::spectral) return;
  if (x.cols() != 1)
    throw std::invalid_argument("spectral kernel: points must be 1-dimensional");
  if (x.size() > 0 && (x.minCoeff() < 0.0 || x.maxCoeff() > 1.0))
    throw std::invalid_argument("spectral kernel: points must lie in [0,1]");
}

}  // namespace

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::gaussian: return "gaussian";
    case KernelKind::linear: return "linear";
    case KernelKind::polynomial: return "polynomial";
    case KernelKind::spectral: return "spectral";
  }
  return "unknown";
}

KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "gaussian") return KernelKind::gaussian;
  if (name == "linear") return KernelKind::linear;
  if (name == "polynomial") return KernelKind::polynomial;
  if (name == "spectral") return KernelKind::spectral;
  throw std::invalid_argument("unknown kernel kind: " + name);
}

KernelSpec KernelSpec::gaussian(double bandwidth) {
  KernelSpec spec;
  spec.kind = KernelKind::gaussian;
  spec.bandwidth = bandwidth;
  spec.validate();
  return spec;
}

KernelSpec KernelSpec::linear() {
  KernelSpec spec;
  spec.kind = KernelKind::linear;
  return spec;
}

KernelSpec KernelSpec::polynomial(int degree, double offset) {
  KernelSpec spec;
  spec.kind = KernelKind::polynomial;
  spec.degree = degree;
  spec.offset = offset;
  spec.validate();
  return spec;
}

KernelSpec KernelSpec::spectral(Eigen::VectorXd feature_eigenvalues, int basis_first,
                                int basis_stride) {
  KernelSpec spec;
  spec.kind = KernelKind::spectral;
  spec.feature_eigenvalues = std::move(feature_eigenvalues);
  spec.basis_first = basis_first;
  spec.basis_stride = basis_stride;
  spec.validate();
  return spec;
}

KernelSpec KernelSpec::spectral_power_law(Index dim, double alpha) {
  if (dim < 1) throw std::invalid_argument("spectral_power_law: dim must be >= 1");
  Eigen::VectorXd eigs(dim);
  for (Index j = 0; j < dim; ++j) eigs(j) = std::pow(static_cast<double>(j + 1), -alpha);
  return spectral(std::move(eigs));
}

double KernelSpec::kappa() const {
  switch (kind) {
    case KernelKind::gaussian: return 1.0;
    case KernelKind::spectral: {
      // sup_x sum_j 2 lambda_j sin^2(pi i_j x), evaluated on a fine grid. The
      // crude bound 2 sum(lambda) overshoots because the sines cannot peak
      // simultaneously.
      const double pi = std::numbers::pi;
      const Eigen::ArrayXd grid = Eigen::ArrayXd::LinSpaced(20001, 0.0, 1.0);
      Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(grid.size());
      for (Index j = 0; j < feature_dim(); ++j) {
        const double i = static_cast<double>(basis_index(j));
        acc += 2.0 * feature_eigenvalues(j) * (pi * i * grid).sin().square();
      }
      return acc.maxCoeff();
    }
    case KernelKind::linear:
    case KernelKind::polynomial: return std::numeric_limits<double>::infinity();
  }
  return std::numeric_limits<double>::infinity();
}

void KernelSpec::validate() const {
  switch (kind) {
    case KernelKind::gaussian:
      if (!(bandwidth > 0.0)) throw std::invalid_argument("gaussian kernel: bandwidth must be > 0");
      break;
    case KernelKind::polynomial:
      if (degree < 1) throw std::invalid_argument("polynomial kernel: degree must be >= 1");
      if (offset < 0.0) throw std::invalid_argument("polynomial kernel: offset must be >= 0");
      break;
    case KernelKind::spectral: {
      if (feature_eigenvalues.size() < 1)
        throw std::invalid_argument("spectral kernel: needs at least one feature eigenvalue");
      if (basis_first < 1 || basis_stride < 1)
        throw std::invalid_argument("spectral kernel: basis indices must be positive");
      for (Index j = 0; j < feature_eigenvalues.size(); ++j) {
        if (!(feature_eigenvalues(j) > 0.0))
          throw std::invalid_argument("spectral kernel: feature eigenvalues must be positive");
        if (j > 0 && !(feature_eigenvalues(j) < feature_eigenvalues(j - 1)))
          throw std::invalid_argument(
              "spectral kernel: feature eigenvalues must be strictly descending");
      }
      break;
    }
    case KernelKind::linear: break;
  }
}

SampleSet sample_uniform01(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  SampleSet out;
  out.points.resize(n, 1);
  for (Index i = 0; i < n; ++i) out.points(i, 0) = unif(rng);
  out.seed = seed;
  out.source = "synthetic";
  return out;
}

SampleSet sample_gaussian(Index n, Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  SampleSet out;
  out.points.resize(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) out.points(i, j) = normal(rng);
  out.seed = seed;
  out.source = "synthetic";
  return out;
}

namespace {

bool parse_row(const std::string& line, std::vector<double>& values) {
  values.clear();
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim
    auto b = cell.find_first_not_of(" \t\r");
    auto e = cell.find_last_not_of(" \t\r");
    if (b == std::string::npos) return false;
    cell = cell.substr(b, e - b + 1);
    try {
      std::size_t pos = 0;
      double v = std::stod(cell, &pos);
      if (pos != cell.size()) return false;
      values.push_back(v);
    } catch (const std::exception&) {
      return false;
    }
  }
  return !values.empty();
}

}  // namespace

SampleSet load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("load_csv: cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!parse_row(line, values)) {
      if (rows.empty() && !header_seen) {
        header_seen = true;  // non-numeric first row: header
        continue;
      }
      throw std::invalid_argument("load_csv: " + path + ": malformed row at line " +
                                  std::to_string(line_no));
    }
    if (!rows.empty() && values.size() != rows.front().size())
      throw std::invalid_argument("load_csv: " + path + ": inconsistent column count at line " +
                                  std::to_string(line_no));
    rows.push_back(values);
  }
  if (rows.empty()) throw std::invalid_argument("load_csv: " + path + ": no data rows");

  SampleSet out;
  out.points.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < out.points.rows(); ++i)
    for (Index j = 0; j < out.points.cols(); ++j)
      out.points(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  out.source = path;
  return out;
}

double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("kernel_eval: dimension mismatch");
  switch (spec.kind) {
    case KernelKind::gaussian: {
      const double d2 = (x - y).squaredNorm();
      return std::exp(-d2 / (2.0 * spec.bandwidth * spec.bandwidth));
    }
    case KernelKind::linear: return x.dot(y);
    case KernelKind::polynomial:
      return std::pow(x.dot(y) + spec.offset, static_cast<double>(spec.degree));
    case KernelKind::spectral: {
      require_spectral_domain(spec, x.transpose());
      require_spectral_domain(spec, y.transpose());
      const double pi = std::numbers::pi;
      double acc = 0.0;
      for (Index j = 0; j < spec.feature_dim(); ++j) {
        const double i = static_cast<double>(spec.basis_index(j));
        acc += spec.feature_eigenvalues(j) * 2.0 * std::sin(pi * i * x(0)) * std::sin(pi * i * y(0));
      }
      return acc;
    }
  }
  throw std::logic_error("kernel_eval: unreachable");
}

Eigen::MatrixXd spectral_basis_eval(const KernelSpec& spec, const Eigen::MatrixXd& x) {
  if (spec.kind != KernelKind::spectral)
    throw std::invalid_argument("spectral_basis_eval: spectral kernel required");
  require_spectral_domain(spec, x);
  const double pi = std::numbers::pi;
  Eigen::MatrixXd e(x.rows(), spec.feature_dim());
  for (Index j = 0; j < spec.feature_dim(); ++j) {
    const double i = static_cast<double>(spec.basis_index(j));
    e.col(j) = (pi * i * x.col(0).array()).sin() * std::numbers::sqrt2;
  }
  return e;
}

Eigen::MatrixXd spectral_feature_coords(const KernelSpec& spec, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd psi = spectral_basis_eval(spec, x);
  psi.array().rowwise() *= spec.feature_eigenvalues.array().sqrt().transpose();
  return psi;
}

Eigen::MatrixXd gram_between(const KernelSpec& spec, const Eigen::MatrixXd& a,
                             const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("gram_between: dimension mismatch");
  switch (spec.kind) {
    case KernelKind::spectral:
      return spectral_feature_coords(spec, a) * spectral_feature_coords(spec, b).transpose();
    case KernelKind::linear: return a * b.transpose();
    case KernelKind::polynomial:
      return ((a * b.transpose()).array() + spec.offset).pow(spec.degree).matrix();
    case KernelKind::gaussian: {
      const Eigen::VectorXd a2 = a.rowwise().squaredNorm();
      const Eigen::VectorXd b2 = b.rowwise().squaredNorm();
      Eigen::MatrixXd d2 = -2.0 * (a * b.transpose());
      d2.colwise() += a2;
      d2.rowwise() += b2.transpose();
      const double inv = -1.0 / (2.0 * spec.bandwidth * spec.bandwidth);
      return (d2.array().max(0.0) * inv).exp().matrix();
    }
  }
  throw std::logic_error("gram_between: unreachable");
}

Eigen::MatrixXd gram(const KernelSpec& spec, const SampleSet& x) {
  if (!x.points.allFinite()) throw std::invalid_argument("gram: sample has non-finite coordinates");
  require_spectral_domain(spec, x.points);
  Eigen::MatrixXd k = gram_between(spec, x.points, x.points);
  k = ((k + k.transpose()) / 2.0).eval();  // restore exact symmetry after GEMM roundoff
  return k;
}

CrossGram gram_cross(const KernelSpec& spec, const SampleSet& x, const std::vector<Index>& rows) {
  const Index n = x.size();
  std::unordered_set<Index> seen;
  for (Index r : rows) {
    if (r < 0 || r >= n) throw std::invalid_argument("gram_cross: index out of range");
    if (!seen.insert(r).second) throw std::invalid_argument("gram_cross: duplicate index");
  }
  if (rows.empty()) throw std::invalid_argument("gram_cross: empty index list");

  Eigen::MatrixXd sub(static_cast<Index>(rows.size()), x.dim());
  for (Index j = 0; j < sub.rows(); ++j) sub.row(j) = x.points.row(rows[static_cast<std::size_t>(j)]);

  CrossGram out;
  out.k_nm = gram_between(spec, x.points, sub);
  // K_mm is the exact row restriction of K_nm; downstream spectral routines
  // symmetrize before decomposing.
  out.k_mm.resize(sub.rows(), sub.rows());
  for (Index j = 0; j < sub.rows(); ++j)
    out.k_mm.row(j) = out.k_nm.row(rows[static_cast<std::size_t>(j)]);
  return out;
}

std::vector<Index> subsample_uniform(Index n, Index m, std::uint64_t seed) {
  if (n < 1 || m < 1 || m > n)
    throw std::invalid_argument("subsample_uniform: need 1 <= m <= n");
  std::vector<Index> pool(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  std::mt19937_64 rng(seed);
  // partial Fisher-Yates: the first m entries are a uniform m-subset
  for (Index i = 0; i < m; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  pool.resize(static_cast<std::size_t>(m));
  std::sort(pool.begin(), pool.end());
  return pool;
}

RffMap make_rff_map(Index dim, Index m, double bandwidth, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("make_rff_map: m must be >= 1");
  if (dim < 1) throw std::invalid_argument("make_rff_map: dim must be >= 1");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("make_rff_map: bandwidth must be > 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / bandwidth);
  std::uniform_real_distribution<double> unif(0.0, 2.0 * std::numbers::pi);
  RffMap map;
  map.frequencies.resize(m, dim);
  map.phases.resize(m);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < dim; ++j) map.frequencies(i, j) = normal(rng);
    map.phases(i) = unif(rng);
  }
  map.bandwidth = bandwidth;
  map.seed = seed;
  return map;
}

Eigen::MatrixXd rff_features(const RffMap& map, const Eigen::MatrixXd& x) {
  if (x.cols() != map.dim()) throw std::invalid_argument("rff_features: dimension mismatch");
  Eigen::MatrixXd z = x * map.frequencies.transpose();  // n x m
  z.rowwise() += map.phases.transpose();
  const double scale = std::sqrt(2.0 / static_cast<double>(map.feature_count()));
  return (z.array().cos() * scale).matrix();
}

SpectralRfMap make_spectral_rf_map(const KernelSpec& spec, Index m, std::uint64_t seed) {
  if (spec.kind != KernelKind::spectral)
    throw std::invalid_argument("make_spectral_rf_map: spectral kernel required");
  if (m < 1) throw std::invalid_argument("make_spectral_rf_map: m must be >= 1");
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> pick(spec.feature_eigenvalues.data(),
                                       spec.feature_eigenvalues.data() + spec.feature_dim());
  SpectralRfMap map;
  map.positions.resize(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) map.positions[static_cast<std::size_t>(i)] = pick(rng);
  map.total_mass = spec.feature_eigenvalues.sum();
  map.seed = seed;
  return map;
}

Eigen::MatrixXd spectral_rf_features(const SpectralRfMap& map, const KernelSpec& spec,
                                     const Eigen::MatrixXd& x) {
  Eigen::MatrixXd basis = spectral_basis_eval(spec, x);  // n x D
  const Index m = map.feature_count();
  const double scale = std::sqrt(map.total_mass / static_cast<double>(m));
  Eigen::MatrixXd z(x.rows(), m);
  for (Index j = 0; j < m; ++j) z.col(j) = scale * basis.col(map.positions[static_cast<std::size_t>(j)]);
  return z;
}

Eigen::MatrixXd feature_matrix(const FeatureMap& map, const KernelSpec& spec,
                               const Eigen::MatrixXd& x) {
  if (std::holds_alternative<RffMap>(map)) return rff_features(std::get<RffMap>(map), x);
  if (std::holds_alternative<SpectralRfMap>(map))
    return spectral_rf_features(std::get<SpectralRfMap>(map), spec, x);
  if (std::holds_alternative<ExactSpectralMap>(map)) return spectral_feature_coords(spec, x);
  throw std::invalid_argument("feature_matrix: model carries no feature map");
}

}  // namespace kpca
