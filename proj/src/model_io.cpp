#include "kpca/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace kpca {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  if (!rows.is_array()) throw std::invalid_argument("model json: expected matrix");
  const Index r = static_cast<Index>(rows.size());
  if (r == 0) return Eigen::MatrixXd(0, 0);
  const Index c = static_cast<Index>(rows.at(0).size());
  Eigen::MatrixXd m(r, c);
  for (Index i = 0; i < r; ++i) {
    const json& row = rows.at(static_cast<std::size_t>(i));
    if (static_cast<Index>(row.size()) != c)
      throw std::invalid_argument("model json: ragged matrix");
    for (Index j = 0; j < c; ++j) m(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  if (!arr.is_array()) throw std::invalid_argument("model json: expected array");
  Eigen::VectorXd v(static_cast<Index>(arr.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = arr.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

json kernel_to_json(const KernelSpec& spec) {
  json k;
  k["kind"] = to_string(spec.kind);
  switch (spec.kind) {
    case KernelKind::gaussian: k["bandwidth"] = spec.bandwidth; break;
    case KernelKind::linear: break;
    case KernelKind::polynomial:
      k["degree"] = spec.degree;
      k["offset"] = spec.offset;
      break;
    case KernelKind::spectral:
      k["feature_eigenvalues"] = vector_to_json(spec.feature_eigenvalues);
      k["basis_first"] = spec.basis_first;
      k["basis_stride"] = spec.basis_stride;
      break;
  }
  return k;
}

KernelSpec kernel_from_json(const json& k) {
  const KernelKind kind = kernel_kind_from_string(k.at("kind").get<std::string>());
  switch (kind) {
    case KernelKind::gaussian: return KernelSpec::gaussian(k.at("bandwidth").get<double>());
    case KernelKind::linear: return KernelSpec::linear();
    case KernelKind::polynomial:
      return KernelSpec::polynomial(k.at("degree").get<int>(), k.at("offset").get<double>());
    case KernelKind::spectral:
      return KernelSpec::spectral(vector_from_json(k.at("feature_eigenvalues")),
                                  k.at("basis_first").get<int>(),
                                  k.at("basis_stride").get<int>());
  }
  throw std::invalid_argument("model json: unknown kernel kind");
}

json feature_map_to_json(const FeatureMap& map) {
  if (std::holds_alternative<std::monostate>(map)) return nullptr;
  json out;
  if (const RffMap* rff = std::get_if<RffMap>(&map)) {
    out["kind"] = "rff";
    out["bandwidth"] = rff->bandwidth;
    out["seed"] = rff->seed;
    out["frequencies"] = matrix_to_json(rff->frequencies);
    out["phases"] = vector_to_json(rff->phases);
  } else if (const SpectralRfMap* srf = std::get_if<SpectralRfMap>(&map)) {
    out["kind"] = "spectral_rf";
    out["seed"] = srf->seed;
    out["total_mass"] = srf->total_mass;
    out["positions"] = srf->positions;
  } else {
    out["kind"] = "exact_spectral";
  }
  return out;
}

FeatureMap feature_map_from_json(const json& fm) {
  if (fm.is_null()) return std::monostate{};
  const std::string kind = fm.at("kind").get<std::string>();
  if (kind == "rff") {
    RffMap map;
    map.bandwidth = fm.at("bandwidth").get<double>();
    map.seed = fm.at("seed").get<std::uint64_t>();
    map.frequencies = matrix_from_json(fm.at("frequencies"));
    map.phases = vector_from_json(fm.at("phases"));
    return map;
  }
  if (kind == "spectral_rf") {
    SpectralRfMap map;
    map.seed = fm.at("seed").get<std::uint64_t>();
    map.total_mass = fm.at("total_mass").get<double>();
    map.positions = fm.at("positions").get<std::vector<Index>>();
    return map;
  }
  if (kind == "exact_spectral") return ExactSpectralMap{};
  throw std::invalid_argument("model json: unknown feature map kind " + kind);
}

}  // namespace

std::string model_to_json(const KpcaModel& model, const KernelSpec& kernel) {
  json doc;
  doc["format"] = "kpca-model";
  doc["version"] = 1;
  doc["variant"] = to_string(model.variant);
  doc["n_train"] = model.n_train;
  doc["rtol"] = model.rtol;
  doc["eigenvalues"] = vector_to_json(model.eigenvalues);
  doc["coefficients"] = matrix_to_json(model.coeffs);
  doc["expansion_indices"] = model.expansion_indices;
  doc["expansion_points"] = matrix_to_json(model.expansion_points);
  doc["kernel"] = kernel_to_json(kernel);
  doc["feature_map"] = feature_map_to_json(model.feature_map);
  return doc.dump(2);
}

SavedModel model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    throw std::invalid_argument(std::string("model json: parse error: ") + err.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "kpca-model")
      throw std::invalid_argument("model json: not a kpca-model document");
    SavedModel out;
    out.kernel = kernel_from_json(doc.at("kernel"));
    out.model.variant = variant_from_string(doc.at("variant").get<std::string>());
    out.model.n_train = doc.at("n_train").get<Index>();
    out.model.rtol = doc.at("rtol").get<double>();
    out.model.eigenvalues = vector_from_json(doc.at("eigenvalues"));
    out.model.coeffs = matrix_from_json(doc.at("coefficients"));
    out.model.expansion_indices = doc.at("expansion_indices").get<std::vector<Index>>();
    out.model.expansion_points = matrix_from_json(doc.at("expansion_points"));
    out.model.feature_map = feature_map_from_json(doc.at("feature_map"));
    return out;
  } catch (const json::exception& err) {
    throw std::invalid_argument(std::string("model json: ") + err.what());
  }
}

void save_model(const KpcaModel& model, const KernelSpec& kernel, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("save_model: cannot open " + path);
  out << model_to_json(model, kernel) << '\n';
}

SavedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("load_model: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace kpca
