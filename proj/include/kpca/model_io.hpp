#pragma once

#include <string>

#include "kpca/estimators.hpp"

namespace kpca {

/// Self-describing JSON serialization of a fitted model together with its
/// kernel parameters. Floating-point values are written with shortest
/// round-trip precision, so load(save(x)) reproduces every double bit for
/// bit.
struct SavedModel {
  KpcaModel model;
  KernelSpec kernel;
};

std::string model_to_json(const KpcaModel& model, const KernelSpec& kernel);
SavedModel model_from_json(const std::string& text);

void save_model(const KpcaModel& model, const KernelSpec& kernel, const std::string& path);
SavedModel load_model(const std::string& path);

}  // namespace kpca
