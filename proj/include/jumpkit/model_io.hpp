#pragma once

#include <string>

#include "jumpkit/model.hpp"

namespace jumpkit {

/// Loads a model description file (YAML key/value with nested lists).
KinematicTree load_model(const std::string& path);

void save_model(const KinematicTree& tree, const std::string& path);

}  // namespace jumpkit
