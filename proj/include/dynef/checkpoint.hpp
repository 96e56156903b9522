#pragma once

#include <string>

#include "dynef/model.hpp"

namespace dynef {

/// Single JSON document holding the alphabet, both graphs, the basis table
/// and all parameters. The arrays for V and U follow the canonical edge
/// orders of the saved graphs; matrices are flattened row-major.
void save_checkpoint(const std::string& path, const Model& m);

std::string checkpoint_to_string(const Model& m);

/// Rebuilds the model. Causal edges may be listed in any order (V entries
/// are realigned); lateral edges given in the reversed orientation have
/// their U matrices transposed into canonical storage.
Model load_checkpoint(const std::string& path);

}  // namespace dynef
