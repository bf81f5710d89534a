#pragma once

#include <string>

#include "ecgforge/models.hpp"

namespace ecgforge::checkpoint {

/// Flat binary checkpoint: magic "ECGF", u32 version, named-tensor
/// directory (name, dims, byte offset), then raw little-endian doubles.
/// Covers parameters and input-normalization running statistics.
void save(const models::Model& model, const std::string& path);
/// Loads tensors into an existing model; names and shapes must match the
/// spec-generated topology exactly.
void load(models::Model& model, const std::string& path);

void save_ensemble(const models::Ensemble& ensemble, const std::string& dir,
                   const std::string& stem);
models::Ensemble load_ensemble(const models::ModelSpec& spec, const std::string& dir,
                               const std::string& stem, std::size_t members);

}  // namespace ecgforge::checkpoint
