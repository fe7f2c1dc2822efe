#pragma once

#include <string>

#include "pqadv/nnet.hpp"

#include "json.hpp"

namespace pqadv {

// Model file (.pqm): 8-byte magic, little-endian u64 manifest length, JSON
// manifest (specs, shapes, tensor offsets, BN state, seeds, training config),
// then all parameter tensors as one little-endian float32 blob. Parameters
// are float32-valued in memory, so save/load round-trips bit-exactly.

/// `extra` is merged into the manifest under "train" (training provenance).
void save_model(const NetworkModel& m, const std::string& path,
                const nlohmann::json& extra = nlohmann::json::object());

/// Throws IoFailure on filesystem errors, ManifestMismatch on a malformed or
/// truncated file or when declared shapes disagree with the weight blob.
NetworkModel load_model(const std::string& path, nlohmann::json* manifest_out = nullptr);

/// FNV-1a hash of the serialized manifest; recorded in experiment reports.
std::string model_manifest_hash(const std::string& path);

}  // namespace pqadv
