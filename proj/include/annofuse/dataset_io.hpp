#pragma once

#include <filesystem>
#include <string>

#include "annofuse/types.hpp"

namespace annofuse {

// Dataset JSON schema (one file per dataset):
//
// {
//   "sources": ["M", "S", "L"],
//   "images": [
//     {"id": "...", "width": 1280, "height": 720,
//      "raster": "optional/path.png",
//      "annotations": {"M": [{"u": 12.5, "v": 400.0, "confidence": null}, ...], ...},
//      "reference": [{"u": ..., "v": ...}, ...]}
//   ],
//   "metadata": { ... }          // optional free-form block
// }
//
// Reference annotations carry no source. In strict mode (the default) any
// unknown key is rejected; `--lenient` on the CLI disables that check.
// Canonical serialization sorts object keys, preserves annotation order,
// and renders numbers in their shortest round-trippable decimal form.

Dataset dataset_from_json(const nlohmann::json& j, bool strict = true);
nlohmann::json dataset_to_json(const Dataset& d);

Dataset load_dataset(const std::filesystem::path& path, bool strict = true);
void save_dataset(const Dataset& d, const std::filesystem::path& path);

/// Canonical serialization of a dataset as bytes (what save_dataset writes).
std::string dataset_to_string(const Dataset& d);

/// Checks every type invariant; throws InputError naming the offending
/// image id and annotation index.
void validate_dataset(const Dataset& d);

}  // namespace annofuse
