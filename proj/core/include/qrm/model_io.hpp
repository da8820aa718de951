#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <json.hpp>

#include "qrm/examples.hpp"
#include "qrm/model.hpp"

namespace qrm {

using Json = nlohmann::json;

// Dense complex matrices are encoded as nested arrays of [re, im] pairs,
// row by row: [[[re,im], ...], ...].
Json matrix_to_json(const CMat& m);
CMat matrix_from_json(const Json& j);

Json model_to_json(const QrmModel& model);
QrmModel model_from_json(const Json& j);

QrmModel load_model_file(const std::string& path);

/// Named presets with string overrides (e.g. {"u", "0.5"}, {"t_a", "0.8"}).
/// Known presets: "three-qubit", "qubit-n-qubit".
QrmModel preset_model(const std::string& name,
                      const std::map<std::string, std::string>& overrides = {});
ThreeQubitParams three_qubit_preset(const std::map<std::string, std::string>& overrides = {});
QubitNQubitParams qubit_n_qubit_preset(const std::map<std::string, std::string>& overrides = {});

/// FNV-1a hash of the canonical JSON serialization; stamped in output headers.
std::uint64_t model_hash(const QrmModel& model);

}  // namespace qrm
