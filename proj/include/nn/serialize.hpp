#pragma once

#include <string>

#include "nn/model.hpp"

namespace nn {

// JSON schema "countlab-model-v1"; see README for the field list. Doubles are
// written with shortest round-trip formatting, so save/load is bit-exact for
// finite values.
std::string model_to_json(const TransformerModel& model);
TransformerModel model_from_json(const std::string& text); // throws on schema mismatch

void save_model(const TransformerModel& model, const std::string& path);
TransformerModel load_model(const std::string& path);

} // namespace nn
