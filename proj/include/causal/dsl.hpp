// dsl.hpp - Reading and writing model documents.
//
// Two formats are supported: the line-oriented `.cdag` DSL meant for human
// review, and JSON for machine interchange. Both round-trip field-for-field.
//
//   model "motor" {
//     assume PK2 "MechFault -> Q: fan damage limits airflow."
//     node MechFault { kind: latent, traces: [PK2, PK3] }
//     edge MechFault -> Q { traces: [PK2], mechanism: "airflow" }
//     disturbance U_T -> T_s { traces: [PK5] }
//     mechanism Q = linear_gaussian { intercept: 0, noise_sd: 0.5, weights: { MechFault: -2 } }
//     independence ID5 { x: V_s, y: T_E, given: [] }
//   }
#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "causal/model.hpp"

namespace causal
{

enum class Format { dsl, json };

/// Parses DSL text. Throws ModelError with line/column on failure.
ModelDocument parse_model(std::string_view source);

/// Parses the JSON interchange form. Throws ModelError on failure.
ModelDocument parse_model_json(std::string_view source);

/// Dispatches on the first non-blank character: '{' selects JSON.
ModelDocument parse_model_any(std::string_view source);

std::string serialize(const ModelDocument & doc, Format format);

nlohmann::json to_json(const ModelDocument & doc);
ModelDocument from_json(const nlohmann::json & j);

ModelDocument load_model_file(const std::string & path);

}  // namespace causal
