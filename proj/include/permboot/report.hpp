#pragma once

#include "permboot/verify.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace permboot {

// Config documents are described by docs/config.schema.json. Unknown keys
// are rejected.
[[nodiscard]] ExperimentConfig config_from_json(const nlohmann::json& j);
[[nodiscard]] ExperimentConfig parse_config(const std::string& text);
[[nodiscard]] nlohmann::json config_to_json(const ExperimentConfig& config);

[[nodiscard]] nlohmann::json law_to_json(const Law& law);
[[nodiscard]] Law law_from_json(const nlohmann::json& j);

// Runtime is left out so that reports are reproducible byte for byte.
[[nodiscard]] nlohmann::json report_to_json(const VerifyReport& report);
[[nodiscard]] nlohmann::json report_to_json(const LinearizationReport& report);
[[nodiscard]] nlohmann::json comparison_to_json(const ComparisonResult& cmp);

// Two-space indented, trailing newline.
[[nodiscard]] std::string dump_json(const nlohmann::json& j);

// Symmetric matrix of mean kernel ("kernel") or mean estimate ("estimate").
[[nodiscard]] Eigen::MatrixXd comparison_matrix(const ComparisonResult& cmp,
                                                const std::string& field);
// Header row "label,<labels...>", then one row per label.
[[nodiscard]] std::string matrix_csv(const std::vector<std::string>& labels,
                                     const Eigen::MatrixXd& m);

}  // namespace permboot
