#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <filesystem>

#include "fomc/model_builder.hpp"

namespace fomc {

/// Dense matrices are stored as {"rows", "cols", "data"} with data row-major.
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const DiscreteLtiModel& model);
DiscreteLtiModel model_from_json(const nlohmann::json& j);

void save_model(const DiscreteLtiModel& model, const std::filesystem::path& path);
DiscreteLtiModel load_model(const std::filesystem::path& path);

}  // namespace fomc
