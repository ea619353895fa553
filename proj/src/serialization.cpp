#include "fomc/serialization.hpp"

#include <fstream>

#include "fomc/errors.hpp"

namespace fomc {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || !data.is_array() ||
      data.size() != static_cast<std::size_t>(rows * cols)) {
    throw InvalidArgument("matrix: data length does not match rows * cols");
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data[k++].get<double>();
  }
  return m;
}

json model_to_json(const DiscreteLtiModel& model) {
  return json{{"A", matrix_to_json(model.A)},
              {"B", matrix_to_json(model.B)},
              {"G", matrix_to_json(model.G)},
              {"C", matrix_to_json(model.C)},
              {"Cd", matrix_to_json(model.Cd)},
              {"step", model.step},
              {"memory", model.memory},
              {"block_dim", model.block_dim},
              {"state_blocks", model.state_blocks}};
}

DiscreteLtiModel model_from_json(const json& j) {
  DiscreteLtiModel m;
  try {
    m.A = matrix_from_json(j.at("A"));
    m.B = matrix_from_json(j.at("B"));
    m.G = matrix_from_json(j.at("G"));
    m.C = matrix_from_json(j.at("C"));
    m.Cd = matrix_from_json(j.at("Cd"));
    m.step = j.at("step").get<double>();
    m.memory = j.at("memory").get<int>();
    m.block_dim = j.at("block_dim").get<int>();
    m.state_blocks = j.at("state_blocks").get<int>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("model: ") + e.what());
  }
  const auto n = m.A.rows();
  if (m.A.cols() != n || m.B.rows() != n || m.G.rows() != n || m.C.cols() != n ||
      m.Cd.rows() != m.C.rows() || m.Cd.cols() != m.G.cols()) {
    throw InvalidArgument("model: inconsistent matrix dimensions");
  }
  return m;
}

void save_model(const DiscreteLtiModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << model_to_json(model).dump(2) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

DiscreteLtiModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace fomc
