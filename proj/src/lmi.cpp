#include "swc/lmi.hpp"

#include <json.hpp>

#include <cmath>
#include <stdexcept>

namespace swc::sdp {

namespace {

double max_block_norm(const LmiBlock& block) {
  double m = block.constant.size() ? block.constant.norm() : 0.0;
  for (const auto& [var, coeff] : block.coeffs) m = std::max(m, coeff.norm());
  return m;
}

void check_symmetric(const Matrix& m, const char* what) {
  double scale = std::max(1.0, m.norm());
  if ((m - m.transpose()).norm() > 1e-12 * scale)
    throw std::invalid_argument(std::string(what) + " matrix is not symmetric");
}

} // namespace

double LmiBlock::strictness_margin() const {
  if (!strict_ineq) return 0.0;
  if (margin >= 0.0) return margin;
  return 1e-7 * (1.0 + max_block_norm(*this));
}

Matrix LmiBlock::evaluate_canonical(const Vector& point) const {
  Matrix m = constant;
  for (const auto& [var, coeff] : coeffs) m += point(var) * coeff;
  if (sense == BlockSense::NSD) m = -m;
  if (strict_ineq) m.diagonal().array() -= strictness_margin();
  return m;
}

void SdpProblem::validate() const {
  if (n_vars < 1) throw std::invalid_argument("problem has no variables");
  if (objective.size() != n_vars)
    throw std::invalid_argument("objective length does not match n_vars");
  if (blocks.empty()) throw std::invalid_argument("problem has no blocks");
  if (!var_names.empty() && static_cast<int>(var_names.size()) != n_vars)
    throw std::invalid_argument("var_names length does not match n_vars");
  for (const auto& block : blocks) {
    if (block.dim < 1) throw std::invalid_argument("block dimension < 1");
    if (block.constant.rows() != block.dim || block.constant.cols() != block.dim)
      throw std::invalid_argument("block constant has wrong dimensions");
    check_symmetric(block.constant, "block constant");
    for (const auto& [var, coeff] : block.coeffs) {
      if (var < 0 || var >= n_vars)
        throw std::invalid_argument("block references variable out of range");
      if (coeff.rows() != block.dim || coeff.cols() != block.dim)
        throw std::invalid_argument("block coefficient has wrong dimensions");
      check_symmetric(coeff, "block coefficient");
    }
  }
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& rows) {
  const auto nr = rows.size();
  if (nr == 0) return Matrix(0, 0);
  const auto nc = rows.at(0).size();
  Matrix m(nr, nc);
  for (std::size_t i = 0; i < nr; ++i) {
    if (rows.at(i).size() != nc)
      throw std::invalid_argument("ragged matrix in JSON");
    for (std::size_t j = 0; j < nc; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows.at(i).at(j).get<double>();
  }
  return m;
}

} // namespace

std::string to_json(const SdpProblem& problem) {
  nlohmann::json j;
  j["n_vars"] = problem.n_vars;
  j["objective"] = std::vector<double>(
      problem.objective.data(), problem.objective.data() + problem.objective.size());
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& block : problem.blocks) {
    nlohmann::json b;
    b["dim"] = block.dim;
    b["constant"] = matrix_to_json(block.constant);
    nlohmann::json coeffs = nlohmann::json::array();
    for (const auto& [var, coeff] : block.coeffs)
      coeffs.push_back({{"var", var}, {"matrix", matrix_to_json(coeff)}});
    b["coeffs"] = std::move(coeffs);
    b["sense"] = block.sense == BlockSense::PSD ? "PSD" : "NSD";
    b["strict"] = block.strict_ineq;
    if (block.margin >= 0.0) b["margin"] = block.margin;
    blocks.push_back(std::move(b));
  }
  j["blocks"] = std::move(blocks);
  if (!problem.var_names.empty()) j["var_names"] = problem.var_names;
  return j.dump(2);
}

SdpProblem problem_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  SdpProblem problem;
  problem.n_vars = j.at("n_vars").get<int>();
  auto obj = j.at("objective").get<std::vector<double>>();
  problem.objective = Eigen::Map<const Vector>(obj.data(), obj.size());
  for (const auto& b : j.at("blocks")) {
    LmiBlock block;
    block.dim = b.at("dim").get<int>();
    block.constant = matrix_from_json(b.at("constant"));
    for (const auto& c : b.at("coeffs"))
      block.coeffs.emplace_back(c.at("var").get<int>(),
                                matrix_from_json(c.at("matrix")));
    block.sense =
        b.at("sense").get<std::string>() == "NSD" ? BlockSense::NSD : BlockSense::PSD;
    block.strict_ineq = b.at("strict").get<bool>();
    if (b.contains("margin")) block.margin = b.at("margin").get<double>();
    problem.blocks.push_back(std::move(block));
  }
  if (j.contains("var_names"))
    problem.var_names = j.at("var_names").get<std::vector<std::string>>();
  problem.validate();
  return problem;
}

} // namespace swc::sdp
