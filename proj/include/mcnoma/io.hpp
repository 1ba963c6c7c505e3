#pragma once

#include <mcnoma/reduction.hpp>

#include <json.hpp>

#include <fstream>
#include <string>

namespace mcnoma {

using json = nlohmann::json;

namespace detail {

inline json vector_to_json(const VectorXd& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline VectorXd json_to_vector(const json& j, const std::string& key) {
  if (!j.is_array()) throw std::invalid_argument(key + ": expected an array");
  VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw std::invalid_argument(key + ": expected numbers");
    v(Index(i)) = j[i].get<double>();
  }
  return v;
}

inline json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Index k = 0; k < m.rows(); ++k) {
    json row = json::array();
    for (Index n = 0; n < m.cols(); ++n) row.push_back(m(k, n));
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Accepts either a list of rows or a flat row-major list of length K * N.
inline MatrixXd json_to_matrix(const json& j, Index rows, Index cols, const std::string& key) {
  if (!j.is_array()) throw std::invalid_argument(key + ": expected an array");
  MatrixXd m(rows, cols);
  if (!j.empty() && j[0].is_array()) {
    if (Index(j.size()) != rows) throw std::invalid_argument(key + ": wrong number of rows");
    for (Index k = 0; k < rows; ++k) {
      const json& row = j[size_t(k)];
      if (!row.is_array() || Index(row.size()) != cols)
        throw std::invalid_argument(key + ": wrong row length");
      for (Index n = 0; n < cols; ++n) {
        if (!row[size_t(n)].is_number()) throw std::invalid_argument(key + ": expected numbers");
        m(k, n) = row[size_t(n)].get<double>();
      }
    }
    return m;
  }
  if (Index(j.size()) != rows * cols)
    throw std::invalid_argument(key + ": flat array must have num_users * num_subcarriers entries");
  for (Index k = 0; k < rows; ++k)
    for (Index n = 0; n < cols; ++n) {
      const json& cell = j[size_t(k * cols + n)];
      if (!cell.is_number()) throw std::invalid_argument(key + ": expected numbers");
      m(k, n) = cell.get<double>();
    }
  return m;
}

inline const json& require(const json& j, const std::string& key) {
  auto it = j.find(key);
  if (it == j.end()) throw std::invalid_argument("missing key: " + key);
  return *it;
}

}  // namespace detail

inline json mean_order_to_json(const MeanOrder& order) {
  if (order.is_minus_infinity()) return "-inf";
  return order.value();
}

inline MeanOrder mean_order_from_json(const json& j) {
  if (j.is_string()) return mean_order_from_string(j.get<std::string>());
  if (j.is_number()) return MeanOrder(j.get<double>());
  throw std::invalid_argument("mean_order: expected a number or \"-inf\"");
}

inline json instance_to_json(const Instance<double>& inst) {
  json j;
  j["num_users"] = inst.num_users;
  j["num_subcarriers"] = inst.num_subcarriers;
  j["max_multiplexed"] = inst.max_multiplexed;
  j["direction"] = to_string(inst.direction);
  j["mean_order"] = mean_order_to_json(inst.mean_order);
  j["bandwidths"] = detail::vector_to_json(inst.bandwidths);
  j["gains"] = detail::matrix_to_json(inst.gains);
  j["noises"] = detail::matrix_to_json(inst.noises);
  j["per_subcarrier_caps"] = detail::matrix_to_json(inst.per_subcarrier_caps);
  j["user_budgets"] = detail::vector_to_json(inst.user_budgets);
  j["weights"] = detail::vector_to_json(inst.weights);
  return j;
}

inline Instance<double> instance_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("instance: expected an object");
  Instance<double> inst;
  inst.num_users = detail::require(j, "num_users").get<Index>();
  inst.num_subcarriers = detail::require(j, "num_subcarriers").get<Index>();
  if (inst.num_users < 1 || inst.num_subcarriers < 1)
    throw std::invalid_argument("instance: num_users and num_subcarriers must be positive");
  inst.max_multiplexed = detail::require(j, "max_multiplexed").get<Index>();
  inst.direction = direction_from_string(detail::require(j, "direction").get<std::string>());
  inst.mean_order = mean_order_from_json(detail::require(j, "mean_order"));
  inst.bandwidths = detail::json_to_vector(detail::require(j, "bandwidths"), "bandwidths");
  inst.gains = detail::json_to_matrix(detail::require(j, "gains"), inst.num_users,
                                      inst.num_subcarriers, "gains");
  inst.noises = detail::json_to_matrix(detail::require(j, "noises"), inst.num_users,
                                       inst.num_subcarriers, "noises");
  inst.per_subcarrier_caps = detail::json_to_matrix(detail::require(j, "per_subcarrier_caps"),
                                                    inst.num_users, inst.num_subcarriers,
                                                    "per_subcarrier_caps");
  inst.user_budgets = detail::json_to_vector(detail::require(j, "user_budgets"), "user_budgets");
  inst.weights = detail::json_to_vector(detail::require(j, "weights"), "weights");
  inst.validate();
  return inst;
}

inline json threedm_to_json(const ThreeDM& x) {
  json j;
  j["size"] = x.size;
  json trips = json::array();
  for (const auto& t : x.triplets) trips.push_back({t[0], t[1], t[2]});
  j["triplets"] = std::move(trips);
  return j;
}

inline ThreeDM threedm_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("3dm: expected an object");
  ThreeDM x;
  x.size = detail::require(j, "size").get<int>();
  const json& trips = detail::require(j, "triplets");
  if (!trips.is_array()) throw std::invalid_argument("triplets: expected an array");
  for (const json& t : trips) {
    if (!t.is_array() || t.size() != 3)
      throw std::invalid_argument("triplets: each entry must have three coordinates");
    x.triplets.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<int>()});
  }
  x.validate();
  return x;
}

inline json matching_to_json(const Matching& m) {
  json a = json::array();
  for (int idx : m.triplet_indices) a.push_back(idx);
  return a;
}

inline json solve_result_to_json(const SolveResult<double>& result) {
  json j;
  j["solver"] = result.solver;
  j["status"] = to_string(result.status);
  j["utility"] = result.utility;
  j["iterations"] = result.iterations;
  j["powers"] = detail::matrix_to_json(result.allocation.powers);
  j["rates_per_user"] = detail::vector_to_json(result.rates.per_user);
  j["rates_per_subcarrier"] = detail::vector_to_json(result.rates.per_subcarrier);
  json diag = json::object();
  for (const auto& [key, value] : result.diagnostics) diag[key] = value;
  j["diagnostics"] = std::move(diag);
  return j;
}

inline json artifact_to_json(const ReductionArtifact& art) {
  json j;
  j["source"] = threedm_to_json(art.source);
  j["instance"] = instance_to_json(art.instance);
  j["threshold"] = art.threshold;
  j["m"] = art.m;
  j["trivially_no"] = art.trivially_no;
  j["triplet_user_offset"] = art.triplet_user_offset;
  json subs = json::array();
  for (const auto& label : art.subcarrier_labels)
    subs.push_back({{"kind", to_string(label.kind)}, {"element", label.element}});
  j["subcarriers"] = std::move(subs);
  json users = json::array();
  for (const auto& label : art.user_labels) {
    json u;
    if (label.kind == UserKind::triplet) {
      u["kind"] = "triplet";
      u["triplet"] = label.triplet_index;
    } else {
      u["kind"] = "dummy";
      u["host_subcarrier"] = label.host_subcarrier;
      u["rank"] = label.rank;
    }
    users.push_back(std::move(u));
  }
  j["users"] = std::move(users);
  return j;
}

inline ReductionArtifact artifact_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("artifact: expected an object");
  ReductionArtifact art;
  art.source = threedm_from_json(detail::require(j, "source"));
  art.instance = instance_from_json(detail::require(j, "instance"));
  art.threshold = detail::require(j, "threshold").get<double>();
  art.m = detail::require(j, "m").get<int>();
  art.trivially_no = detail::require(j, "trivially_no").get<bool>();
  art.triplet_user_offset = detail::require(j, "triplet_user_offset").get<Index>();
  for (const json& s : detail::require(j, "subcarriers")) {
    const std::string kind = detail::require(s, "kind").get<std::string>();
    SubcarrierLabel label;
    if (kind == "x") label.kind = SubcarrierKind::x_primary;
    else if (kind == "y") label.kind = SubcarrierKind::y_primary;
    else if (kind == "z") label.kind = SubcarrierKind::z_primary;
    else if (kind == "residual") label.kind = SubcarrierKind::residual;
    else throw std::invalid_argument("subcarriers: unknown kind " + kind);
    label.element = detail::require(s, "element").get<int>();
    art.subcarrier_labels.push_back(label);
  }
  for (const json& u : detail::require(j, "users")) {
    const std::string kind = detail::require(u, "kind").get<std::string>();
    UserLabel label;
    if (kind == "triplet") {
      label.kind = UserKind::triplet;
      label.triplet_index = detail::require(u, "triplet").get<int>();
    } else if (kind == "dummy") {
      label.kind = UserKind::dummy;
      label.host_subcarrier = detail::require(u, "host_subcarrier").get<Index>();
      label.rank = detail::require(u, "rank").get<int>();
    } else {
      throw std::invalid_argument("users: unknown kind " + kind);
    }
    art.user_labels.push_back(label);
  }
  if (Index(art.subcarrier_labels.size()) != art.instance.num_subcarriers ||
      Index(art.user_labels.size()) != art.instance.num_users)
    throw std::invalid_argument("artifact: label lists do not match the instance shape");
  return art;
}

inline json report_to_json(const EquivalenceReport& report) {
  json j;
  j["m"] = report.m;
  j["direction"] = to_string(report.direction);
  j["threshold"] = report.threshold;
  j["matching_exists"] = report.matching_exists;
  j["opt_sum_rate"] = report.opt_sum_rate;
  j["gap"] = report.gap;
  j["rates_all_equal"] = report.rates_all_equal;
  j["states"] = report.states;
  j["pass"] = report.pass;
  json per_order = json::object();
  json order_rows = json::array();
  for (const auto& outcome : report.per_order) {
    per_order[to_string(outcome.order)] = outcome.value;
    order_rows.push_back({{"order", to_string(outcome.order)},
                          {"value", outcome.value},
                          {"exact", outcome.exact},
                          {"upper_bound", outcome.upper_bound},
                          {"decision", outcome.decision}});
  }
  j["opt_per_order"] = std::move(per_order);
  j["orders"] = std::move(order_rows);
  if (report.recovered) j["recovered_matching"] = matching_to_json(*report.recovered);
  else j["recovered_matching"] = nullptr;
  j["rates_per_user"] = detail::vector_to_json(report.user_rates);
  return j;
}

inline json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return j;
}

inline void save_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

}  // namespace mcnoma
