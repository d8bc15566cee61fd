#pragma once

// JSON form of a transport solution.

#include <json.hpp>

#include "wbound/transport.hpp"

namespace wbound {

inline nlohmann::json solution_to_json(const TransportSolution& sol, const CostSpec& cost) {
  nlohmann::json plan = nlohmann::json::array();
  for (const auto& e : sol.plan) plan.push_back({{"source", e.source}, {"target", e.target}, {"mass", e.mass}});
  nlohmann::json j{{"value", sol.value},
                   {"p", cost.p},
                   {"metric", to_string(cost.metric)},
                   {"scale", cost.scale},
                   {"plan", plan},
                   {"u", sol.u},
                   {"v", sol.v},
                   {"certificate",
                    {{"primal", sol.certificate.primal},
                     {"dual", sol.certificate.dual},
                     {"gap", sol.certificate.gap},
                     {"iterations", sol.certificate.iterations},
                     {"optimal", sol.certificate.optimal}}}};
  if (cost.box) j["box"] = {{"origin", std::vector<double>(cost.box->origin().begin(), cost.box->origin().end())}, {"side", cost.box->side()}};
  return j;
}

inline TransportSolution solution_from_json(const nlohmann::json& j) {
  TransportSolution sol;
  sol.value = j.at("value").get<double>();
  for (const auto& e : j.at("plan"))
    sol.plan.push_back({e.at("source").get<std::size_t>(), e.at("target").get<std::size_t>(), e.at("mass").get<double>()});
  sol.u = j.at("u").get<std::vector<double>>();
  sol.v = j.at("v").get<std::vector<double>>();
  const auto& c = j.at("certificate");
  sol.certificate.primal = c.value("primal", sol.value);
  sol.certificate.dual = c.value("dual", sol.value);
  sol.certificate.gap = c.at("gap").get<double>();
  sol.certificate.iterations = c.at("iterations").get<decltype(sol.certificate.iterations)>();
  sol.certificate.optimal = c.value("optimal", true);
  return sol;
}

}  // namespace wbound
