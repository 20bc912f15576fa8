#pragma once

#include <string>

#include "r2x/planner.hpp"

namespace r2x {

// Plan procurement. The endpoint picks the transport:
//   ""             built-in deterministic planner, in process
//   http(s)://...  POST the request document, the response body is the plan
//   cmd:<path>     one-shot subprocess, request on stdin, plan on stdout
struct PlannerConfig {
  std::string endpoint;
  std::string api_key;  // sent as a bearer token over http
  int max_nodes{32};
  int retries{2};  // extra attempts after a transport failure
};

// Applies R2X_PLANNER_ENDPOINT and R2X_PLANNER_API_KEY when set.
PlannerConfig planner_config_from_env(PlannerConfig base);

class PlannerClient {
 public:
  explicit PlannerClient(PlannerConfig cfg) : cfg_(std::move(cfg)) {}

  // Never throws for plan-level problems. Transport failures are retried
  // cfg.retries times and then surface as !ok with an error starting
  // "transport:"; an unparseable response comes back as "schema:".
  PlanOutcome request_plan(const SemanticState& s, const GoalCondition& goal,
                           const GridWorld& map, const std::string& task);

  const PlannerConfig& config() const { return cfg_; }

 private:
  std::string transport_once(const std::string& prompt);  // throws TransportError
  PlannerConfig cfg_;
};

}  // namespace r2x
