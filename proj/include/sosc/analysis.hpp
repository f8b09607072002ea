#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sosc/diagnostics.hpp"
#include "sosc/model.hpp"

namespace sosc {

struct RuleInfo {
  std::string id;
  Severity severity = Severity::Error;
  std::string description;
  std::string source;  // where the rule comes from: a modelling rule or plumbing
};

// Fixed registry of the cross-view rules checked by validateFaultModel.
const std::vector<RuleInfo>& faultModelRules();
const RuleInfo* findRule(std::string_view id);

// Consistency between contracts (mitigates, failure_modes) and the
// dependability model. Waived SOS faults produce no diagnostic; list them
// with waivedFaults().
Diagnostics validateFaultModel(const ModelDocument& doc);
std::vector<std::string> waivedFaults(const ModelDocument& doc);

struct LossReport {
  std::uint64_t messagesSent = 0;
  std::uint64_t deliveredAtLeastOnce = 0;
  double observedLossRate = 0.0;
  double predictedLossRate = 0.0;  // dropProb^(maxRetries + 1)
  std::uint64_t duplicatesDelivered = 0;  // DATA copies the receiving wrapper had already seen
  std::uint64_t seed = 0;
  double dropProb = 0.0;
  int maxRetries = 0;
};

// Pushes `messages` payloads through one wrapper pair over the faulty TL
// under PROBABILISTIC(dropProb, seed). Deterministic in its arguments.
LossReport monteCarloLoss(double dropProb, int maxRetries, std::uint64_t messages, std::uint64_t seed);

nlohmann::json toJson(const LossReport& r);

}  // namespace sosc
