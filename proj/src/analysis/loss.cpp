#include <cmath>
#include <set>
#include <stdexcept>

#include "sosc/analysis.hpp"
#include "sosc/avsos.hpp"
#include "sosc/engine.hpp"

namespace sosc {

LossReport monteCarloLoss(double dropProb, int maxRetries, std::uint64_t messages, std::uint64_t seed) {
  if (messages < 1) throw std::invalid_argument("CONFIG_ERROR: messages must be >= 1");
  if (maxRetries < 0) throw std::invalid_argument("CONFIG_ERROR: maxRetries must be >= 0");

  ExecutionConfig cfg = ExecutionConfig::defaults();
  cfg.seed = seed;
  cfg.recordInternal = false;
  // Per attempt: transmit or retransmit, a delivery or drop, a TL timeout,
  // the ACK; plus the handoff and give_up. Generous on purpose.
  cfg.maxSteps = static_cast<std::size_t>(messages) * (8 * static_cast<std::size_t>(maxRetries + 1) + 4) + 64;
  auto sys = avsos::AvSosSystem::sourceSink(maxRetries, static_cast<int>(messages), cfg);

  LossReport r;
  r.seed = seed;
  r.dropProb = dropProb;
  r.maxRetries = maxRetries;
  std::set<Int> delivered;
  std::string annotation = runSimulation(*sys, FaultPolicy::probabilistic(dropProb, seed), cfg, [&](const Event& e) {
    if (e.label == "LE_SendMsgs") {
      ++r.messagesSent;
    } else if (e.label == "LE_RecvMsgs" && e.payload.value("kind", "") == "DATA") {
      if (e.payload.value("handoff", false)) delivered.insert(e.payload.at("seq").get<Int>());
      if (e.payload.value("dup", false)) ++r.duplicatesDelivered;
    }
  });
  if (annotation != "TERMINATED") throw std::logic_error("loss run ended with " + annotation);

  r.deliveredAtLeastOnce = delivered.size();
  r.observedLossRate =
      r.messagesSent ? 1.0 - static_cast<double>(r.deliveredAtLeastOnce) / static_cast<double>(r.messagesSent) : 0.0;
  r.predictedLossRate = std::pow(dropProb, maxRetries + 1);
  return r;
}

nlohmann::json toJson(const LossReport& r) {
  return {{"messagesSent", r.messagesSent},
          {"deliveredAtLeastOnce", r.deliveredAtLeastOnce},
          {"observedLossRate", r.observedLossRate},
          {"predictedLossRate", r.predictedLossRate},
          {"duplicatesDelivered", r.duplicatesDelivered},
          {"dropProb", r.dropProb},
          {"maxRetries", r.maxRetries},
          {"seed", r.seed}};
}

}  // namespace sosc
