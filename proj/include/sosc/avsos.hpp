#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>

#include "sosc/engine.hpp"
#include "sosc/model.hpp"
#include "sosc/protocol.hpp"

namespace sosc::avsos {

// ---- catalogue --------------------------------------------------------------

Contract leDevice();
Contract tlNominal();
Contract tlFaulty();
Contract leWrapper();
Contract streamingDevice();
Contract browsingDevice();
SoSComposition ftLeDevice();
SoSComposition avDevice(bool faultTolerant);
SoSComposition avSosNominal();        // three devices, nominal TL
SoSComposition avSosFaultTolerant();  // three FT devices, faulty TL
DependabilityModel fig4DependabilityModel();

// Everything above as one document, in the order of models/avsos.sosc.
ModelDocument catalogDocument();

ProtocolStateMachine electionProtocol();

struct WrapperParams {
  Int myId = 1;
  Int yrId = 2;
  Int maxRetries = 1;
};

// The wrapper machine with its parameters substituted.
ProtocolStateMachine wrapperProtocol(const WrapperParams& p);

// n AV devices and one TL. `faultyTl` defaults to `faultTolerant`. The
// result refers to catalogue contracts; see withCatalog().
SoSComposition buildAvSos(int n, bool faultTolerant, int maxRetries = 1,
                          std::optional<bool> faultyTl = std::nullopt);

// The catalogue document with `s` appended to its compositions.
ModelDocument withCatalog(const SoSComposition& s);

// ---- native execution model ---------------------------------------------------

struct AvSosOptions {
  bool dedup = true;
  bool dropAcks = true;
};

// Timed message-passing semantics of an AV composition: LE devices,
// optional wrappers, and a (possibly faulty) transport layer with per-stream
// FIFO queues. Built from the composition's instance tree.
class AvSosSystem : public TransitionSystem {
 public:
  AvSosSystem(const SoSComposition& s, const ModelDocument& doc, const ExecutionConfig& cfg,
              AvSosOptions opts = {});
  ~AvSosSystem() override;

  std::unique_ptr<SystemState> initial() const override;
  std::vector<Move> moves(const SystemState& s, Tick now) const override;
  void apply(SystemState& s, const Move& m, Tick now) const override;
  std::vector<std::string> instances() const override;
  bool finished(const SystemState& s) const override;

  std::size_t deviceCount() const;
  std::vector<Int> deviceIds() const;
  std::size_t wrapperCount() const;
  bool faultyTransport() const;

  // Source/sink mode: a source pushes `messages` payloads through its
  // wrapper to a sink over a faulty TL; no election. Delivery shows up as
  // LE_RecvMsgs events with "handoff" and "dup" flags.
  static std::unique_ptr<AvSosSystem> sourceSink(int maxRetries, int messages,
                                                 const ExecutionConfig& cfg, AvSosOptions opts = {});

  struct Impl;

 private:
  AvSosSystem();
  std::unique_ptr<Impl> impl_;
};

// Device id -> leader, read from leader_elected events. Devices named in
// `devices` but silent map to nullopt. Throws DuplicateDecision.
class DuplicateDecision : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
std::map<Int, std::optional<Int>> leadersOf(const Trace& trace, const std::vector<Int>& devices = {});

// ---- properties ---------------------------------------------------------------

// Every device decides, all on the same leader (and on `expected` if given).
std::unique_ptr<TraceProperty> agreementProperty(std::vector<Int> devices,
                                                 std::optional<Int> expected = std::nullopt);
// No device emits leader_elected twice.
std::unique_ptr<TraceProperty> noDuplicateDecisionProperty();
// No wrapper transmits one seq more than maxRetries + 1 times.
std::unique_ptr<TraceProperty> giveUpBoundProperty(int maxRetries);

}  // namespace sosc::avsos
