#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sosc/model.hpp"
#include "sosc/protocol.hpp"
#include "sosc/validate.hpp"

namespace sosc {

using LabelTrace = std::vector<std::string>;

struct TraceSet {
  std::size_t depth = 0;
  std::set<std::string> alphabet;
  std::set<LabelTrace> traces;  // prefix-closed, always holds the empty trace
};

class StateExplosion : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AlphabetMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Something whose traces can be enumerated: a contract (one leaf) or an
// expanded composition. Leaves point into the caller's model objects.
struct Subject {
  std::string name;
  FlatComposition flat;
  std::set<std::string> alphabet;
};

Subject subjectOf(const Contract& c, const ParamBindings& params = {});
Subject subjectOf(const SoSComposition& s, const ModelDocument& doc, const ParamBindings& params = {});

// Impl label -> contract label, or nullopt to hide it.
using Renaming = std::map<std::string, std::optional<std::string>, std::less<>>;

struct TraceOptions {
  std::size_t stateCap = 1'000'000;
  std::vector<Int> payloadDomain = {0, 1, 2, 3};
  // Applied to every visible label; hidden labels become internal steps.
  std::optional<Renaming> renaming;
};

// Visible traces of length <= depth. Throws StateExplosion once more than
// `stateCap` configurations have been explored.
TraceSet computeTraces(const Subject& s, std::size_t depth, bool injection,
                       const TraceOptions& opts = {});
TraceSet computeTraces(const Contract& c, std::size_t depth, bool injection,
                       const ParamBindings& params = {});

struct ConformanceReport {
  std::string subject;
  std::string contract;
  std::size_t depth = 0;
  bool conforms = true;
  std::optional<LabelTrace> witness;  // shortest, then lexicographically first
};

struct RefinementOptions {
  // Missing entries: identity on labels the contract knows, hidden otherwise.
  Renaming renaming;
  bool implInjection = true;
  bool contractInjection = true;
  std::size_t stateCap = 1'000'000;
  std::vector<Int> payloadDomain = {0, 1, 2, 3};
};

// Bounded trace inclusion. Throws AlphabetMismatch ("ALPHABET_MISMATCH: ...")
// when an explicit mapping targets a label outside the contract alphabet.
ConformanceReport refines(const Subject& impl, const Subject& contract, std::size_t depth,
                          const RefinementOptions& opts = {});

nlohmann::json toJson(const ConformanceReport& r);

}  // namespace sosc
