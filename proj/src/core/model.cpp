#include "sosc/model.hpp"

namespace sosc {

std::string Transition::traceLabel() const {
  if (trigger.kind == TriggerKind::Completion) return "tau";
  return trigger.label;
}

bool operator==(const State& a, const State& b) {
  return a.name == b.name && a.kind == b.kind && a.initial == b.initial && a.regions == b.regions;
}

bool operator==(const Region& a, const Region& b) {
  return a.name == b.name && a.states == b.states;
}

const Dysfunction* DependabilityModel::find(std::string_view id, DysfunctionKind* kind) const {
  auto scan = [&](const std::vector<Dysfunction>& v, DysfunctionKind k) -> const Dysfunction* {
    for (const auto& d : v) {
      if (d.id == id) {
        if (kind) *kind = k;
        return &d;
      }
    }
    return nullptr;
  };
  if (auto* d = scan(faults, DysfunctionKind::Fault)) return d;
  if (auto* d = scan(errors, DysfunctionKind::Error)) return d;
  return scan(failures, DysfunctionKind::Failure);
}

const Contract* ModelDocument::findContract(std::string_view name) const {
  for (const auto& c : contracts) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const SoSComposition* ModelDocument::findComposition(std::string_view name) const {
  for (const auto& s : compositions) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

bool operator==(const ModelDocument& a, const ModelDocument& b) {
  return a.contracts == b.contracts && a.compositions == b.compositions &&
         a.dependability == b.dependability;
}

std::string_view toString(Level l) { return l == Level::CS ? "CS" : "SOS"; }

std::string_view toString(Persistence p) {
  switch (p) {
    case Persistence::Transient:
      return "TRANSIENT";
    case Persistence::Permanent:
      return "PERMANENT";
    case Persistence::Unspecified:
      return "UNSPECIFIED";
  }
  return "UNSPECIFIED";
}

std::string_view toString(Relation r) {
  switch (r) {
    case Relation::Causes:
      return "causes";
    case Relation::LocatedIn:
      return "located_in";
    case Relation::Affects:
      return "affects";
    case Relation::ExhibitedBy:
      return "exhibited_by";
    case Relation::MitigatedBy:
      return "mitigated_by";
  }
  return "causes";
}

std::string_view toString(DysfunctionKind k) {
  switch (k) {
    case DysfunctionKind::Fault:
      return "fault";
    case DysfunctionKind::Error:
      return "error";
    case DysfunctionKind::Failure:
      return "failure";
  }
  return "fault";
}

namespace element {
std::string contract(std::string_view name) { return "contract:" + std::string(name); }
std::string composition(std::string_view name) { return "sos:" + std::string(name); }
std::string dysfunction(std::string_view id) { return "dysfunction:" + std::string(id); }
std::string edge(std::size_t index) { return "edge:" + std::to_string(index); }
}  // namespace element

}  // namespace sosc
