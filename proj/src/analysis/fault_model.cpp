#include <algorithm>
#include <map>
#include <set>

#include "sosc/analysis.hpp"
#include "sosc/validate.hpp"

namespace sosc {

const std::vector<RuleInfo>& faultModelRules() {
  static const std::vector<RuleInfo> rules = {
      {"UNMITIGATED_SOS_FAULT", Severity::Error,
       "an SOS-level fault has no MITIGATED_BY edge and is not waived",
       "modelling rule: every identified SoS fault is handled"},
      {"MITIGATES_TAG_MISMATCH", Severity::Error,
       "a contract's mitigates tag and the MITIGATED_BY edges disagree",
       "modelling rule: mitigates tags and MITIGATED_BY edges describe one relation"},
      {"FMCV_FEFDV_INCONSISTENT", Severity::Error,
       "a contract's failure_modes and the EXHIBITED_BY edges of failures disagree",
       "modelling rule: a single definition of each failure across views"},
      {"DANGLING_DYSFUNCTION_REF", Severity::Error,
       "a contract names a dysfunction that is missing or of the wrong kind",
       "plumbing: reference resolution"},
      {"CAUSAL_CHAIN_VIOLATION", Severity::Error,
       "a CAUSES edge goes against the fault -> error -> failure -> fault chain",
       "modelling rule: dependability taxonomy"},
  };
  return rules;
}

const RuleInfo* findRule(std::string_view id) {
  for (const auto& r : faultModelRules())
    if (r.id == id) return &r;
  return nullptr;
}

std::vector<std::string> waivedFaults(const ModelDocument& doc) {
  std::vector<std::string> out;
  if (!doc.dependability) return out;
  for (const auto& f : doc.dependability->faults)
    if (f.waived) out.push_back(f.id);
  return out;
}

namespace {

bool lists(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

Diagnostics validateFaultModel(const ModelDocument& doc) {
  Diagnostics out;
  for (auto& d : validateStructure(doc)) {
    if (d.rule == "DANGLING_DYSFUNCTION_REF" || d.rule == "CAUSAL_CHAIN_VIOLATION") out.push_back(std::move(d));
  }
  auto add = [&](std::string id, std::string rule, std::string msg) {
    out.push_back({std::move(id), std::move(rule), Severity::Error, std::move(msg), std::nullopt});
  };

  static const DependabilityModel empty;
  const DependabilityModel& dep = doc.dependability ? *doc.dependability : empty;
  const auto& edges = dep.edges;

  // Faults that are already reported as unmitigated; a one-sided tag on
  // them would only repeat the same finding.
  std::set<std::string> unmitigated;
  for (const auto& f : dep.faults) {
    if (f.level != Level::SOS || f.waived) continue;
    bool covered = std::any_of(edges.begin(), edges.end(), [&](const DependabilityEdge& e) {
      return e.relation == Relation::MitigatedBy && e.from == f.id;
    });
    if (covered) continue;
    unmitigated.insert(f.id);
    add(element::dysfunction(f.id), "UNMITIGATED_SOS_FAULT",
        "SOS fault '" + f.id + "' has no MITIGATED_BY edge and is not waived");
  }

  // mitigates: tag side then edge side, one diagnostic per asymmetric pair.
  std::set<std::pair<std::string, std::string>> edgePairs, tagPairs;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges[i].relation == Relation::MitigatedBy) edgePairs.insert({edges[i].from, edges[i].to});
  }
  for (const auto& c : doc.contracts)
    for (const auto& f : c.mitigates) tagPairs.insert({f, c.name});

  for (const auto& c : doc.contracts) {
    for (const auto& f : c.mitigates) {
      if (edgePairs.contains({f, c.name}) || unmitigated.contains(f)) continue;
      if (!dep.find(f)) continue;  // dangling, reported above
      add(element::contract(c.name), "MITIGATES_TAG_MISMATCH",
          "contract '" + c.name + "' declares mitigates " + f + " but there is no MITIGATED_BY " + f + " -> " +
              c.name + " edge");
    }
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    if (e.relation != Relation::MitigatedBy || tagPairs.contains({e.from, e.to})) continue;
    if (!doc.findContract(e.to)) continue;  // mitigation by a composition has no tag to compare
    add(element::edge(i), "MITIGATES_TAG_MISMATCH",
        "edge MITIGATED_BY " + e.from + " -> " + e.to + " has no matching 'mitigates " + e.from +
            "' tag on contract '" + e.to + "'");
  }

  // failure_modes against EXHIBITED_BY edges of failures.
  std::set<std::pair<std::string, std::string>> exhibited;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    DysfunctionKind kind{};
    if (e.relation != Relation::ExhibitedBy || !dep.find(e.from, &kind) || kind != DysfunctionKind::Failure)
      continue;
    exhibited.insert({e.from, e.to});
    const Contract* c = doc.findContract(e.to);
    if (c && !lists(c->failureModes, e.from)) {
      add(element::edge(i), "FMCV_FEFDV_INCONSISTENT",
          "failure '" + e.from + "' is exhibited by '" + e.to + "' but that contract does not list it in failure_modes");
    }
  }
  for (const auto& c : doc.contracts) {
    for (const auto& f : c.failureModes) {
      DysfunctionKind kind{};
      if (!dep.find(f, &kind) || kind != DysfunctionKind::Failure) continue;  // dangling, reported above
      if (exhibited.contains({f, c.name})) continue;
      add(element::contract(c.name), "FMCV_FEFDV_INCONSISTENT",
          "contract '" + c.name + "' lists failure mode " + f + " but there is no EXHIBITED_BY " + f + " -> " +
              c.name + " edge");
    }
  }

  attachSpans(out, doc);
  return out;
}

}  // namespace sosc
