#include <algorithm>
#include <deque>
#include <map>

#include "sosc/conformance.hpp"
#include "sosc/engine.hpp"

namespace sosc {

namespace {

using StateSet = std::map<std::string, std::unique_ptr<SystemState>>;

std::optional<std::string> rename(const TraceOptions& opts, const std::string& label) {
  if (!opts.renaming) return label;
  auto it = opts.renaming->find(label);
  if (it == opts.renaming->end()) return label;
  return it->second;
}

class Enumerator {
 public:
  Enumerator(const ProductSystem& sys, bool injection, const TraceOptions& opts)
      : sys_(sys), injection_(injection), opts_(opts) {}

  // Closes `set` under internal and hidden moves.
  void close(StateSet& set) {
    std::deque<const SystemState*> work;
    for (const auto& [k, s] : set) work.push_back(s.get());
    while (!work.empty()) {
      const SystemState* s = work.front();
      work.pop_front();
      for (const Move& m : sys_.moves(*s, 0)) {
        if (m.error && !injection_) continue;
        if (m.visibility == Visibility::Visible && rename(opts_, m.label)) continue;
        auto next = s->clone();
        sys_.apply(*next, m, 0);
        std::string key = next->encode(0);
        if (set.contains(key)) continue;
        count();
        auto [it, ok] = set.emplace(std::move(key), std::move(next));
        work.push_back(it->second.get());
      }
    }
  }

  // Successor sets per visible (renamed) label, each closed.
  std::map<std::string, StateSet> successors(const StateSet& set) {
    std::map<std::string, StateSet> out;
    for (const auto& [k, s] : set) {
      for (const Move& m : sys_.moves(*s, 0)) {
        if (m.error && !injection_) continue;
        if (m.visibility != Visibility::Visible) continue;
        auto label = rename(opts_, m.label);
        if (!label) continue;
        auto next = s->clone();
        sys_.apply(*next, m, 0);
        std::string key = next->encode(0);
        StateSet& target = out[*label];
        if (target.contains(key)) continue;
        count();
        target.emplace(std::move(key), std::move(next));
      }
    }
    for (auto& [label, target] : out) close(target);
    return out;
  }

  void count() {
    if (++explored_ > opts_.stateCap) {
      throw StateExplosion("STATE_EXPLOSION: more than " + std::to_string(opts_.stateCap) +
                           " configurations explored");
    }
  }

 private:
  const ProductSystem& sys_;
  bool injection_;
  const TraceOptions& opts_;
  std::size_t explored_ = 0;
};

}  // namespace

Subject subjectOf(const Contract& c, const ParamBindings& params) {
  Subject s;
  s.name = c.name;
  s.flat.leaves.push_back({c.name, &c, params});
  s.alphabet = CompiledProtocol::forContract(c, params).alphabet();
  return s;
}

Subject subjectOf(const SoSComposition& comp, const ModelDocument& doc, const ParamBindings& params) {
  Subject s;
  s.name = comp.name;
  s.flat = instantiate(comp, doc, params);
  for (const auto& leaf : s.flat.leaves) {
    auto alpha = CompiledProtocol::forContract(*leaf.contract, leaf.params).alphabet();
    s.alphabet.insert(alpha.begin(), alpha.end());
  }
  return s;
}

TraceSet computeTraces(const Subject& subject, std::size_t depth, bool injection,
                       const TraceOptions& opts) {
  if (depth == 0) throw std::invalid_argument("depth must be positive");
  ProductSystem sys(subject.flat, opts.payloadDomain);
  Enumerator en(sys, injection, opts);

  TraceSet out;
  out.depth = depth;
  for (const auto& l : subject.alphabet) {
    if (auto r = rename(opts, l)) out.alphabet.insert(*r);
  }

  StateSet start;
  auto init = sys.initial();
  std::string key = init->encode(0);
  start.emplace(std::move(key), std::move(init));
  en.close(start);

  // Depth-first over visible traces; each prefix carries its state set.
  struct Item {
    LabelTrace trace;
    StateSet states;
  };
  std::vector<Item> stack;
  stack.push_back({{}, std::move(start)});
  while (!stack.empty()) {
    Item item = std::move(stack.back());
    stack.pop_back();
    out.traces.insert(item.trace);
    if (item.trace.size() >= depth) continue;
    for (auto& [label, states] : en.successors(item.states)) {
      LabelTrace t = item.trace;
      t.push_back(label);
      stack.push_back({std::move(t), std::move(states)});
    }
  }
  return out;
}

TraceSet computeTraces(const Contract& c, std::size_t depth, bool injection,
                       const ParamBindings& params) {
  return computeTraces(subjectOf(c, params), depth, injection);
}

namespace {

bool shorterThenLex(const LabelTrace& a, const LabelTrace& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

}  // namespace

ConformanceReport refines(const Subject& impl, const Subject& contract, std::size_t depth,
                          const RefinementOptions& opts) {
  Renaming table;
  for (const auto& [from, to] : opts.renaming) {
    if (to && !contract.alphabet.contains(*to)) {
      throw AlphabetMismatch("ALPHABET_MISMATCH: '" + from + "' maps to '" + *to +
                             "', which is not in the alphabet of " + contract.name);
    }
    table.emplace(from, to);
  }
  for (const auto& l : impl.alphabet) {
    if (table.contains(l)) continue;
    table.emplace(l, contract.alphabet.contains(l) ? std::optional<std::string>(l) : std::nullopt);
  }

  TraceOptions implOpts;
  implOpts.stateCap = opts.stateCap;
  implOpts.payloadDomain = opts.payloadDomain;
  implOpts.renaming = std::move(table);
  TraceOptions contractOpts;
  contractOpts.stateCap = opts.stateCap;
  contractOpts.payloadDomain = opts.payloadDomain;

  TraceSet mine = computeTraces(impl, depth, opts.implInjection, implOpts);
  TraceSet theirs = computeTraces(contract, depth, opts.contractInjection, contractOpts);

  ConformanceReport r;
  r.subject = impl.name;
  r.contract = contract.name;
  r.depth = depth;
  for (const auto& t : mine.traces) {
    if (theirs.traces.contains(t)) continue;
    if (!r.witness || shorterThenLex(t, *r.witness)) r.witness = t;
  }
  r.conforms = !r.witness;
  return r;
}

nlohmann::json toJson(const ConformanceReport& r) {
  nlohmann::json j{{"subject", r.subject},
                   {"contract", r.contract},
                   {"depth", r.depth},
                   {"verdict", r.conforms ? "CONFORMS" : "VIOLATES"}};
  if (r.witness) j["witness"] = *r.witness;
  return j;
}

}  // namespace sosc
