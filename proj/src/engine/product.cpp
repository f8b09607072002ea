#include <algorithm>
#include <stdexcept>

#include "sosc/engine.hpp"
#include "sosc/protocol.hpp"
#include "sosc/validate.hpp"

namespace sosc {

namespace {

struct ProductState : SystemState {
  std::vector<Configuration> configs;

  std::unique_ptr<SystemState> clone() const override {
    return std::make_unique<ProductState>(*this);
  }
  std::string encode(Tick) const override {
    std::string out;
    for (const auto& c : configs) {
      for (int a : c.active) out += std::to_string(a) + ',';
      out += ':';
      for (Int v : c.vars) out += std::to_string(v) + ',';
      out += '|';
    }
    return out;
  }
};

struct Leaf {
  std::string path;
  CompiledProtocol protocol;
  std::set<std::string> synced;  // labels that only fire in a handshake
};

struct SyncPair {
  std::size_t a;
  std::size_t b;
  std::string label;
};

}  // namespace

struct ProductSystem::Impl {
  std::vector<Leaf> leaves;
  std::vector<SyncPair> pairs;
  std::vector<Int> domain;

  std::vector<std::optional<Int>> payloads(const Leaf& l, const std::string& label) const {
    if (!l.protocol.hasBinder(label)) return {std::nullopt};
    std::vector<std::optional<Int>> out;
    for (Int v : domain) out.emplace_back(v);
    return out;
  }
};

ProductSystem::ProductSystem(const FlatComposition& flat, std::vector<Int> payloadDomain)
    : impl_(std::make_unique<Impl>()) {
  impl_->domain = std::move(payloadDomain);
  for (const auto& leaf : flat.leaves) {
    impl_->leaves.push_back(
        {leaf.path, CompiledProtocol::forContract(*leaf.contract, leaf.params), {}});
  }
  for (const auto& conn : flat.connections) {
    for (std::size_t a = 0; a < impl_->leaves.size(); ++a) {
      if (!pathUnder(impl_->leaves[a].path, conn.a)) continue;
      for (std::size_t b = 0; b < impl_->leaves.size(); ++b) {
        if (a == b || !pathUnder(impl_->leaves[b].path, conn.b)) continue;
        for (const auto& label : conn.labels) {
          auto& la = impl_->leaves[a];
          auto& lb = impl_->leaves[b];
          if (!la.protocol.alphabet().contains(label) || !lb.protocol.alphabet().contains(label))
            continue;
          impl_->pairs.push_back({a, b, label});
          la.synced.insert(label);
          lb.synced.insert(label);
        }
      }
    }
  }
}

ProductSystem::~ProductSystem() = default;

std::unique_ptr<SystemState> ProductSystem::initial() const {
  auto s = std::make_unique<ProductState>();
  for (const auto& l : impl_->leaves) s->configs.push_back(l.protocol.initial());
  return s;
}

std::vector<std::string> ProductSystem::instances() const {
  std::vector<std::string> out;
  for (const auto& l : impl_->leaves) out.push_back(l.path);
  return out;
}

std::size_t ProductSystem::size() const { return impl_->leaves.size(); }

std::string ProductSystem::describe(const SystemState& s) const {
  const auto& ps = static_cast<const ProductState&>(s);
  std::string out;
  for (std::size_t i = 0; i < impl_->leaves.size(); ++i) {
    if (i) out += "; ";
    out += impl_->leaves[i].path + " " + impl_->leaves[i].protocol.describe(ps.configs[i]);
  }
  return out;
}

// tag >= 0: single leaf `tag`, tag2 = transition index.
// tag < 0: handshake pair -tag-1, tag2 = ta * 65536 + tb.
std::vector<Move> ProductSystem::moves(const SystemState& s, Tick) const {
  const auto& ps = static_cast<const ProductState&>(s);
  std::vector<Move> out;
  struct Origin {
    std::size_t leaf;
    std::string stimulus;
    std::string source;
  };
  std::vector<Origin> origins;

  for (std::size_t i = 0; i < impl_->leaves.size(); ++i) {
    const Leaf& leaf = impl_->leaves[i];
    const Configuration& c = ps.configs[i];
    for (const auto& f : leaf.protocol.step(c, Stimulus::silent(), true)) {
      const Transition& t = leaf.protocol.transition(f.transition);
      Move m;
      m.instance = leaf.path;
      m.label = t.traceLabel();
      m.visibility = Visibility::Internal;
      m.error = t.stereotype == Stereotype::Error;
      m.tag = static_cast<std::int64_t>(i);
      m.tag2 = static_cast<std::int64_t>(f.transition);
      m.faultKey = m.error ? leaf.path + "#" + t.source : "";
      out.push_back(std::move(m));
      origins.push_back({i, "", t.source});
    }
    for (const auto& label : leaf.protocol.alphabet()) {
      if (leaf.synced.contains(label)) continue;
      for (const auto& payload : impl_->payloads(leaf, label)) {
        for (const auto& f : leaf.protocol.step(c, Stimulus::event(label, payload), true)) {
          const Transition& t = leaf.protocol.transition(f.transition);
          Move m;
          m.instance = leaf.path;
          m.label = label;
          m.visibility = Visibility::Visible;
          if (payload) m.payload = *payload;
          m.error = t.stereotype == Stereotype::Error;
          m.tag = static_cast<std::int64_t>(i);
          m.tag2 = static_cast<std::int64_t>(f.transition);
          m.faultKey = m.error ? leaf.path + "#" + t.source : "";
          out.push_back(std::move(m));
          origins.push_back({i, label + (payload ? "(" + std::to_string(*payload) + ")" : ""),
                             t.source});
        }
      }
    }
  }

  for (std::size_t p = 0; p < impl_->pairs.size(); ++p) {
    const SyncPair& pair = impl_->pairs[p];
    const Leaf& la = impl_->leaves[pair.a];
    const Leaf& lb = impl_->leaves[pair.b];
    // A handshake carries one payload; a side without a binder accepts any.
    std::vector<std::optional<Int>> values;
    if (la.protocol.hasBinder(pair.label) || lb.protocol.hasBinder(pair.label)) {
      for (Int v : impl_->domain) values.emplace_back(v);
    } else {
      values.emplace_back(std::nullopt);
    }
    for (const auto& payload : values) {
      auto fa = la.protocol.step(ps.configs[pair.a], Stimulus::event(pair.label, payload), true);
      if (fa.empty()) continue;
      auto fb = lb.protocol.step(ps.configs[pair.b], Stimulus::event(pair.label, payload), true);
      for (const auto& x : fa) {
        for (const auto& y : fb) {
          Move m;
          m.instance = la.path + "|" + lb.path;
          m.label = pair.label;
          if (payload) m.payload = *payload;
          m.error = la.protocol.transition(x.transition).stereotype == Stereotype::Error ||
                    lb.protocol.transition(y.transition).stereotype == Stereotype::Error;
          m.tag = -static_cast<std::int64_t>(p) - 1;
          m.tag2 = static_cast<std::int64_t>(x.transition) * 65536 +
                   static_cast<std::int64_t>(y.transition);
          m.faultKey = m.error ? m.instance + "#" + pair.label : "";
          out.push_back(std::move(m));
          origins.push_back({impl_->leaves.size() + p, pair.label, ""});
        }
      }
    }
  }

  // Pair each error move with a nominal sibling that answers the same
  // stimulus from the same source state, if there is one.
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!out[k].error || origins[k].source.empty()) continue;
    for (std::size_t n = 0; n < out.size(); ++n) {
      if (out[n].error || origins[n].leaf != origins[k].leaf ||
          origins[n].stimulus != origins[k].stimulus || origins[n].source != origins[k].source)
        continue;
      out[k].alternativeOf = static_cast<int>(n);
      break;
    }
  }
  return out;
}

void ProductSystem::apply(SystemState& s, const Move& m, Tick) const {
  auto& ps = static_cast<ProductState&>(s);
  std::optional<Int> payload;
  if (m.payload.is_number_integer()) payload = m.payload.get<Int>();

  auto fireOne = [&](std::size_t leaf, std::size_t transition, const Stimulus& stim) {
    const Leaf& l = impl_->leaves[leaf];
    for (auto& f : l.protocol.step(ps.configs[leaf], stim, true)) {
      if (f.transition == transition) {
        ps.configs[leaf] = std::move(f.next);
        return;
      }
    }
    throw std::logic_error("move no longer enabled at " + l.path);
  };

  if (m.tag >= 0) {
    Stimulus stim = m.visibility == Visibility::Internal ? Stimulus::silent()
                                                         : Stimulus::event(m.label, payload);
    fireOne(static_cast<std::size_t>(m.tag), static_cast<std::size_t>(m.tag2), stim);
    return;
  }
  const SyncPair& pair = impl_->pairs[static_cast<std::size_t>(-m.tag - 1)];
  Stimulus stim = Stimulus::event(pair.label, payload);
  fireOne(pair.a, static_cast<std::size_t>(m.tag2 / 65536), stim);
  fireOne(pair.b, static_cast<std::size_t>(m.tag2 % 65536), stim);
}

}  // namespace sosc
