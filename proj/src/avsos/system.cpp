#include <algorithm>
#include <deque>
#include <stdexcept>

#include "sosc/avsos.hpp"
#include "sosc/validate.hpp"

namespace sosc::avsos {

namespace {

enum MoveKind : std::int64_t {
  kStart,
  kSend,
  kDecide,
  kElectionTimeout,
  kTransmit,
  kRetransmit,
  kGiveUp,
  kDeliver,
  kDrop,
  kTlTimeout,
  kSourceSend,
};

enum Phase : int { kIdle, kElecting, kDecided };
enum SendPhase : int { kSendIdle, kStore, kSent };

struct Env {
  int src = 0;  // node index
  int dst = 0;
  Int seq = 0;
  bool ack = false;
  Int payload = 0;
};

struct DeviceState {
  int phase = kIdle;
  Int best = 0;
  Int leader = 0;
  int sends = 0;          // peers already addressed
  std::uint32_t heard = 0;  // bit per peer index
  bool timedOut = false;
  std::optional<Tick> deadline;
};

struct WrapperState {
  int phase = kSendIdle;
  Int seq = 0;
  int attempts = 0;
  Int payload = 0;
  std::optional<Tick> deadline;
  Int lastDelivered = 0;
};

struct State : SystemState {
  std::vector<DeviceState> devices;
  std::vector<WrapperState> wrappers;
  std::vector<std::deque<Env>> streams;
  std::vector<Int> streamSeq;  // DATA numbering when devices talk directly
  std::optional<Tick> tlBlockedUntil;

  std::unique_ptr<SystemState> clone() const override { return std::make_unique<State>(*this); }

  std::string encode(Tick now) const override {
    std::string out;
    auto num = [&](Int v) {
      out += std::to_string(v);
      out += ',';
    };
    auto rel = [&](const std::optional<Tick>& d) { num(d ? *d - now : -1); };
    for (const auto& d : devices) {
      num(d.phase);
      num(d.best);
      num(d.leader);
      num(d.sends);
      num(d.heard);
      num(d.timedOut);
      rel(d.deadline);
    }
    out += '|';
    for (const auto& w : wrappers) {
      num(w.phase);
      num(w.seq);
      num(w.attempts);
      num(w.payload);
      rel(w.deadline);
      num(w.lastDelivered);
    }
    out += '|';
    for (std::size_t s = 0; s < streams.size(); ++s) {
      for (const Env& e : streams[s]) {
        num(e.seq);
        num(e.ack);
        num(e.payload);
      }
      out += ';';
    }
    for (Int v : streamSeq) num(v);
    out += '|';
    rel(tlBlockedUntil);
    return out;
  }
};

}  // namespace

struct AvSosSystem::Impl {
  struct Device {
    std::string path;
    Int id = 0;
    std::vector<int> peers;     // device indices, increasing id
    std::vector<int> wrappers;  // wrapper index per peer slot, empty without wrappers
  };
  struct Wrapper {
    std::string path;
    int owner = -1;  // device index
    int peer = -1;   // device index
    int remote = -1; // the peer's wrapper that talks back to us
    Int maxRetries = 1;
  };

  std::vector<Device> devices;
  std::vector<Wrapper> wrappers;
  std::string tlPath = "tl";
  bool faulty = false;
  bool withWrappers = false;
  AvSosOptions opts;

  Tick electionTimeout = 10;
  Tick wrapperTimeout = 3;
  Tick tlTimeout = 2;

  // Source/sink mode.
  bool sourceSink = false;
  int messages = 0;

  // Message endpoints: devices without wrappers, wrappers otherwise.
  std::vector<std::string> nodePaths;
  std::vector<std::vector<int>> streamIndex;  // [src][dst] -> stream, -1 if none
  int streamCount = 0;

  void buildStreams() {
    std::size_t n = withWrappers ? wrappers.size() : devices.size();
    nodePaths.clear();
    for (std::size_t i = 0; i < n; ++i)
      nodePaths.push_back(withWrappers ? wrappers[i].path : devices[i].path);
    streamIndex.assign(n, std::vector<int>(n, -1));
    streamCount = 0;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        bool linked = withWrappers ? wrappers[a].remote == static_cast<int>(b)
                                   : a != b;
        if (linked) streamIndex[a][b] = streamCount++;
      }
    }
  }

  nlohmann::json envJson(const Env& e) const {
    return toJson(Envelope{nodePaths[static_cast<std::size_t>(e.src)],
                           nodePaths[static_cast<std::size_t>(e.dst)], e.seq,
                           e.ack ? EnvelopeKind::Ack : EnvelopeKind::Data, e.payload});
  }

  std::string faultKey(const Env& e) const {
    // An ACK counts toward the DATA sequence it acknowledges.
    int src = e.ack ? e.dst : e.src;
    int dst = e.ack ? e.src : e.dst;
    return nodePaths[static_cast<std::size_t>(src)] + ">" + nodePaths[static_cast<std::size_t>(dst)] +
           "#" + std::to_string(e.seq);
  }

  void receive(State& s, int device, int fromDevice, Int id, Tick now) const {
    DeviceState& d = s.devices[static_cast<std::size_t>(device)];
    if (d.phase == kDecided || sourceSink) return;
    const auto& peers = devices[static_cast<std::size_t>(device)].peers;
    auto slot = std::find(peers.begin(), peers.end(), fromDevice) - peers.begin();
    d.best = std::max(d.best, id);
    std::uint32_t bit = 1u << slot;
    if (!(d.heard & bit)) {
      d.heard |= bit;
      // Quiescence timeout: restart the window on every new peer.
      if (d.phase == kElecting) d.deadline = now + electionTimeout;
    }
  }

  bool allHeard(const DeviceState& d, std::size_t device) const {
    std::size_t peers = devices[device].peers.size();
    return d.heard == (peers >= 32 ? ~0u : (1u << peers) - 1u);
  }

  bool sendsDone(const DeviceState& d, std::size_t device) const {
    return d.sends == static_cast<int>(devices[device].peers.size());
  }
};

AvSosSystem::AvSosSystem() : impl_(std::make_unique<Impl>()) {}
AvSosSystem::~AvSosSystem() = default;

AvSosSystem::AvSosSystem(const SoSComposition& comp, const ModelDocument& doc,
                         const ExecutionConfig& cfg, AvSosOptions opts)
    : impl_(std::make_unique<Impl>()) {
  Impl& m = *impl_;
  m.opts = opts;
  m.electionTimeout = cfg.timeout("election_timeout");

  FlatComposition flat = instantiate(comp, doc);
  struct RawWrapper {
    std::string path;
    Int myId, yrId, maxRetries;
  };
  std::vector<RawWrapper> raw;
  int tls = 0;
  for (const auto& leaf : flat.leaves) {
    const Contract& c = *leaf.contract;
    auto param = [&](const char* name) {
      auto it = leaf.params.find(name);
      if (it == leaf.params.end())
        throw std::invalid_argument(leaf.path + ": missing parameter " + name);
      return it->second;
    };
    if (c.name == "LE_Device") {
      m.devices.push_back({leaf.path, param("myId"), {}, {}});
    } else if (c.name == "LE_Wrapper") {
      raw.push_back({leaf.path, param("myId"), param("yrId"), param("maxRetries")});
    } else if (c.name == "Transport_Layer" || c.name == "Faulty_Transport_Layer") {
      ++tls;
      m.tlPath = leaf.path;
      m.faulty = std::any_of(c.protocol.transitions.begin(), c.protocol.transitions.end(),
                             [](const Transition& t) { return t.stereotype == Stereotype::Error; });
    }
  }
  if (tls != 1) throw std::invalid_argument("an AV composition needs exactly one transport layer");
  if (m.devices.empty()) throw std::invalid_argument("an AV composition needs LE devices");
  if (m.devices.size() > 31) throw std::invalid_argument("at most 31 devices are supported");

  std::sort(m.devices.begin(), m.devices.end(),
            [](const Impl::Device& a, const Impl::Device& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < m.devices.size(); ++i) {
    if (m.devices[i].id == m.devices[i - 1].id)
      throw std::invalid_argument("duplicate device id " + std::to_string(m.devices[i].id));
  }
  auto deviceIndex = [&](Int id) {
    for (std::size_t i = 0; i < m.devices.size(); ++i)
      if (m.devices[i].id == id) return static_cast<int>(i);
    return -1;
  };
  for (std::size_t i = 0; i < m.devices.size(); ++i) {
    for (std::size_t j = 0; j < m.devices.size(); ++j)
      if (i != j) m.devices[i].peers.push_back(static_cast<int>(j));
  }

  m.withWrappers = !raw.empty();
  if (m.withWrappers) {
    m.wrapperTimeout = cfg.timeout("wrapper_timeout");
    for (const auto& r : raw) {
      int owner = deviceIndex(r.myId);
      int peer = deviceIndex(r.yrId);
      if (owner < 0 || peer < 0 || owner == peer)
        throw std::invalid_argument(r.path + ": wrapper ids do not name two devices");
      m.wrappers.push_back({r.path, owner, peer, -1, r.maxRetries});
    }
    for (auto& d : m.devices) d.wrappers.assign(d.peers.size(), -1);
    for (std::size_t w = 0; w < m.wrappers.size(); ++w) {
      auto& wr = m.wrappers[w];
      auto& owner = m.devices[static_cast<std::size_t>(wr.owner)];
      auto slot = std::find(owner.peers.begin(), owner.peers.end(), wr.peer) - owner.peers.begin();
      if (owner.wrappers[static_cast<std::size_t>(slot)] >= 0)
        throw std::invalid_argument(wr.path + ": second wrapper for the same peer");
      owner.wrappers[static_cast<std::size_t>(slot)] = static_cast<int>(w);
      for (std::size_t v = 0; v < m.wrappers.size(); ++v) {
        if (m.wrappers[v].owner == wr.peer && m.wrappers[v].peer == wr.owner) wr.remote = static_cast<int>(v);
      }
    }
    for (const auto& d : m.devices) {
      for (int w : d.wrappers) {
        if (w < 0) throw std::invalid_argument(d.path + ": some peers lack a wrapper");
        if (m.wrappers[static_cast<std::size_t>(w)].remote < 0)
          throw std::invalid_argument(m.wrappers[static_cast<std::size_t>(w)].path + ": peer has no wrapper back");
      }
    }
  }
  if (m.faulty) m.tlTimeout = cfg.timeout("tl_delivery_timeout");
  m.buildStreams();
}

std::unique_ptr<AvSosSystem> AvSosSystem::sourceSink(int maxRetries, int messages,
                                                     const ExecutionConfig& cfg, AvSosOptions opts) {
  if (messages < 1) throw std::invalid_argument("messages must be at least 1");
  std::unique_ptr<AvSosSystem> sys(new AvSosSystem());
  Impl& m = *sys->impl_;
  m.opts = opts;
  m.sourceSink = true;
  m.messages = messages;
  m.faulty = true;
  m.withWrappers = true;
  m.wrapperTimeout = cfg.timeout("wrapper_timeout");
  m.tlTimeout = cfg.timeout("tl_delivery_timeout");
  m.devices = {{"source", 1, {1}, {0}}, {"sink", 2, {0}, {1}}};
  m.wrappers = {{"source.wrapper", 0, 1, 1, maxRetries}, {"sink.wrapper", 1, 0, 0, maxRetries}};
  m.buildStreams();
  return sys;
}

std::unique_ptr<SystemState> AvSosSystem::initial() const {
  auto s = std::make_unique<State>();
  for (const auto& d : impl_->devices) {
    DeviceState ds;
    ds.best = d.id;
    s->devices.push_back(ds);
  }
  s->wrappers.assign(impl_->wrappers.size(), WrapperState{});
  s->streams.assign(static_cast<std::size_t>(impl_->streamCount), {});
  s->streamSeq.assign(static_cast<std::size_t>(impl_->streamCount), 0);
  return s;
}

std::vector<std::string> AvSosSystem::instances() const {
  std::vector<std::string> out;
  for (const auto& d : impl_->devices) out.push_back(d.path);
  for (const auto& w : impl_->wrappers) out.push_back(w.path);
  out.push_back(impl_->tlPath);
  return out;
}

std::vector<Move> AvSosSystem::moves(const SystemState& base, Tick) const {
  const Impl& m = *impl_;
  const auto& s = static_cast<const State&>(base);
  std::vector<Move> out;
  auto add = [&](std::string inst, std::string label, Visibility v, nlohmann::json payload,
                 std::int64_t kind, std::int64_t index) -> Move& {
    Move mv;
    mv.instance = std::move(inst);
    mv.label = std::move(label);
    mv.visibility = v;
    mv.payload = std::move(payload);
    mv.tag = kind;
    mv.tag2 = index;
    out.push_back(std::move(mv));
    return out.back();
  };

  for (std::size_t i = 0; i < m.devices.size(); ++i) {
    const auto& dev = m.devices[i];
    const DeviceState& d = s.devices[i];
    if (m.sourceSink) {
      if (i == 0 && d.sends < m.messages &&
          s.wrappers[static_cast<std::size_t>(dev.wrappers[0])].phase == kSendIdle) {
        add(dev.path, "LE_SendMsgs", Visibility::Visible,
            {{"device", dev.id}, {"to", m.devices[1].id}, {"payload", d.sends + 1}}, kSourceSend,
            static_cast<std::int64_t>(i));
      }
      continue;
    }
    switch (d.phase) {
      case kIdle:
        add(dev.path, "start", Visibility::Internal, {{"device", dev.id}}, kStart,
            static_cast<std::int64_t>(i));
        break;
      case kElecting: {
        if (!m.sendsDone(d, i)) {
          auto slot = static_cast<std::size_t>(d.sends);
          bool ready = !m.withWrappers ||
                       s.wrappers[static_cast<std::size_t>(dev.wrappers[slot])].phase == kSendIdle;
          if (ready) {
            Int to = m.devices[static_cast<std::size_t>(dev.peers[slot])].id;
            add(dev.path, "LE_SendMsgs", Visibility::Visible,
                {{"device", dev.id}, {"to", to}, {"id", dev.id}}, kSend, static_cast<std::int64_t>(i));
          }
          break;
        }
        if (m.allHeard(d, i) || d.timedOut) {
          add(dev.path, "leader_elected", Visibility::Visible, {{"device", dev.id}, {"leader", d.best}},
              kDecide, static_cast<std::int64_t>(i));
        } else if (d.deadline) {
          add(dev.path, "election_timeout", Visibility::Internal, {{"device", dev.id}},
              kElectionTimeout, static_cast<std::int64_t>(i))
              .deadline = d.deadline;
        }
        break;
      }
      default:
        break;
    }
  }

  for (std::size_t w = 0; w < m.wrappers.size(); ++w) {
    const auto& wr = m.wrappers[w];
    const WrapperState& ws = s.wrappers[w];
    Env data{static_cast<int>(w), wr.remote, ws.seq, false, ws.payload};
    if (ws.phase == kStore) {
      add(wr.path, "transmit", Visibility::Visible, m.envJson(data), kTransmit,
          static_cast<std::int64_t>(w));
    } else if (ws.phase == kSent && ws.deadline) {
      if (ws.attempts <= wr.maxRetries) {
        add(wr.path, "retransmit", Visibility::Visible, m.envJson(data), kRetransmit,
            static_cast<std::int64_t>(w))
            .deadline = ws.deadline;
      } else {
        add(wr.path, "give_up", Visibility::Visible,
            {{"src", wr.path}, {"dst", m.nodePaths[static_cast<std::size_t>(wr.remote)]}, {"seq", ws.seq}},
            kGiveUp, static_cast<std::int64_t>(w))
            .deadline = ws.deadline;
      }
    }
  }

  if (s.tlBlockedUntil) {
    add(m.tlPath, "timeout", Visibility::Visible, nullptr, kTlTimeout, 0).deadline = s.tlBlockedUntil;
  } else {
    for (std::size_t q = 0; q < s.streams.size(); ++q) {
      if (s.streams[q].empty()) continue;
      const Env& e = s.streams[q].front();
      nlohmann::json payload = m.envJson(e);
      if (m.withWrappers && !e.ack) {
        Int last = s.wrappers[static_cast<std::size_t>(e.dst)].lastDelivered;
        bool fresh = e.seq > last;
        payload["handoff"] = fresh || !m.opts.dedup;
        payload["dup"] = !fresh;
      }
      add(m.tlPath, "LE_RecvMsgs", Visibility::Visible, payload, kDeliver,
                          static_cast<std::int64_t>(q));
      if (m.faulty && (!e.ack || m.opts.dropAcks)) {
        std::string key = m.faultKey(e);
        int nominal = static_cast<int>(out.size()) - 1;
        Move& drop = add(m.tlPath, "dropMessage", Visibility::Internal, m.envJson(e), kDrop,
                         static_cast<std::int64_t>(q));
        drop.error = true;
        drop.alternativeOf = nominal;
        drop.faultKey = std::move(key);
      }
    }
  }
  return out;
}

void AvSosSystem::apply(SystemState& base, const Move& mv, Tick now) const {
  const Impl& m = *impl_;
  auto& s = static_cast<State&>(base);
  auto idx = static_cast<std::size_t>(mv.tag2);

  auto enqueue = [&](const Env& e) {
    int q = m.streamIndex[static_cast<std::size_t>(e.src)][static_cast<std::size_t>(e.dst)];
    s.streams[static_cast<std::size_t>(q)].push_back(e);
  };
  auto handOff = [&](std::size_t w, Int payload) {
    WrapperState& ws = s.wrappers[w];
    ws.phase = kStore;
    ws.seq += 1;
    ws.attempts = 0;
    ws.payload = payload;
  };

  switch (mv.tag) {
    case kStart: {
      DeviceState& d = s.devices[idx];
      d.phase = kElecting;
      d.deadline = now + m.electionTimeout;
      break;
    }
    case kSend: {
      DeviceState& d = s.devices[idx];
      const auto& dev = m.devices[idx];
      auto slot = static_cast<std::size_t>(d.sends);
      if (m.withWrappers) {
        handOff(static_cast<std::size_t>(dev.wrappers[slot]), dev.id);
      } else {
        int peer = dev.peers[slot];
        int q = m.streamIndex[idx][static_cast<std::size_t>(peer)];
        Int seq = ++s.streamSeq[static_cast<std::size_t>(q)];
        enqueue(Env{static_cast<int>(idx), peer, seq, false, dev.id});
      }
      d.sends += 1;
      break;
    }
    case kSourceSend: {
      DeviceState& d = s.devices[idx];
      d.sends += 1;
      handOff(static_cast<std::size_t>(m.devices[idx].wrappers[0]), d.sends);
      break;
    }
    case kDecide: {
      DeviceState& d = s.devices[idx];
      d.phase = kDecided;
      d.leader = d.best;
      d.deadline.reset();
      break;
    }
    case kElectionTimeout: {
      DeviceState& d = s.devices[idx];
      d.timedOut = true;
      d.deadline.reset();
      break;
    }
    case kTransmit:
    case kRetransmit: {
      WrapperState& ws = s.wrappers[idx];
      enqueue(Env{static_cast<int>(idx), m.wrappers[idx].remote, ws.seq, false, ws.payload});
      ws.phase = kSent;
      ws.attempts += 1;
      ws.deadline = now + m.wrapperTimeout;
      break;
    }
    case kGiveUp: {
      WrapperState& ws = s.wrappers[idx];
      ws.phase = kSendIdle;
      ws.deadline.reset();
      break;
    }
    case kDeliver: {
      Env e = s.streams[idx].front();
      s.streams[idx].pop_front();
      if (!m.withWrappers) {
        m.receive(s, e.dst, e.src, e.payload, now);
        break;
      }
      auto dst = static_cast<std::size_t>(e.dst);
      WrapperState& ws = s.wrappers[dst];
      if (e.ack) {
        // Stale acknowledgements are ignored.
        if (ws.phase == kSent && ws.seq == e.seq) {
          ws.phase = kSendIdle;
          ws.deadline.reset();
        }
        break;
      }
      bool fresh = e.seq > ws.lastDelivered;
      if (fresh || !m.opts.dedup) {
        ws.lastDelivered = std::max(ws.lastDelivered, e.seq);
        const auto& wr = m.wrappers[dst];
        m.receive(s, wr.owner, wr.peer, e.payload, now);
      }
      enqueue(Env{e.dst, e.src, e.seq, true, 0});
      break;
    }
    case kDrop: {
      s.streams[idx].pop_front();
      s.tlBlockedUntil = now + m.tlTimeout;
      break;
    }
    case kTlTimeout:
      s.tlBlockedUntil.reset();
      break;
    default:
      throw std::logic_error("unknown AV move");
  }
}

bool AvSosSystem::finished(const SystemState& base) const {
  const auto& s = static_cast<const State&>(base);
  if (impl_->sourceSink) return s.devices[0].sends == impl_->messages;
  return std::all_of(s.devices.begin(), s.devices.end(),
                     [](const DeviceState& d) { return d.phase == kDecided; });
}

std::size_t AvSosSystem::deviceCount() const { return impl_->devices.size(); }

std::vector<Int> AvSosSystem::deviceIds() const {
  std::vector<Int> out;
  for (const auto& d : impl_->devices) out.push_back(d.id);
  return out;
}

std::size_t AvSosSystem::wrapperCount() const { return impl_->wrappers.size(); }
bool AvSosSystem::faultyTransport() const { return impl_->faulty; }

}  // namespace sosc::avsos
