#include <stdexcept>

#include "sosc/avsos.hpp"
#include "sosc/dsl.hpp"

namespace sosc::avsos {

namespace {

// Source of the case-study catalogue. models/avsos.sosc is the canonical
// serialisation of this text.
constexpr std::string_view kCatalog = R"sosc(
contract LE_Device(myId: DeviceId, numPeers: int[0..15]) {
  var best: int[0..15] = myId;
  var leader: int[0..15] = 0;
  var sent: int[0..15] = 0;
  var heard: int[0..15] = 0;
  var timed_out: bool = false;
  op announce(id: DeviceId);
  op decide(l: DeviceId) pre l == best post leader' == l;
  invariant best >= myId;
  invariant leader == 0 || leader == best;
  protocol {
    initial state Idle;
    state Electing;
    state Decided;
    trans Idle -> Electing;
    trans Electing -> Electing on LE_SendMsgs [sent < numPeers] / announce(myId), sent := sent + 1;
    trans Electing -> Electing on LE_RecvMsgs(j) / best := max(best, j), heard := heard + 1;
    trans Electing -> Electing on election_timeout [sent == numPeers] / timed_out := true;
    trans Electing -> Decided on leader_elected(l) [sent == numPeers && (heard >= numPeers || timed_out) && l == best] / decide(l), leader := l;
    trans Decided -> Decided on LE_RecvMsgs;
  }
}

contract Transport_Layer {
  var queued: int[0..4] = 0;
  var dest_present: bool = true;
  op createMessage() post queued' == queued + 1;
  op getNext() pre queued > 0 post queued' == queued - 1;
  invariant queued >= 0;
  protocol {
    var in_flight: bool = false;
    initial state Idle;
    state Reader;
    state Writer {
      initial state Ready_to_read_from_queue;
      state Delivering;
    }
    trans Idle -> Reader on LE_SendMsgs;
    trans Reader -> Idle / createMessage(), queued := queued + 1;
    trans Idle -> Writer [queued > 0];
    trans Ready_to_read_from_queue -> Delivering / getNext(), queued := queued - 1, in_flight := true;
    trans Writer -> Idle on LE_RecvMsgs [in_flight] / in_flight := false;
    trans Writer -> Idle on timeout [!dest_present];
  }
}

contract Faulty_Transport_Layer {
  var queued: int[0..4] = 0;
  var dest_present: bool = true;
  op createMessage() post queued' == queued + 1;
  op getNext() pre queued > 0 post queued' == queued - 1;
  invariant queued >= 0;
  failure_modes MessageLoss;
  protocol {
    var in_flight: bool = false;
    var dropped: bool = false;
    initial state Idle;
    state Reader;
    state Writer {
      initial state Ready_to_read_from_queue;
      state Delivering;
    }
    trans Idle -> Reader on LE_SendMsgs;
    trans Reader -> Idle / createMessage(), queued := queued + 1;
    trans Idle -> Writer [queued > 0];
    trans Ready_to_read_from_queue -> Delivering / getNext(), queued := queued - 1, in_flight := true;
    trans Ready_to_read_from_queue -> Delivering internal dropMessage / getNext(), queued := queued - 1, dropped := true [error];
    trans Writer -> Idle on LE_RecvMsgs [in_flight] / in_flight := false;
    trans Writer -> Idle on timeout [dropped || !dest_present] / dropped := false;
  }
}

contract LE_Wrapper(myId: DeviceId, yrId: DeviceId, maxRetries: int[0..7]) {
  var snd_pl: Payload;
  var wrapper_timeout: Ticks;
  op store(pl: Payload) post snd_pl' == pl;
  op send(pl: Payload);
  op acknowledge(s: int[0..15]);
  op deliver(pl: Payload);
  invariant myId != yrId;
  mitigates UnreliableMessageTransmission;
  protocol {
    var seq: int[0..15] = 0;
    var attempts: int[0..8] = 0;
    var rcv: int[0..15] = 0;
    var last: int[0..15] = 0;
    initial parallel Wrapper {
      region WrapperSend {
        initial state Send_Idle;
        state Store;
        state Sent;
      }
      region WrapperRec {
        initial state Rec_Idle;
        state ACK_Send;
        state Deliver;
      }
    }
    trans Send_Idle -> Store on LE_SendMsgs(pl) / store(pl), seq := seq + 1, attempts := 0;
    trans Store -> Sent on transmit(s) [s == seq] / send(snd_pl), attempts := attempts + 1;
    trans Sent -> Send_Idle on ACK(s) [s == seq];
    trans Sent -> Sent on ACK(s) [s != seq];
    trans Send_Idle -> Send_Idle on ACK(s);
    trans Sent -> Sent on retransmit(s) [s == seq && attempts <= maxRetries] / send(snd_pl), attempts := attempts + 1;
    trans Sent -> Send_Idle on give_up [attempts > maxRetries];
    trans Rec_Idle -> ACK_Send on DATA(s) / rcv := s;
    trans ACK_Send -> Deliver internal ack_new [rcv > last] / acknowledge(rcv);
    trans ACK_Send -> Rec_Idle internal ack_duplicate [rcv <= last] / acknowledge(rcv);
    trans Deliver -> Rec_Idle on LE_Deliver / deliver(rcv), last := rcv;
  }
}

contract Streaming_Device {
  protocol {}
}

contract Browsing_Device {
  protocol {}
}

sos AV_SoS_Nominal {
  sos AV_Device(myId: DeviceId, numPeers: int[0..15]) {
    instance streaming : Streaming_Device;
    instance browsing : Browsing_Device;
    instance le : LE_Device(myId, numPeers);
  }
  instance av : AV_Device(i, 2) * 3;
  instance tl : Transport_Layer;
  connect av.le -- tl.io : {LE_SendMsgs, LE_RecvMsgs};
}

sos AV_SoS_FaultTolerant {
  sos FT_LE_Device(myId: DeviceId, numPeers: int[0..15]) {
    instance le : LE_Device(myId, numPeers);
    instance wrapper : LE_Wrapper(myId, i + ite(i >= myId, 1, 0), 1) * 2;
    connect le.net -- wrapper.owner : {LE_SendMsgs};
  }
  sos AV_Device(myId: DeviceId, numPeers: int[0..15]) {
    instance streaming : Streaming_Device;
    instance browsing : Browsing_Device;
    instance le : FT_LE_Device(myId, numPeers);
  }
  instance av : AV_Device(i, 2) * 3;
  instance tl : Faulty_Transport_Layer;
  connect av.le -- tl.io : {LE_SendMsgs, LE_RecvMsgs};
}

dependability {
  fault UnreliableMessageTransmission level=SOS persistence=TRANSIENT
    name="Unreliable Message Transmission"
    description="Messages between LE Devices may not arrive; its presence is bounded in time.";
  error DropMessage level=CS persistence=TRANSIENT
    name="Drop Message"
    description="The transport layer discards a message taken from its queue.";
  failure MessageLoss level=CS persistence=TRANSIENT
    name="Message Loss"
    description="A message handed to the transport layer is never delivered.";
  exhibited_by DropMessage -> Faulty_Transport_Layer;
  exhibited_by MessageLoss -> Faulty_Transport_Layer;
  causes DropMessage -> MessageLoss;
  causes MessageLoss -> UnreliableMessageTransmission;
  located_in UnreliableMessageTransmission in AV_SoS_FaultTolerant;
  affects UnreliableMessageTransmission -> LE_Device;
  mitigated_by UnreliableMessageTransmission -> LE_Wrapper;
}
)sosc";

const ModelDocument& catalog() {
  static const ModelDocument doc = parseModel(kCatalog, "<catalog>");
  return doc;
}

const Contract& contract(std::string_view name) {
  const Contract* c = catalog().findContract(name);
  if (!c) throw std::logic_error("catalogue lacks contract " + std::string(name));
  return *c;
}

const SoSComposition& composition(std::string_view name) {
  const SoSComposition* s = catalog().findComposition(name);
  if (!s) throw std::logic_error("catalogue lacks composition " + std::string(name));
  return *s;
}

const SoSComposition& local(const SoSComposition& s, std::string_view name) {
  for (const auto& l : s.locals)
    if (l.name == name) return l;
  throw std::logic_error("catalogue lacks local composition " + std::string(name));
}

}  // namespace

Contract leDevice() { return contract("LE_Device"); }
Contract tlNominal() { return contract("Transport_Layer"); }
Contract tlFaulty() { return contract("Faulty_Transport_Layer"); }
Contract leWrapper() { return contract("LE_Wrapper"); }
Contract streamingDevice() { return contract("Streaming_Device"); }
Contract browsingDevice() { return contract("Browsing_Device"); }

SoSComposition ftLeDevice() { return local(composition("AV_SoS_FaultTolerant"), "FT_LE_Device"); }

SoSComposition avDevice(bool faultTolerant) {
  return local(composition(faultTolerant ? "AV_SoS_FaultTolerant" : "AV_SoS_Nominal"), "AV_Device");
}

SoSComposition avSosNominal() { return composition("AV_SoS_Nominal"); }
SoSComposition avSosFaultTolerant() { return composition("AV_SoS_FaultTolerant"); }
DependabilityModel fig4DependabilityModel() { return *catalog().dependability; }

ModelDocument catalogDocument() {
  ModelDocument doc = catalog();
  doc.spans.clear();
  return doc;
}

ProtocolStateMachine electionProtocol() { return contract("LE_Device").protocol; }

ProtocolStateMachine wrapperProtocol(const WrapperParams& p) {
  if (p.myId == p.yrId) throw std::invalid_argument("wrapper needs myId != yrId");
  if (p.maxRetries < 0) throw std::invalid_argument("maxRetries must be non-negative");
  return specialize(contract("LE_Wrapper").protocol,
                    {{"myId", p.myId}, {"yrId", p.yrId}, {"maxRetries", p.maxRetries}});
}

SoSComposition buildAvSos(int n, bool faultTolerant, int maxRetries, std::optional<bool> faultyTl) {
  if (n < 1) throw std::invalid_argument("buildAvSos needs at least one device");
  if (maxRetries < 0) throw std::invalid_argument("maxRetries must be non-negative");
  const bool faulty = faultyTl.value_or(faultTolerant);
  const Expr i = Expr::ident("i");
  const Expr myId = Expr::ident("myId");
  const Expr numPeers = Expr::ident("numPeers");
  const std::vector<TypedName> deviceParams = {{"myId", Type::opaque("DeviceId")},
                                               {"numPeers", Type::integer(0, 15)}};

  SoSComposition s;
  s.name = "AV_SoS_" + std::to_string(n) + (faultTolerant ? "_FT" : "");
  if (faulty != faultTolerant) s.name += faulty ? "_FaultyTL" : "_NominalTL";

  SoSComposition device;
  device.name = "AV_Device";
  device.params = deviceParams;
  device.children.push_back({"streaming", "Streaming_Device", 1, {}});
  device.children.push_back({"browsing", "Browsing_Device", 1, {}});
  if (faultTolerant) {
    SoSComposition ft;
    ft.name = "FT_LE_Device";
    ft.params = deviceParams;
    ft.children.push_back({"le", "LE_Device", 1, {myId, numPeers}});
    if (n > 1) {
      // Peer ids skip the owner: i + (i >= myId ? 1 : 0). A single wrapper
      // has no index, so i is the literal 1 there.
      const Expr k = n > 2 ? i : Expr::integer(1);
      Expr yrId = Expr::binary(BinaryOp::Add, k,
                               Expr::call("ite", {Expr::binary(BinaryOp::Ge, k, myId),
                                                  Expr::integer(1), Expr::integer(0)}));
      ft.children.push_back({"wrapper", "LE_Wrapper", n - 1, {myId, yrId, Expr::integer(maxRetries)}});
      ft.connections.push_back({{"le", "net"}, {"wrapper", "owner"}, {"LE_SendMsgs"}});
    }
    s.locals.push_back(std::move(ft));
    device.children.push_back({"le", "FT_LE_Device", 1, {myId, numPeers}});
  } else {
    device.children.push_back({"le", "LE_Device", 1, {myId, numPeers}});
  }
  s.locals.push_back(std::move(device));

  s.children.push_back({"av", "AV_Device", n, {i, Expr::integer(n - 1)}});
  if (n == 1) s.children.back().args[0] = Expr::integer(1);
  s.children.push_back({"tl", faulty ? "Faulty_Transport_Layer" : "Transport_Layer", 1, {}});
  s.connections.push_back({{"av", "le"}, {"tl", "io"}, {"LE_SendMsgs", "LE_RecvMsgs"}});
  return s;
}

ModelDocument withCatalog(const SoSComposition& s) {
  ModelDocument doc = catalogDocument();
  doc.compositions.push_back(s);
  return doc;
}

}  // namespace sosc::avsos
