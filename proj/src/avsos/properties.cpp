#include <map>

#include "sosc/avsos.hpp"

namespace sosc::avsos {

namespace {

// Monitor states are "key=value;" lists with sorted keys.
using Entries = std::map<std::string, Int>;

Entries decode(const std::string& blob) {
  Entries out;
  std::size_t pos = 0;
  while (pos < blob.size()) {
    auto eq = blob.find('=', pos);
    auto end = blob.find(';', eq);
    out[blob.substr(pos, eq - pos)] = std::stoll(blob.substr(eq + 1, end - eq - 1));
    pos = end + 1;
  }
  return out;
}

std::string encode(const Entries& e) {
  std::string out;
  for (const auto& [k, v] : e) out += k + "=" + std::to_string(v) + ";";
  return out;
}

std::optional<std::pair<Int, Int>> decision(const Event& e) {
  if (e.label != "leader_elected" || !e.payload.is_object()) return std::nullopt;
  return std::pair{e.payload.at("device").get<Int>(), e.payload.at("leader").get<Int>()};
}

// Device ids are padded so the map orders them numerically.
std::string deviceKey(Int id) {
  std::string s = std::to_string(id);
  return std::string(s.size() < 6 ? 6 - s.size() : 0, '0') + s;
}

class Agreement : public TraceProperty {
 public:
  Agreement(std::vector<Int> devices, std::optional<Int> expected)
      : devices_(std::move(devices)), expected_(expected) {}

  std::string name() const override { return "agreement"; }
  std::string initial() const override { return ""; }

  std::string observe(const std::string& state, const Event& e) const override {
    auto d = decision(e);
    if (!d) return state;
    Entries entries = decode(state);
    std::string key = deviceKey(d->first);
    // A second decision is a different property; keep the first one here.
    if (!entries.contains(key)) entries[key] = d->second;
    return encode(entries);
  }

  std::optional<std::string> safetyViolation(const std::string& state) const override {
    if (state.empty()) return std::nullopt;
    Entries entries = decode(state);
    std::optional<std::pair<std::string, Int>> first;
    for (const auto& [device, leader] : entries) {
      if (expected_ && leader != *expected_) {
        return "device " + std::to_string(std::stoll(device)) + " elected " + std::to_string(leader) +
               ", expected " + std::to_string(*expected_);
      }
      if (!first) {
        first = {device, leader};
      } else if (first->second != leader) {
        return "devices " + std::to_string(std::stoll(first->first)) + " and " +
               std::to_string(std::stoll(device)) + " elected different leaders (" +
               std::to_string(first->second) + " vs " + std::to_string(leader) + ")";
      }
    }
    return std::nullopt;
  }

  std::optional<std::string> finalViolation(const std::string& state) const override {
    Entries entries = decode(state);
    for (Int d : devices_) {
      if (!entries.contains(deviceKey(d))) return "device " + std::to_string(d) + " never elected a leader";
    }
    return std::nullopt;
  }

 private:
  std::vector<Int> devices_;
  std::optional<Int> expected_;
};

class NoDuplicateDecision : public TraceProperty {
 public:
  std::string name() const override { return "no-duplicate-decision"; }
  std::string initial() const override { return ""; }

  std::string observe(const std::string& state, const Event& e) const override {
    auto d = decision(e);
    if (!d) return state;
    Entries entries = decode(state);
    entries[deviceKey(d->first)] += 1;
    return encode(entries);
  }

  std::optional<std::string> safetyViolation(const std::string& state) const override {
    for (const auto& [device, count] : decode(state)) {
      if (count > 1) return "device " + std::to_string(std::stoll(device)) + " decided twice";
    }
    return std::nullopt;
  }

  std::optional<std::string> finalViolation(const std::string&) const override { return std::nullopt; }
};

// Tracks, per wrapper, the current seq and how often it went out.
class GiveUpBound : public TraceProperty {
 public:
  explicit GiveUpBound(int maxRetries) : maxRetries_(maxRetries) {}

  std::string name() const override { return "give-up-bound"; }
  std::string initial() const override { return ""; }

  std::string observe(const std::string& state, const Event& e) const override {
    if (e.label != "transmit" && e.label != "retransmit") return state;
    Entries entries = decode(state);
    Int seq = e.payload.at("seq").get<Int>();
    std::string seqKey = e.instance + "#seq";
    std::string countKey = e.instance + "#count";
    if (!entries.contains(seqKey) || entries[seqKey] != seq) {
      entries[seqKey] = seq;
      entries[countKey] = 0;
    }
    entries[countKey] += 1;
    return encode(entries);
  }

  std::optional<std::string> safetyViolation(const std::string& state) const override {
    Entries entries = decode(state);
    for (const auto& [key, value] : entries) {
      if (!key.ends_with("#count") || value <= maxRetries_ + 1) continue;
      std::string inst = key.substr(0, key.size() - 6);
      return inst + " transmitted seq " + std::to_string(entries[inst + "#seq"]) + " " +
             std::to_string(value) + " times (limit " + std::to_string(maxRetries_ + 1) + ")";
    }
    return std::nullopt;
  }

  std::optional<std::string> finalViolation(const std::string&) const override { return std::nullopt; }

 private:
  int maxRetries_;
};

}  // namespace

std::map<Int, std::optional<Int>> leadersOf(const Trace& trace, const std::vector<Int>& devices) {
  std::map<Int, std::optional<Int>> out;
  for (Int d : devices) out[d] = std::nullopt;
  for (const Event& e : trace.events) {
    auto d = decision(e);
    if (!d) continue;
    auto& slot = out[d->first];
    if (slot) throw DuplicateDecision("DUPLICATE_DECISION: device " + std::to_string(d->first) + " decided twice");
    slot = d->second;
  }
  return out;
}

std::unique_ptr<TraceProperty> agreementProperty(std::vector<Int> devices, std::optional<Int> expected) {
  return std::make_unique<Agreement>(std::move(devices), expected);
}

std::unique_ptr<TraceProperty> noDuplicateDecisionProperty() {
  return std::make_unique<NoDuplicateDecision>();
}

std::unique_ptr<TraceProperty> giveUpBoundProperty(int maxRetries) {
  return std::make_unique<GiveUpBound>(maxRetries);
}

}  // namespace sosc::avsos
