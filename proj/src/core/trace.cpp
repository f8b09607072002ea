#include "sosc/trace.hpp"

#include <istream>
#include <stdexcept>

namespace sosc {

Trace hideInternal(const Trace& trace) {
  Trace out;
  out.annotation = trace.annotation;
  for (const Event& e : trace.events) {
    if (e.visibility == Visibility::Visible) out.events.push_back(e);
  }
  return out;
}

nlohmann::json toJson(const Event& e) {
  nlohmann::json j;
  j["t"] = e.t;
  j["inst"] = e.instance;
  j["label"] = e.label;
  j["kind"] = e.visibility == Visibility::Visible ? "VISIBLE" : "INTERNAL";
  j["payload"] = e.payload;
  return j;
}

Event eventFromJson(const nlohmann::json& j) {
  Event e;
  e.t = j.at("t").get<Tick>();
  e.instance = j.at("inst").get<std::string>();
  e.label = j.at("label").get<std::string>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "VISIBLE") {
    e.visibility = Visibility::Visible;
  } else if (kind == "INTERNAL") {
    e.visibility = Visibility::Internal;
  } else {
    throw std::invalid_argument("unknown event kind '" + kind + "'");
  }
  e.payload = j.contains("payload") ? j.at("payload") : nlohmann::json();
  return e;
}

std::string toJsonLines(const Trace& trace) {
  std::string out;
  for (const Event& e : trace.events) {
    out += toJson(e).dump();
    out += '\n';
  }
  return out;
}

Trace traceFromJsonLines(std::istream& in) {
  Trace t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.events.push_back(eventFromJson(nlohmann::json::parse(line)));
  }
  return t;
}

}  // namespace sosc
