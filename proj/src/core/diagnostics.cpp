#include "sosc/diagnostics.hpp"

#include <algorithm>

namespace sosc {

std::string_view toString(Severity s) {
  switch (s) {
    case Severity::Error:
      return "error";
    case Severity::Warning:
      return "warning";
    case Severity::Note:
      return "note";
  }
  return "error";
}

std::string format(const Diagnostic& d, std::string_view fallbackFile) {
  std::string out;
  if (d.span) {
    out += d.span->file;
    out += ':' + std::to_string(d.span->startLine) + ':' + std::to_string(d.span->startCol);
  } else {
    out += fallbackFile;
    out += ":1:1";
  }
  out += ": ";
  out += toString(d.severity);
  if (!d.rule.empty()) out += '[' + d.rule + ']';
  out += ": ";
  out += d.message;
  return out;
}

void attachSpans(Diagnostics& diags, const ModelDocument& doc) {
  for (auto& d : diags) {
    if (d.span) continue;
    // Fall back to the closest enclosing element that has a span.
    std::string id = d.elementId;
    while (!id.empty()) {
      if (auto it = doc.spans.find(id); it != doc.spans.end()) {
        d.span = it->second;
        break;
      }
      auto slash = id.rfind('/');
      if (slash == std::string::npos) break;
      id.resize(slash);
    }
  }
}

bool hasErrors(const Diagnostics& diags) {
  return std::any_of(diags.begin(), diags.end(),
                     [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

std::size_t countRule(const Diagnostics& diags, std::string_view rule) {
  return static_cast<std::size_t>(std::count_if(
      diags.begin(), diags.end(), [&](const Diagnostic& d) { return d.rule == rule; }));
}

}  // namespace sosc
