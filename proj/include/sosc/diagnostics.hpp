#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sosc/model.hpp"

namespace sosc {

enum class Severity { Error, Warning, Note };

struct Diagnostic {
  std::string elementId;
  std::string rule;  // empty for syntax errors
  Severity severity = Severity::Error;
  std::string message;
  std::optional<SourceSpan> span;

  bool operator==(const Diagnostic&) const = default;
};

using Diagnostics = std::vector<Diagnostic>;

std::string_view toString(Severity s);

// `file:line:col: severity[RULE]: message`, or `file:line:col: severity:
// message` when the diagnostic has no rule id. Diagnostics without a span use
// the supplied fallback file and position 1:1.
std::string format(const Diagnostic& d, std::string_view fallbackFile = "<input>");

// Fill in spans from the document's span table where the element id is known.
void attachSpans(Diagnostics& diags, const ModelDocument& doc);

bool hasErrors(const Diagnostics& diags);
std::size_t countRule(const Diagnostics& diags, std::string_view rule);

}  // namespace sosc
