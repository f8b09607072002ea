#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "sosc/diagnostics.hpp"
#include "sosc/model.hpp"

namespace sosc {

// Syntax failure. Carries at least one diagnostic; the first one points at
// the exact offending position. No partial document is ever returned.
class ParseFailure : public std::runtime_error {
 public:
  explicit ParseFailure(Diagnostics errors);
  const Diagnostics& errors() const { return errors_; }

 private:
  Diagnostics errors_;
};

// Parses a `.sosc` document. Throws ParseFailure on syntax errors; semantic
// problems (unresolved names, bad causal edges, ...) are left to the
// validators.
ModelDocument parseModel(std::string_view text, std::string file = "<input>");

// Canonical text: declaration order preserved, two-space indentation, one
// blank line between top-level blocks, trailing newline.
std::string serializeModel(const ModelDocument& doc);

Expr parseExpression(std::string_view text);
Type parseType(std::string_view text);

// Keyword-block fragments used by the serializer, exposed for tooling.
std::string serializeContract(const Contract& c);
std::string serializeComposition(const SoSComposition& s);

}  // namespace sosc
