#pragma once

#include <string>
#include <vector>

#include "sosc/diagnostics.hpp"
#include "sosc/model.hpp"
#include "sosc/protocol.hpp"

namespace sosc {

// Structural well-formedness. Problems come back as diagnostics, never as
// exceptions. Rule ids are stable strings (UNRESOLVED_ENDPOINT, ...).
//
// `dependability` is the linked dysfunction catalogue, if any. When it is
// null every failure_modes/mitigates entry is dangling.
Diagnostics validateStructure(const Contract& c, const DependabilityModel* dependability = nullptr);

// `context` supplies the contracts and compositions that instances refer to.
Diagnostics validateStructure(const SoSComposition& s, const ModelDocument& context);

// Without a context, relation targets (contracts, compositions) are not
// checked.
Diagnostics validateStructure(const DependabilityModel& m, const ModelDocument* context = nullptr);

// Everything above plus document-level uniqueness; spans attached.
Diagnostics validateStructure(const ModelDocument& doc);

// A contract instance after expanding multiplicities and nested
// compositions. Paths look like `av[2].le.wrapper[1]`.
struct LeafInstance {
  std::string path;
  const Contract* contract = nullptr;
  ParamBindings params;
};

struct FlatConnection {
  std::string a;  // instance path prefix
  std::string b;
  std::vector<std::string> labels;
};

struct FlatComposition {
  std::vector<LeafInstance> leaves;
  std::vector<FlatConnection> connections;
};

// Expands a composition against its document. Throws std::invalid_argument
// when a reference does not resolve or an argument cannot be evaluated;
// run validateStructure first for friendlier messages.
FlatComposition instantiate(const SoSComposition& s, const ModelDocument& doc,
                            const ParamBindings& params = {});

// Leaves whose path equals `prefix` or starts with `prefix` followed by '.'
// or '['.
bool pathUnder(std::string_view path, std::string_view prefix);

}  // namespace sosc
