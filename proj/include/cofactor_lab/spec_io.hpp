#pragma once

#include <string>

#include "cofactor_lab/system_spec.hpp"

namespace coflab {

/// Parses a spec document (JSON text) into a SystemSpec. Validates the
/// schema, parses every expression, converts covariant J components with the
/// symbolic metric inverse when `covariant_J` is set, and checks the
/// g-symmetry of J at seeded sample points. Throws SpecError with a location
/// string on any failure.
SystemSpec load_spec_json(const std::string& text);

SystemSpec load_spec_file(const std::string& path);

}  // namespace coflab
