#pragma once

#include <string>

#include "cofactor_lab/spec_io.hpp"

namespace coflab::testing {

inline std::string fixture(const std::string& name) {
  return std::string(FIXTURES_DIR) + "/" + name;
}

inline SystemSpec ex1_spec() { return load_spec_file(fixture("henon_heiles_m0b0.json")); }
inline SystemSpec ex1_oscillatory() {
  return load_spec_file(fixture("henon_heiles_oscillatory.json"));
}
inline SystemSpec ex2_spec() { return load_spec_file(fixture("linear_2d.json")); }
inline SystemSpec ex2_adapted() { return load_spec_file(fixture("linear_2d_adapted.json")); }

}  // namespace coflab::testing
