#pragma once

#include <cmath>
#include <vector>

#include "ifsldp/ifs_core.hpp"

namespace fx {

inline ifsldp::IfsSystem s1() {
  return {{{0.5, 0.0}, {0.5, 0.5}}, {0.5, 0.5}, 0.5};
}

inline ifsldp::Potential s1_const() { return ifsldp::Potential::constant({0.0, -1.0}); }

// A(0, x) = -x, A(1, x) = x - 1
inline ifsldp::Potential s1_place() {
  return ifsldp::Potential::affine({0.0, -1.0}, {-1.0, 1.0}, 1.0);
}

inline ifsldp::Potential zero(std::size_t m = 2) {
  return ifsldp::Potential::constant(std::vector<double>(m, 0.0));
}

// Four quarter maps; {0} and {1} are the attractors of the two zero-weight
// loops and every path between them pays a strictly negative price.
inline ifsldp::IfsSystem reducible4() {
  return {{{0.25, 0.0}, {0.25, 0.75}, {0.25, 0.25}, {0.25, 0.5}}, {0.25, 0.25, 0.25, 0.25}, 0.75};
}

inline ifsldp::Potential reducible4_potential() {
  return ifsldp::Potential::affine({0.0, -1.0, -1.0, -1.0}, {-1.0, 1.0, 0.0, 0.0}, 1.0);
}

inline ifsldp::Word word(std::initializer_list<std::size_t> l) { return ifsldp::Word{l}; }

}  // namespace fx
