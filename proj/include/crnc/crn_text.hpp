#pragma once

#include <string>
#include <string_view>

#include "crnc/crn.hpp"

namespace crnc {

// Line-oriented CRN text format:
//
//   # comment
//   species: X1+ role=input+
//   init: I_1_1- = 3/2
//   reaction: 2 X + Y -> 3 Z [k=1.5]
//
// Species are declared in order of first appearance. A '+' or '-' directly
// after a name is a rail tag; '+' between terms must be followed by a name.
// Throws ParseError (with a line number) on malformed input.
Crn parse_crn(std::string_view text);

// Canonical form: all species lines, then nonzero initials, then reactions.
std::string print_crn(const Crn& crn);

std::string format_reaction(const Crn& crn, const Reaction& r);

// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace crnc
