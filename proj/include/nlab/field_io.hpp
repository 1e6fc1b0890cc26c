#pragma once

#include <string>

#include "nlab/lattice.hpp"

namespace nlab {

/// Shortest decimal that round-trips to the same double (C locale).
std::string format_double(double v);

/// Writes `# nlfield v1`, the header line and ny rows of nx values (rows
/// ordered by increasing x2). Fields with a one-dimensional farfield also get
/// a `# deviation` block holding the deviation from the step reference, so
/// tails close to the limits survive the round trip. The farfield's source
/// path must be set for one-dimensional rules.
void write_field(const std::string& path, const Field& f);
Field read_field(const std::string& path);

/// `# nlprofile v1`, `n=.. h=.. S=.. left=.. right=..`, then one
/// `value deviation` pair per node.
void write_profile(const std::string& path, const Profile& p);
Profile read_profile(const std::string& path);

}  // namespace nlab
