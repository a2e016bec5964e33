#pragma once

#include <string>

#include "optics/snapshot.hpp"
#include "ring/lattice.hpp"

namespace ringd::ofb {

using ring::ResponseModel;

// Response files are snapshots with pseudo-channels OFB:R-ROW-<i> (one row
// of R_x each), OFB:ETA, OFB:ALPHA-C, OFB:F0 and, optionally, the vertical
// rows OFB:RY-ROW-<i>.
optics::Snapshot response_to_snapshot(const ResponseModel& model, bool include_vertical = true);
// Throws Parse for missing rows or ragged/mismatched lengths.
ResponseModel response_from_snapshot(const optics::Snapshot& snapshot);
ResponseModel load_response(const std::string& path);
void write_response(const std::string& path, const ResponseModel& model, bool include_vertical = true);

}  // namespace ringd::ofb
