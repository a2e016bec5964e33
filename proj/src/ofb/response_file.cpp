#include "ofb/response_file.hpp"

#include "common/error.hpp"

namespace ringd::ofb {

namespace {

using linalg::Matrix;
using linalg::Vector;

std::string row_name(const char* stem, std::size_t i) { return std::string(stem) + std::to_string(i); }

Matrix read_rows(const optics::Snapshot& snap, const char* stem) {
  std::vector<Vector> rows;
  for (std::size_t i = 0; snap.find(row_name(stem, i)); ++i) {
    rows.push_back(snap.numbers(row_name(stem, i)));
    if (rows.back().size() != rows.front().size())
      throw Error(ErrorCode::Parse, "response row " + row_name(stem, i) + " has a different length");
  }
  return rows.empty() ? Matrix() : Matrix::from_rows(rows);
}

double read_scalar(const optics::Snapshot& snap, const char* name) {
  const auto v = snap.numbers(name);
  if (v.size() != 1) throw Error(ErrorCode::Parse, std::string(name) + " must be a single number");
  return v[0];
}

}  // namespace

optics::Snapshot response_to_snapshot(const ResponseModel& model, bool include_vertical) {
  optics::Snapshot snap;
  snap.time = optics::iso8601_utc(wall_clock_now());
  snap.optics = "response";
  for (std::size_t i = 0; i < model.r_x.rows(); ++i) snap.add(row_name("OFB:R-ROW-", i), model.r_x.row(i));
  snap.add("OFB:ETA", model.eta);
  snap.add("OFB:ALPHA-C", model.alpha_c);
  snap.add("OFB:F0", model.f0);
  if (include_vertical)
    for (std::size_t i = 0; i < model.r_y.rows(); ++i) snap.add(row_name("OFB:RY-ROW-", i), model.r_y.row(i));
  return snap;
}

ResponseModel response_from_snapshot(const optics::Snapshot& snap) {
  ResponseModel m;
  m.r_x = read_rows(snap, "OFB:R-ROW-");
  if (m.r_x.rows() == 0) throw Error(ErrorCode::Parse, "response file has no OFB:R-ROW-0");
  m.eta = snap.numbers("OFB:ETA");
  if (m.eta.size() != m.r_x.rows()) throw Error(ErrorCode::Parse, "OFB:ETA needs one entry per BPM");
  m.alpha_c = read_scalar(snap, "OFB:ALPHA-C");
  m.f0 = read_scalar(snap, "OFB:F0");
  if (!(m.alpha_c != 0.0) || !(m.f0 > 0.0)) throw Error(ErrorCode::Parse, "OFB:ALPHA-C and OFB:F0 must be nonzero");
  m.r_y = read_rows(snap, "OFB:RY-ROW-");
  return m;
}

ResponseModel load_response(const std::string& path) { return response_from_snapshot(optics::read_snapshot(path)); }

void write_response(const std::string& path, const ResponseModel& model, bool include_vertical) {
  optics::write_snapshot(path, response_to_snapshot(model, include_vertical));
}

}  // namespace ringd::ofb
