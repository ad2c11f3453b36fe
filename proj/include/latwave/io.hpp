#pragma once
// JSON and CSV persistence for waves and small matrices.

#include <string>

#include "latwave/profile.hpp"
#include "json.hpp"

namespace latwave {

using json = nlohmann::json;

/// Modes as (re, im) pairs plus the raw real coefficients used for the exact round trip.
json wave_to_json(const WaveProfile& u);
WaveProfile wave_from_json(const json& j);

json vec_to_json(const Vec& v);
Vec vec_from_json(const json& j);
json cmat_to_json(const CMat& m);
json mat_to_json(const Mat& m);

/// Writes to path via a temporary file and rename.
void write_text_atomic(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

/// Shortest round-trip decimal for a double (17 significant digits at most).
std::string fmt_double(double x);

}  // namespace latwave
