#pragma once

#include <json.hpp>
#include <string>

namespace keptop {

using Json = nlohmann::json;

/// Canonical dump used for hashing and cache keys: sorted keys (nlohmann
/// objects are ordered maps), no whitespace.
std::string canonical_dump(const Json& j);

/// FNV-1a 64-bit, hex-encoded.
std::string fnv1a_hex(const std::string& data);

/// Hash of a report body with the volatile provenance fields (timestamp,
/// wall time, hash itself) blanked out.
std::string report_content_hash(Json report);

/// Stamp provenance.content_hash.
void seal_report(Json& report);

/// True when the stored hash matches the recomputed one.
bool report_hash_matches(const Json& report);

/// Write via a temp file and rename, so readers never see partial output.
void atomic_write(const std::string& path, const std::string& data);

Json load_json(const std::string& path);

/// Cache directory resolution: KEPTOP_CACHE_DIR overrides the default
/// <out_dir>/.cache.
std::string cache_directory(const std::string& out_dir);

}  // namespace keptop
