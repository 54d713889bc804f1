#include "keptop/report.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "keptop/common.hpp"

namespace keptop {

std::string canonical_dump(const Json& j) { return j.dump(); }

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string report_content_hash(Json report) {
  if (report.contains("provenance")) {
    report["provenance"].erase("timestamp");
    report["provenance"].erase("wall_time_seconds");
    report["provenance"].erase("content_hash");
  }
  return fnv1a_hex(canonical_dump(report));
}

void seal_report(Json& report) {
  report["provenance"]["content_hash"] = report_content_hash(report);
}

bool report_hash_matches(const Json& report) {
  if (!report.contains("provenance") || !report["provenance"].contains("content_hash"))
    return false;
  return report["provenance"]["content_hash"].get<std::string>() ==
         report_content_hash(report);
}

void atomic_write(const std::string& path, const std::string& data) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp.string());
    out << data;
  }
  fs::rename(tmp, target);
}

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ValidationError("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

std::string cache_directory(const std::string& out_dir) {
  if (const char* env = std::getenv("KEPTOP_CACHE_DIR"); env && *env) return env;
  return (std::filesystem::path(out_dir) / ".cache").string();
}

}  // namespace keptop
