#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace vinfer {

// Reads one JSON object per non-empty line. Parse failures carry the
// 1-based line number so corpus errors point at the offending record.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

// Serializes one object per line (compact) and writes atomically.
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);

// Canonical JSON text: compact separators with keys sorted (nlohmann::json
// already stores object keys sorted). Used for hashing and cache entries.
std::string canonical_json(const nlohmann::json& value);

}  // namespace vinfer
