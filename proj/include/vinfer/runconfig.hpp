#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vinfer/gateway.hpp"
#include "vinfer/pipeline.hpp"

namespace vinfer {

// Raw parse of the keyed run-configuration grammar:
//   key = value            (top level)
//   [section.name]
//   key = value            (inside the section)
// Values are bare tokens (numbers, booleans, single words) or quoted strings
// with \" \\ \n \t escapes. A # starts a comment outside quotes. Blank lines
// are ignored.
struct ConfigSection {
    std::string name;
    std::map<std::string, std::string> values;
};

struct ConfigFile {
    std::map<std::string, std::string> top;
    std::vector<ConfigSection> sections;
};

ConfigFile parse_config_text(const std::string& text, const std::string& origin);
ConfigFile parse_config_file(const std::filesystem::path& path);

// A fully resolved run request. Relative paths in the file resolve against
// the file's own directory, so a config stays valid from any working
// directory.
struct RunSpec {
    std::filesystem::path corpus_root;
    std::filesystem::path templates_dir;
    std::filesystem::path demos_path;  // empty when the file names none
    std::filesystem::path cache_dir;   // empty disables response caching
    std::uint64_t seed = 0;
    RunConfig run;
    std::vector<BackendConfig> backends;
};

RunSpec run_spec_from_config(const ConfigFile& config, const std::filesystem::path& base_dir);
RunSpec run_spec_from_file(const std::filesystem::path& path);

}  // namespace vinfer
