#include "vinfer/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "vinfer/common.hpp"
#include "vinfer/hashing.hpp"
#include "vinfer/textutil.hpp"

namespace vinfer {

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::vector<nlohmann::json> rows;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            rows.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError(path.string() + " line " + std::to_string(line_no) +
                            ": invalid JSON: " + e.what());
        }
    }
    return rows;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows) {
    std::ostringstream out;
    for (const auto& row : rows) {
        out << row.dump() << '\n';
    }
    write_file_atomic(path, out.str());
}

std::string canonical_json(const nlohmann::json& value) {
    return value.dump();
}

}  // namespace vinfer
