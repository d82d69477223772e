#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace lrukit {

/// RFC 4180 table with a fixed header. Cells are JSON scalars: numbers are written
/// with round-trip precision, strings are quoted only when needed.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<nlohmann::json>> rows;

    void add_row(std::vector<nlohmann::json> row);
    std::string to_string() const;
};

struct ExperimentReport {
    std::string name;
    CsvTable table;
    nlohmann::json metrics = nlohmann::json::object();
    bool diverged = false;
};

std::string csv_cell(const nlohmann::json& v);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace lrukit
