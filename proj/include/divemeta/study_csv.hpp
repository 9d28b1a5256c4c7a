#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "divemeta/core.hpp"

namespace divemeta {

// Exact header of a study table. Missing values are written "NA"; an empty
// field is read as missing too.
inline constexpr std::array<std::string_view, 9> kStudyCsvHeader = {
    "study_id", "n1", "median1", "q1_1", "q3_1", "n2", "median2", "q1_2", "q3_2"};

struct StudyTable {
  std::vector<StudyRecord> records;
  std::vector<std::string> warnings;
};

// Parses and validates a study table. Throws MalformedCsv (with line number),
// HeaderMismatch, or any validate_studies error.
StudyTable parse_study_csv_text(std::string_view text);
StudyTable parse_study_csv(const std::filesystem::path& path);

// Writes records with round-trip precision.
std::string write_study_csv(std::span<const StudyRecord> records);

}  // namespace divemeta
