#include "divemeta/study_csv.hpp"

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace divemeta {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Splits one CSV line; double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_fields(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw Error(ErrorCode::MalformedCsv, fmt::format("line {}: unterminated quote", line_no));
  fields.emplace_back(trim(cur));
  return fields;
}

bool is_missing(std::string_view s) { return s.empty() || s == "NA"; }

double parse_real(std::string_view s, std::size_t line_no, std::string_view column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::MalformedCsv, fmt::format("line {}: column {}: '{}' is not a number", line_no, column, s));
  }
  return v;
}

std::optional<double> parse_optional(std::string_view s, std::size_t line_no, std::string_view column) {
  if (is_missing(s)) return std::nullopt;
  return parse_real(s, line_no, column);
}

long parse_count(std::string_view s, std::size_t line_no, std::string_view column) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::MalformedCsv, fmt::format("line {}: column {}: '{}' is not an integer", line_no, column, s));
  }
  return v;
}

std::string format_optional(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : "NA"; }

bool needs_quotes(std::string_view s) { return s.find_first_of(",\"") != std::string_view::npos; }

std::string quote(std::string_view s) {
  if (!needs_quotes(s)) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

StudyTable parse_study_csv_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  StudyTable table;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line, line_no);
    if (!have_header) {
      bool matches = fields.size() == kStudyCsvHeader.size();
      for (std::size_t i = 0; matches && i < fields.size(); ++i) matches = fields[i] == kStudyCsvHeader[i];
      if (!matches) {
        throw Error(ErrorCode::HeaderMismatch,
                    fmt::format("line {}: expected header {}", line_no, fmt::join(kStudyCsvHeader, ",")));
      }
      have_header = true;
      continue;
    }
    if (fields.size() != kStudyCsvHeader.size()) {
      throw Error(ErrorCode::MalformedCsv,
                  fmt::format("line {}: expected {} fields, got {}", line_no, kStudyCsvHeader.size(), fields.size()));
    }
    if (fields[0].empty()) throw Error(ErrorCode::MalformedCsv, fmt::format("line {}: empty study_id", line_no));
    for (std::size_t col : {1u, 2u, 5u, 6u}) {
      if (is_missing(fields[col])) {
        throw Error(ErrorCode::MalformedCsv,
                    fmt::format("line {}: column {} is required", line_no, kStudyCsvHeader[col]));
      }
    }
    StudyRecord r;
    r.id = fields[0];
    r.group1 = {parse_count(fields[1], line_no, "n1"), parse_real(fields[2], line_no, "median1"),
                parse_optional(fields[3], line_no, "q1_1"), parse_optional(fields[4], line_no, "q3_1")};
    r.group2 = {parse_count(fields[5], line_no, "n2"), parse_real(fields[6], line_no, "median2"),
                parse_optional(fields[7], line_no, "q1_2"), parse_optional(fields[8], line_no, "q3_2")};
    if (!r.qe_eligible()) {
      table.warnings.push_back(not_qe_eligible_warning(r.id));
    }
    table.records.push_back(std::move(r));
  }
  if (!have_header) throw Error(ErrorCode::MalformedCsv, "file is empty");
  if (table.records.empty()) throw Error(ErrorCode::MalformedCsv, "no data rows after the header");
  table.records = validate_studies(std::move(table.records));
  return table;
}

StudyTable parse_study_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_study_csv_text(buf.str());
}

std::string write_study_csv(std::span<const StudyRecord> records) {
  std::string out = fmt::format("{}\n", fmt::join(kStudyCsvHeader, ","));
  for (const auto& r : records) {
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", quote(r.id), r.group1.n, r.group1.median,
                       format_optional(r.group1.q1), format_optional(r.group1.q3), r.group2.n, r.group2.median,
                       format_optional(r.group2.q1), format_optional(r.group2.q3));
  }
  return out;
}

}  // namespace divemeta
