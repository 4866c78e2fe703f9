#include "dspace/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "dspace/types.hpp"

namespace dspace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
  if (header.empty()) throw Error(ErrorCode::InvalidInput, "CSV header must not be empty");
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i > 0) text_ += ',';
    text_ += header[i];
  }
  text_ += '\n';
}

CsvWriter& CsvWriter::cell(double v) { return cell(format_double(v)); }

CsvWriter& CsvWriter::cell(long long v) { return cell(std::to_string(v)); }

CsvWriter& CsvWriter::cell(const std::string& v) {
  if (current_ > 0) text_ += ',';
  text_ += v;
  ++current_;
  return *this;
}

void CsvWriter::end_row() {
  if (current_ != columns_)
    throw Error(ErrorCode::InvalidInput, "CSV row has " + std::to_string(current_) + " cells, header has " +
                                             std::to_string(columns_));
  text_ += '\n';
  current_ = 0;
  ++rows_;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::InvalidInput, "failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(ErrorCode::InvalidInput, "cannot rename onto " + path.string() + ": " + ec.message());
  }
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

NumericCsv read_numeric_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot open " + path.string());
  NumericCsv out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (out.header.empty()) {
      for (const auto& c : cells) out.header.push_back(trim(c));
      continue;
    }
    if (cells.size() != out.header.size())
      throw Error(ErrorCode::InvalidInput, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                               std::to_string(out.header.size()) + " cells, found " +
                                               std::to_string(cells.size()));
    std::vector<double> row;
    for (const auto& raw : cells) {
      const std::string c = trim(raw);
      double v = 0.0;
      const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
      if (res.ec != std::errc() || res.ptr != c.data() + c.size())
        throw Error(ErrorCode::InvalidInput,
                    path.string() + ":" + std::to_string(line_no) + ": not a number: '" + c + "'");
      row.push_back(v);
    }
    out.rows.push_back(std::move(row));
  }
  if (out.header.empty()) throw Error(ErrorCode::InvalidInput, path.string() + ": missing header row");
  return out;
}

}  // namespace dspace
