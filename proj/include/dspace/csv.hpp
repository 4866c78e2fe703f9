#ifndef DSPACE_CSV_HPP_
#define DSPACE_CSV_HPP_

#include <filesystem>
#include <string>
#include <vector>

namespace dspace {

/// %.17g: round-trips every double.
std::string format_double(double v);

/// Row-oriented CSV text with a mandatory header.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
  CsvWriter& cell(const std::string& v);
  CsvWriter& cell(const char* v) { return cell(std::string(v)); }
  /// Ends the current row; throws if its width differs from the header.
  void end_row();

  const std::string& text() const { return text_; }
  std::size_t rows() const { return rows_; }

 private:
  std::size_t columns_;
  std::size_t current_ = 0;
  std::size_t rows_ = 0;
  std::string text_;
};

/// Write to a temporary sibling, then rename over `path`.
void atomic_write(const std::filesystem::path& path, const std::string& content);

struct NumericCsv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Reads a numeric CSV with a header row. Ragged rows or non-numeric cells
/// throw InvalidInput naming the line.
NumericCsv read_numeric_csv(const std::filesystem::path& path);

}  // namespace dspace

#endif  // DSPACE_CSV_HPP_
