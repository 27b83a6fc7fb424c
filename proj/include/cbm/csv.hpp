#ifndef CBM_CSV_HPP
#define CBM_CSV_HPP

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace cbm {

inline constexpr const char* kSchemaHeader = "# cbm-lab schema v1";

/// Round-trip text form of a double (%.17g; "nan", "inf", "-inf").
std::string format_double(double v);

/// Comma-separated output with the schema header line.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns);
  void row(const std::vector<double>& values);
  /// A row whose leading cells are text.
  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t width_;
};

/// Parsed CSV written by CsvWriter (header validated).
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;
  std::vector<double> numeric(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace cbm

#endif  // CBM_CSV_HPP
