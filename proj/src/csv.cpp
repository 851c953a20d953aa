#include "ppknn/csv.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "ppknn/errors.hpp"

namespace ppknn {

namespace {

std::string trim(const std::string& s) {
  size_t begin = 0, end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

bool parse_cell(const std::string& cell, uint64_t& out) {
  std::string t = trim(cell);
  if (t.empty()) return false;
  out = 0;
  for (char ch : t) {
    if (!std::isdigit(static_cast<unsigned char>(ch))) return false;
    uint64_t digit = static_cast<uint64_t>(ch - '0');
    if (out > (UINT64_MAX - digit) / 10) return false;
    out = out * 10 + digit;
  }
  return true;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

}  // namespace

std::vector<PlainRecord> load_csv_records(std::istream& in, const std::string& name) {
  std::vector<PlainRecord> records;
  std::string line;
  size_t line_no = 0;
  size_t arity = 0;
  bool first_data_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_row(line);

    std::vector<uint64_t> values(cells.size());
    bool numeric = true;
    for (size_t i = 0; i < cells.size(); ++i) {
      if (!parse_cell(cells[i], values[i])) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first_data_line) continue;  // optional header row
      fail(Errc::io_error,
           name + ": non-integer cell at line " + std::to_string(line_no));
    }
    first_data_line = false;

    if (values.size() < 2) {
      fail(Errc::io_error, name + ": line " + std::to_string(line_no) +
                               " needs at least one attribute and a label");
    }
    if (arity == 0) {
      arity = values.size();
    } else if (values.size() != arity) {
      fail(Errc::schema_mismatch, name + ": line " + std::to_string(line_no) + " has " +
                                      std::to_string(values.size()) +
                                      " cells, earlier rows have " + std::to_string(arity));
    }
    PlainRecord record;
    record.label = values.back();
    values.pop_back();
    record.attributes = std::move(values);
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<PlainRecord> load_csv_records_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open " + path);
  return load_csv_records(in, path);
}

void save_csv_records(const std::string& path, const std::vector<PlainRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot write " + path);
  for (const PlainRecord& record : records) {
    for (uint64_t v : record.attributes) out << v << ',';
    out << record.label << "\n";
  }
  if (!out.flush()) fail(Errc::io_error, "write failed for " + path);
}

}  // namespace ppknn
