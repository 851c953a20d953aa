#pragma once

#include <istream>
#include <string>
#include <vector>

#include "ppknn/records.hpp"

namespace ppknn {

/// Loads integer CSV rows: m attribute columns plus a final label column.
/// A first line containing any non-numeric cell is treated as a header and
/// skipped. Errors name the offending line.
std::vector<PlainRecord> load_csv_records(std::istream& in, const std::string& name);
std::vector<PlainRecord> load_csv_records_file(const std::string& path);

void save_csv_records(const std::string& path, const std::vector<PlainRecord>& records);

}  // namespace ppknn
