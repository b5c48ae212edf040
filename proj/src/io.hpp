#pragma once

#include <string>
#include <vector>

#include "spectral.hpp"

namespace isophase {

// shortest round-trip decimal representation
std::string fmt_num(double v);

// Field CSV: header x,component_0,...,component_{n-1}; sidecar <path>.json holds grid metadata
void write_field_csv(const std::string& path, const Field& f);
Field read_field_csv(const std::string& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
std::string to_csv(const CsvTable& t);
void write_csv(const std::string& path, const CsvTable& t);
CsvTable read_csv(const std::string& path);

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

}  // namespace isophase
