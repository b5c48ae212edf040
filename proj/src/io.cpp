#include "io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace isophase {

std::string fmt_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_text(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  out << content;
  if (!out) fail(ErrorCode::kIo, "write failed for " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string to_csv(const CsvTable& t) {
  std::string s;
  for (std::size_t i = 0; i < t.header.size(); ++i) s += (i ? "," : "") + t.header[i];
  s += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) s += ',';
      s += fmt_num(row[i]);
    }
    s += '\n';
  }
  return s;
}

void write_csv(const std::string& path, const CsvTable& t) { write_text(path, to_csv(t)); }

CsvTable read_csv(const std::string& path) {
  std::istringstream in(read_text(path));
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::kIo, "empty csv " + path);
  {
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.header.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        fail(ErrorCode::kIo, "bad number '" + cell + "' in " + path);
      }
    }
    if (row.size() != t.header.size()) fail(ErrorCode::kIo, "ragged row in " + path);
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_field_csv(const std::string& path, const Field& f) {
  CsvTable t;
  t.header.push_back("x");
  for (int c = 0; c < f.components(); ++c) t.header.push_back("component_" + std::to_string(c));
  const Grid& g = f.grid();
  for (int j = 0; j < g.M; ++j) {
    std::vector<double> row{g.point(j)};
    for (int c = 0; c < f.components(); ++c) row.push_back(f(c, j));
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
  nlohmann::json meta{{"M", g.M}, {"L", g.L}, {"components", f.components()}, {"layout", "component-major"}};
  write_text(path + ".json", meta.dump(2) + "\n");
}

Field read_field_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  require(t.header.size() >= 2 && t.header[0] == "x", ErrorCode::kIo, "field csv: bad header in " + path);
  const int n = int(t.header.size()) - 1;
  const int M = int(t.rows.size());
  double L;
  if (std::filesystem::exists(path + ".json")) {
    const auto meta = nlohmann::json::parse(read_text(path + ".json"));
    L = meta.at("L").get<double>();
    require(meta.at("M").get<int>() == M, ErrorCode::kIo, "field csv: sidecar M disagrees with rows");
  } else {
    require(M >= 2, ErrorCode::kIo, "field csv: too few rows");
    L = M * (t.rows[1][0] - t.rows[0][0]);
  }
  Field f(Grid(M, L), n);
  for (int j = 0; j < M; ++j)
    for (int c = 0; c < n; ++c) f(c, j) = t.rows[j][c + 1];
  return f;
}

}  // namespace isophase
