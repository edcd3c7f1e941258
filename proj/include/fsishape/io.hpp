#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fsishape/fem.hpp"

namespace fsi {

// RFC-4180 CSV with a header row; all numbers printed with %.17g so equal
// inputs produce byte-identical files.
class CsvWriter {
public:
  explicit CsvWriter(std::vector<std::string> header);
  void row(const std::vector<std::string>& cells);
  std::string& cell_buffer();
  void write(const std::string& path) const;
  std::string str() const;

  static std::string num(double v);
  static std::string num(int v);

private:
  std::vector<std::string> lines_;
};

// Legacy ASCII VTK export: quadratic triangles carrying vector point data,
// cell-averaged scalars as cell data.
struct VtkField {
  std::string name;
  const DiscreteField* field;
};
void write_vtk(const std::string& path, const Mesh& mesh, Region region,
               const std::vector<VtkField>& point_fields,
               const std::vector<VtkField>& cell_scalar_fields);

uint64_t fnv1a(const std::string& data);
void write_manifest(const std::string& path, const std::string& config_text,
                    const std::string& command);

void ensure_directory(const std::string& path);
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

} // namespace fsi
