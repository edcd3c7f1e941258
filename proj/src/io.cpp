#include "fsishape/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fsi {

CsvWriter::CsvWriter(std::vector<std::string> header) {
  std::string line;
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) line += ",";
    line += header[i];
  }
  lines_.push_back(line);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  std::string line;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ",";
    bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
    if (!quote) {
      line += cells[i];
    } else {
      line += '"';
      for (char c : cells[i]) {
        if (c == '"') line += '"';
        line += c;
      }
      line += '"';
    }
  }
  lines_.push_back(line);
}

std::string CsvWriter::num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string CsvWriter::num(int v) { return std::to_string(v); }

std::string CsvWriter::str() const {
  std::string out;
  for (const auto& l : lines_) {
    out += l;
    out += "\r\n";
  }
  return out;
}

void CsvWriter::write(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  f << str();
}

void write_vtk(const std::string& path, const Mesh& mesh, Region region,
               const std::vector<VtkField>& point_fields,
               const std::vector<VtkField>& cell_scalar_fields) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  char buf[128];

  // collect P2 points of the region: vertices then edge midpoints
  std::vector<int> vmap(mesh.nodes.size(), -1), emap(mesh.edges.size(), -1);
  std::vector<Vec2> pts;
  std::vector<int> tris;
  for (size_t t = 0; t < mesh.tris.size(); ++t) {
    if (mesh.tris[t].region != region) continue;
    tris.push_back(static_cast<int>(t));
    for (int k = 0; k < 3; ++k) {
      int v = mesh.tris[t].v[k];
      if (vmap[v] < 0) {
        vmap[v] = static_cast<int>(pts.size());
        pts.push_back(mesh.nodes[v]);
      }
      int e = mesh.tri_edges[t][k];
      if (emap[e] < 0) {
        emap[e] = static_cast<int>(pts.size());
        auto [a, b] = mesh.edges[e];
        pts.push_back((mesh.nodes[a] + mesh.nodes[b]) * 0.5);
      }
    }
  }

  f << "# vtk DataFile Version 3.0\nfsishape fields\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  f << "POINTS " << pts.size() << " double\n";
  for (const auto& p : pts) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g 0\n", p.x, p.y);
    f << buf;
  }
  f << "CELLS " << tris.size() << " " << tris.size() * 7 << "\n";
  for (int t : tris) {
    f << "6 " << vmap[mesh.tris[t].v[0]] << " " << vmap[mesh.tris[t].v[1]] << " "
      << vmap[mesh.tris[t].v[2]] << " " << emap[mesh.tri_edges[t][0]] << " "
      << emap[mesh.tri_edges[t][1]] << " " << emap[mesh.tri_edges[t][2]] << "\n";
  }
  f << "CELL_TYPES " << tris.size() << "\n";
  for (size_t i = 0; i < tris.size(); ++i) f << "22\n";

  if (!point_fields.empty()) {
    f << "POINT_DATA " << pts.size() << "\n";
    for (const auto& pf : point_fields) {
      const FunctionSpace& sp = *pf.field->space;
      f << "VECTORS " << pf.name << " double\n";
      std::vector<Vec2> vals(pts.size());
      for (size_t v = 0; v < mesh.nodes.size(); ++v) {
        if (vmap[v] < 0) continue;
        int d = sp.vertex_dof(static_cast<int>(v));
        vals[vmap[v]] = d >= 0 ? Vec2{pf.field->coef[2 * d], pf.field->coef[2 * d + 1]} : Vec2{0, 0};
      }
      for (size_t e = 0; e < mesh.edges.size(); ++e) {
        if (emap[e] < 0) continue;
        int d = sp.edge_dof(static_cast<int>(e));
        vals[emap[e]] = d >= 0 ? Vec2{pf.field->coef[2 * d], pf.field->coef[2 * d + 1]} : Vec2{0, 0};
      }
      for (const auto& v : vals) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g 0\n", v.x, v.y);
        f << buf;
      }
    }
  }
  if (!cell_scalar_fields.empty()) {
    f << "CELL_DATA " << tris.size() << "\n";
    for (const auto& cf : cell_scalar_fields) {
      f << "SCALARS " << cf.name << " double 1\nLOOKUP_TABLE default\n";
      for (int t : tris) {
        double avg = eval_scalar(*cf.field, t, {1.0 / 3.0, 1.0 / 3.0});
        std::snprintf(buf, sizeof buf, "%.17g\n", avg);
        f << buf;
      }
    }
  }
}

uint64_t fnv1a(const std::string& data) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void write_manifest(const std::string& path, const std::string& config_text,
                    const std::string& command) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config_text)));
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  f << "tool: fsishape 1.0.0\n";
  f << "command: " << command << "\n";
  f << "config_fnv1a: " << buf << "\n";
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create directory '" + path + "': " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  f << content;
}

std::string& CsvWriter::cell_buffer() { return lines_.back(); }

} // namespace fsi
