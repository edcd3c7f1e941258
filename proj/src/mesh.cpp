#include "fsishape/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace fsi {

namespace {
constexpr double kPi = std::numbers::pi;
}

InterfaceCurve InterfaceCurve::circle(double r) {
  InterfaceCurve c;
  c.type = Type::Circle;
  c.p0 = r;
  return c;
}

InterfaceCurve InterfaceCurve::ellipse(double a, double b) {
  InterfaceCurve c;
  c.type = Type::Ellipse;
  c.p0 = a;
  c.p1 = b;
  return c;
}

InterfaceCurve InterfaceCurve::star(double r0, double amplitude, int lobes) {
  InterfaceCurve c;
  c.type = Type::Star;
  c.p0 = r0;
  c.p1 = amplitude;
  c.p2 = lobes;
  return c;
}

InterfaceCurve InterfaceCurve::parse(const std::string& text) {
  auto open = text.find('(');
  auto close = text.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw Error(ErrorCode::InvalidConfig, "interface curve must look like circle(r): got '" + text + "'");
  std::string name = text.substr(0, open);
  std::string args = text.substr(open + 1, close - open - 1);
  std::vector<double> vals;
  std::stringstream ss(args);
  std::string tok;
  while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
  if (name == "circle" && vals.size() == 1) return circle(vals[0]);
  if (name == "ellipse" && vals.size() == 2) return ellipse(vals[0], vals[1]);
  if (name == "star" && vals.size() == 3) return star(vals[0], vals[1], static_cast<int>(vals[2]));
  throw Error(ErrorCode::InvalidConfig, "unknown interface curve '" + text + "'");
}

double InterfaceCurve::radius(double theta) const {
  switch (type) {
    case Type::Circle: return p0;
    case Type::Ellipse: {
      double c = std::cos(theta), s = std::sin(theta);
      return p0 * p1 / std::sqrt(p1 * p1 * c * c + p0 * p0 * s * s);
    }
    case Type::Star: return p0 * (1.0 + p1 * std::cos(p2 * theta));
  }
  return p0;
}

double InterfaceCurve::perimeter() const {
  const int n = 2048;
  double len = 0.0;
  Vec2 prev = point(0.0);
  for (int i = 1; i <= n; ++i) {
    Vec2 cur = point(2.0 * kPi * i / n);
    len += (cur - prev).norm();
    prev = cur;
  }
  return len;
}

std::string InterfaceCurve::str() const {
  char buf[96];
  switch (type) {
    case Type::Circle: std::snprintf(buf, sizeof buf, "circle(%g)", p0); break;
    case Type::Ellipse: std::snprintf(buf, sizeof buf, "ellipse(%g,%g)", p0, p1); break;
    case Type::Star: std::snprintf(buf, sizeof buf, "star(%g,%g,%d)", p0, p1, static_cast<int>(p2)); break;
  }
  return buf;
}

void GeometryConfig::validate() const {
  if (box_half_width <= 0 || support_radius <= 0 || target_edge_length <= 0)
    throw Error(ErrorCode::InvalidConfig, "geometry lengths must be positive");
  const int n = 1024;
  for (int i = 0; i < n; ++i) {
    double theta = 2.0 * kPi * i / n;
    double r = interface_curve.radius(theta);
    if (!(r > 0.0))
      throw Error(ErrorCode::NestingViolation, "interface curve radius not positive (curve not simple)");
    if (r <= support_radius)
      throw Error(ErrorCode::NestingViolation, "support disk not strictly inside the interface curve");
    Vec2 p = interface_curve.point(theta);
    if (std::fabs(p.x) >= box_half_width || std::fabs(p.y) >= box_half_width)
      throw Error(ErrorCode::NestingViolation, "interface curve not strictly inside the box");
  }
}

// ---- topology ----

void Mesh::finalize() {
  const int nv = static_cast<int>(nodes.size());
  std::map<std::pair<int, int>, int> edge_ids;
  edges.clear();
  tri_edges.assign(tris.size(), {-1, -1, -1});
  for (size_t t = 0; t < tris.size(); ++t) {
    for (int k = 0; k < 3; ++k) {
      int a = tris[t].v[k], b = tris[t].v[(k + 1) % 3];
      if (a < 0 || b < 0 || a >= nv || b >= nv)
        throw Error(ErrorCode::InvalidMesh, "triangle vertex index out of range");
      auto key = std::minmax(a, b);
      auto [it, inserted] = edge_ids.try_emplace(key, static_cast<int>(edges.size()));
      if (inserted) edges.push_back(key);
      tri_edges[t][k] = it->second;
    }
  }
  edge_tris.assign(edges.size(), {-1, -1});
  for (size_t t = 0; t < tris.size(); ++t) {
    for (int k = 0; k < 3; ++k) {
      auto& adj = edge_tris[tri_edges[t][k]];
      if (adj[0] < 0) adj[0] = static_cast<int>(t);
      else if (adj[1] < 0) adj[1] = static_cast<int>(t);
      else throw Error(ErrorCode::InvalidMesh, "edge shared by more than two triangles");
    }
  }

  bedge_edge.assign(bedges.size(), -1);
  bedge_tri_solid.assign(bedges.size(), -1);
  bedge_tri_fluid.assign(bedges.size(), -1);
  vertex_tags.assign(nodes.size(), 0);
  edge_tags.assign(edges.size(), 0);
  for (size_t i = 0; i < bedges.size(); ++i) {
    auto key = std::minmax(bedges[i].a, bedges[i].b);
    auto it = edge_ids.find(key);
    if (it == edge_ids.end())
      throw Error(ErrorCode::InvalidMesh, "boundary edge is not an edge of any triangle");
    bedge_edge[i] = it->second;
    uint8_t bit = static_cast<uint8_t>(1u << static_cast<int>(bedges[i].tag));
    vertex_tags[bedges[i].a] |= bit;
    vertex_tags[bedges[i].b] |= bit;
    edge_tags[it->second] |= bit;
    for (int side : edge_tris[it->second]) {
      if (side < 0) continue;
      if (tris[side].region == Region::Solid) bedge_tri_solid[i] = side;
      else bedge_tri_fluid[i] = side;
    }
  }

  interface_nodes.clear();
  for (const auto& be : bedges) {
    if (be.tag == BoundaryTag::Gamma0) {
      interface_nodes.push_back(be.a);
      interface_nodes.push_back(be.b);
    }
  }
  std::sort(interface_nodes.begin(), interface_nodes.end());
  interface_nodes.erase(std::unique(interface_nodes.begin(), interface_nodes.end()),
                        interface_nodes.end());
}

double Mesh::tri_area(int t) const {
  Vec2 a = nodes[tris[t].v[0]], b = nodes[tris[t].v[1]], c = nodes[tris[t].v[2]];
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
}

int Mesh::tri_count(Region r) const {
  int n = 0;
  for (const auto& t : tris) n += (t.region == r);
  return n;
}

double Mesh::min_angle_deg() const {
  double worst = 180.0;
  for (size_t t = 0; t < tris.size(); ++t) {
    Vec2 p[3] = {nodes[tris[t].v[0]], nodes[tris[t].v[1]], nodes[tris[t].v[2]]};
    for (int k = 0; k < 3; ++k) {
      Vec2 u = p[(k + 1) % 3] - p[k], v = p[(k + 2) % 3] - p[k];
      double cosang = u.dot(v) / (u.norm() * v.norm());
      cosang = std::clamp(cosang, -1.0, 1.0);
      worst = std::min(worst, std::acos(cosang) * 180.0 / kPi);
    }
  }
  return worst;
}

void Mesh::validate(double min_angle_floor) const {
  for (size_t t = 0; t < tris.size(); ++t)
    if (tri_area(static_cast<int>(t)) <= 0.0)
      throw Error(ErrorCode::InvalidMesh, "orientation: triangle " + std::to_string(t) +
                                              " is not positively oriented");
  // conforming interface: a solid/fluid edge must be a Gamma0 boundary edge, and vice versa
  std::vector<uint8_t> is_gamma0_edge(edges.size(), 0);
  for (size_t i = 0; i < bedges.size(); ++i)
    if (bedges[i].tag == BoundaryTag::Gamma0) is_gamma0_edge[bedge_edge[i]] = 1;
  for (size_t e = 0; e < edges.size(); ++e) {
    auto [t0, t1] = edge_tris[e];
    bool mixed = t0 >= 0 && t1 >= 0 && tris[t0].region != tris[t1].region;
    if (mixed && !is_gamma0_edge[e])
      throw Error(ErrorCode::InvalidMesh, "interface: solid/fluid edge not tagged gamma0");
    if (is_gamma0_edge[e] && !mixed)
      throw Error(ErrorCode::InvalidMesh, "interface: gamma0 edge not between one solid and one fluid triangle");
  }
  for (size_t i = 0; i < bedges.size(); ++i) {
    auto [t0, t1] = edge_tris[bedge_edge[i]];
    int nadj = (t0 >= 0) + (t1 >= 0);
    switch (bedges[i].tag) {
      case BoundaryTag::Gamma0:
        if (bedge_tri_solid[i] < 0 || bedge_tri_fluid[i] < 0)
          throw Error(ErrorCode::InvalidMesh, "gamma0 edge must border one solid and one fluid triangle");
        break;
      case BoundaryTag::GammaOmega:
        if (nadj != 1 || bedge_tri_solid[i] < 0)
          throw Error(ErrorCode::InvalidMesh, "gammaomega edge must border exactly one solid triangle");
        break;
      case BoundaryTag::Outer:
        if (nadj != 1 || bedge_tri_fluid[i] < 0)
          throw Error(ErrorCode::InvalidMesh, "outer edge must border exactly one fluid triangle");
        break;
    }
  }
  double angle = min_angle_deg();
  if (angle < min_angle_floor)
    throw Error(ErrorCode::InvalidMesh, "min angle " + std::to_string(angle) +
                                            " below floor " + std::to_string(min_angle_floor));
}

// ---- generator ----

namespace {

double box_radius(double L, double theta) {
  double c = std::fabs(std::cos(theta)), s = std::fabs(std::sin(theta));
  return L / std::max(c, s);
}

} // namespace

Mesh generate_annular_mesh(const GeometryConfig& cfg) {
  cfg.validate();
  const double h = cfg.target_edge_length;
  const double L = cfg.box_half_width;
  const double rw = cfg.support_radius;
  const auto& curve = cfg.interface_curve;

  // Angular grid anchored at the box corner direction -pi/4 so the square's
  // corners are grid rays; the outer ring walks the square at equal arc
  // length, interior fluid rings blend between the curve and the square.
  const double per = curve.perimeter();
  const int scale = 1 << std::max(0, cfg.subdivision);
  int ntheta = scale * 4 * std::max(4, static_cast<int>(std::lround(per / (4.0 * h))));
  std::vector<double> thetas(ntheta);
  for (int j = 0; j < ntheta; ++j) thetas[j] = -kPi / 4 + 2.0 * kPi * j / ntheta;

  // equal-arc walk of the square, counterclockwise from the corner (L, -L)
  std::vector<Vec2> box_anchor(ntheta);
  const Vec2 corner[5] = {{L, -L}, {L, L}, {-L, L}, {-L, -L}, {L, -L}};
  for (int j = 0; j < ntheta; ++j) {
    double u = 4.0 * j / ntheta; // side index + fraction
    int side = static_cast<int>(u);
    double frac = u - side;
    box_anchor[j] = corner[side] + (corner[side + 1] - corner[side]) * frac;
  }

  double mean_g = 0.0, mean_b = 0.0;
  for (int j = 0; j < ntheta; ++j) {
    mean_g += curve.radius(thetas[j]);
    mean_b += box_radius(L, thetas[j]);
  }
  mean_g /= ntheta;
  mean_b /= ntheta;
  // Geometric radial grading keeps cells near-square at every radius.
  double dtheta_base = 2.0 * kPi * scale / ntheta;
  int ns = scale * std::max(2, static_cast<int>(std::lround(std::log(mean_g / rw) / dtheta_base)));
  int nf = scale *
           std::max(2, static_cast<int>(std::lround(std::log(mean_b / mean_g) / dtheta_base)));
  int nrings = ns + nf + 1;

  Mesh mesh;
  mesh.nodes.resize(static_cast<size_t>(nrings) * ntheta);
  auto node_id = [&](int ring, int j) { return ring * ntheta + (j % ntheta); };
  for (int j = 0; j < ntheta; ++j) {
    double theta = thetas[j];
    double rg = curve.radius(theta);
    Vec2 dir{std::cos(theta), std::sin(theta)};
    for (int i = 0; i <= ns; ++i) {
      double r = rw * std::pow(rg / rw, static_cast<double>(i) / ns);
      mesh.nodes[node_id(i, j)] = dir * r;
    }
    Vec2 cpt = dir * rg;
    double ratio = box_anchor[j].norm() / rg;
    for (int i = 1; i <= nf; ++i) {
      double sigma = (std::pow(ratio, static_cast<double>(i) / nf) - 1.0) / (ratio - 1.0);
      mesh.nodes[node_id(ns + i, j)] = cpt + (box_anchor[j] - cpt) * sigma;
    }
  }

  auto tri_min_angle = [&](int a, int b, int c) {
    Vec2 p[3] = {mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]};
    double worst = kPi;
    for (int k = 0; k < 3; ++k) {
      Vec2 u = p[(k + 1) % 3] - p[k], v = p[(k + 2) % 3] - p[k];
      double cosang = std::clamp(u.dot(v) / (u.norm() * v.norm()), -1.0, 1.0);
      worst = std::min(worst, std::acos(cosang));
    }
    return worst;
  };
  for (int i = 0; i + 1 < nrings; ++i) {
    Region reg = i < ns ? Region::Solid : Region::Fluid;
    for (int j = 0; j < ntheta; ++j) {
      int a = node_id(i, j), b = node_id(i + 1, j), c = node_id(i + 1, j + 1), d = node_id(i, j + 1);
      // split along the diagonal that maximizes the worse angle
      double q_ac = std::min(tri_min_angle(a, b, c), tri_min_angle(a, c, d));
      double q_bd = std::min(tri_min_angle(a, b, d), tri_min_angle(b, c, d));
      if (q_ac >= q_bd) {
        mesh.tris.push_back({{a, b, c}, reg});
        mesh.tris.push_back({{a, c, d}, reg});
      } else {
        mesh.tris.push_back({{a, b, d}, reg});
        mesh.tris.push_back({{b, c, d}, reg});
      }
    }
  }

  for (int j = 0; j < ntheta; ++j) {
    mesh.bedges.push_back({node_id(0, j), node_id(0, j + 1), BoundaryTag::GammaOmega});
    mesh.bedges.push_back({node_id(ns, j), node_id(ns, j + 1), BoundaryTag::Gamma0});
    mesh.bedges.push_back({node_id(nrings - 1, j), node_id(nrings - 1, j + 1), BoundaryTag::Outer});
  }

  mesh.finalize();

  // Laplacian smoothing of interior nodes; curve rings stay pinned.
  std::vector<uint8_t> pinned(mesh.nodes.size(), 0);
  for (int j = 0; j < ntheta; ++j) {
    pinned[node_id(0, j)] = pinned[node_id(ns, j)] = pinned[node_id(nrings - 1, j)] = 1;
  }
  std::vector<std::vector<int>> nbrs(mesh.nodes.size());
  for (auto [a, b] : mesh.edges) {
    nbrs[a].push_back(b);
    nbrs[b].push_back(a);
  }
  const double relax = 0.3;
  for (int sweep = 0; sweep < 2; ++sweep) {
    std::vector<Vec2> next = mesh.nodes;
    for (size_t v = 0; v < mesh.nodes.size(); ++v) {
      if (pinned[v] || nbrs[v].empty()) continue;
      Vec2 avg{0, 0};
      for (int u : nbrs[v]) avg += mesh.nodes[u];
      avg = avg * (1.0 / nbrs[v].size());
      next[v] = mesh.nodes[v] + (avg - mesh.nodes[v]) * relax;
    }
    mesh.nodes = next;
  }

  double angle = mesh.min_angle_deg();
  if (angle < cfg.min_angle_deg)
    throw Error(ErrorCode::QualityFailure, "min angle " + std::to_string(angle) +
                                               " below floor " + std::to_string(cfg.min_angle_deg));
  mesh.validate(cfg.min_angle_deg);
  return mesh;
}

// ---- text format ----

namespace {

struct LineReader {
  std::istream& in;
  int lineno = 0;
  std::string next() {
    std::string line;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      bool blank = true;
      for (char c : line)
        if (!std::isspace(static_cast<unsigned char>(c))) { blank = false; break; }
      if (!blank) return line;
    }
    throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno + 1) + ": unexpected end of file");
  }
};

} // namespace

Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open mesh file '" + path + "'");
  LineReader rd{in};

  auto expect = [&](std::istringstream& ss, const std::string& what) {
    if (ss.fail())
      throw Error(ErrorCode::ParseError, "line " + std::to_string(rd.lineno) + ": expected " + what);
  };

  {
    std::istringstream ss(rd.next());
    std::string magic;
    int version = 0;
    ss >> magic >> version;
    if (ss.fail() || magic != "fsimesh" || version != 1)
      throw Error(ErrorCode::ParseError, "line " + std::to_string(rd.lineno) + ": expected header 'fsimesh 1'");
  }

  Mesh mesh;
  {
    std::istringstream ss(rd.next());
    std::string kw;
    long n = -1;
    ss >> kw >> n;
    if (ss.fail() || kw != "nodes" || n < 0)
      throw Error(ErrorCode::ParseError, "line " + std::to_string(rd.lineno) + ": expected 'nodes N'");
    mesh.nodes.resize(n);
    for (long i = 0; i < n; ++i) {
      std::istringstream ls(rd.next());
      ls >> mesh.nodes[i].x >> mesh.nodes[i].y;
      expect(ls, "node coordinates 'x y'");
    }
  }
  {
    std::istringstream ss(rd.next());
    std::string kw;
    long m = -1;
    ss >> kw >> m;
    if (ss.fail() || kw != "triangles" || m < 0)
      throw Error(ErrorCode::ParseError, "line " + std::to_string(rd.lineno) + ": expected 'triangles M'");
    mesh.tris.resize(m);
    for (long i = 0; i < m; ++i) {
      std::istringstream ls(rd.next());
      std::string reg;
      ls >> mesh.tris[i].v[0] >> mesh.tris[i].v[1] >> mesh.tris[i].v[2] >> reg;
      expect(ls, "triangle 'i j k region'");
      if (reg == "solid") mesh.tris[i].region = Region::Solid;
      else if (reg == "fluid") mesh.tris[i].region = Region::Fluid;
      else throw Error(ErrorCode::ParseError, "line " + std::to_string(rd.lineno) + ": region must be solid|fluid");
    }
  }
  {
    std::istringstream ss(rd.next());
    std::string kw;
    long k = -1;
    ss >> kw >> k;
    if (ss.fail() || kw != "bedges" || k < 0)
      throw Error(ErrorCode::ParseError, "line " + std::to_string(rd.lineno) + ": expected 'bedges K'");
    mesh.bedges.resize(k);
    for (long i = 0; i < k; ++i) {
      std::istringstream ls(rd.next());
      std::string tag;
      ls >> mesh.bedges[i].a >> mesh.bedges[i].b >> tag;
      expect(ls, "boundary edge 'i j tag'");
      if (tag == "gamma0") mesh.bedges[i].tag = BoundaryTag::Gamma0;
      else if (tag == "gammaomega") mesh.bedges[i].tag = BoundaryTag::GammaOmega;
      else if (tag == "outer") mesh.bedges[i].tag = BoundaryTag::Outer;
      else throw Error(ErrorCode::ParseError, "line " + std::to_string(rd.lineno) + ": tag must be gamma0|gammaomega|outer");
    }
  }

  mesh.finalize();
  mesh.validate(20.0);
  return mesh;
}

void save_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write mesh file '" + path + "'");
  char buf[80];
  out << "fsimesh 1\n";
  out << "nodes " << mesh.nodes.size() << "\n";
  for (const auto& p : mesh.nodes) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x, p.y);
    out << buf;
  }
  out << "triangles " << mesh.tris.size() << "\n";
  for (const auto& t : mesh.tris)
    out << t.v[0] << " " << t.v[1] << " " << t.v[2] << " "
        << (t.region == Region::Solid ? "solid" : "fluid") << "\n";
  out << "bedges " << mesh.bedges.size() << "\n";
  for (const auto& e : mesh.bedges) {
    const char* tag = e.tag == BoundaryTag::Gamma0 ? "gamma0"
                      : e.tag == BoundaryTag::GammaOmega ? "gammaomega" : "outer";
    out << e.a << " " << e.b << " " << tag << "\n";
  }
}

Mesh deform_mesh(const Mesh& mesh, const VectorField& phi) {
  Mesh out = mesh;
  for (auto& p : out.nodes) p += phi.eval(p);
  for (size_t t = 0; t < out.tris.size(); ++t)
    if (out.tri_area(static_cast<int>(t)) <= 0.0)
      throw Error(ErrorCode::TangledMesh, "deformed triangle " + std::to_string(t) +
                                              " has non-positive area");
  return out;
}

Vec2 boundary_normal(const Mesh& mesh, int bedge_index) {
  const auto& be = mesh.bedges[static_cast<size_t>(bedge_index)];
  int tri = -1;
  switch (be.tag) {
    case BoundaryTag::Gamma0:
    case BoundaryTag::GammaOmega:
      tri = mesh.bedge_tri_solid[bedge_index];
      break;
    case BoundaryTag::Outer:
      tri = mesh.bedge_tri_fluid[bedge_index];
      break;
  }
  if (tri < 0) throw Error(ErrorCode::InvalidMesh, "boundary edge has no adjacent triangle of the expected region");
  Vec2 a = mesh.nodes[be.a], b = mesh.nodes[be.b];
  Vec2 tang = b - a;
  Vec2 n{tang.y, -tang.x};
  int third = -1;
  for (int k = 0; k < 3; ++k) {
    int v = mesh.tris[tri].v[k];
    if (v != be.a && v != be.b) third = v;
  }
  Vec2 inward = mesh.nodes[third] - a;
  if (n.dot(inward) > 0) n = -n;
  double len = n.norm();
  return n * (1.0 / len);
}

} // namespace fsi
