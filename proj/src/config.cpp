#include "fsishape/config.hpp"

#include <cctype>
#include <sstream>

namespace fsi {

namespace {

struct KeyValue {
  std::string section, key;
  std::vector<std::string> values; // tokens; quoted strings arrive unquoted
  int line;
};

std::vector<KeyValue> tokenize_config(const std::string& text) {
  std::vector<KeyValue> out;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    size_t e = line.find_last_not_of(" \t\r");
    std::string s = line.substr(b, e - b + 1);
    if (s.front() == '[') {
      if (s.back() != ']')
        throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(lineno) + ": unterminated section header");
      section = s.substr(1, s.size() - 2);
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(lineno) + ": expected key = value");
    KeyValue kv;
    kv.section = section;
    kv.line = lineno;
    kv.key = s.substr(0, eq);
    while (!kv.key.empty() && std::isspace(static_cast<unsigned char>(kv.key.back()))) kv.key.pop_back();
    std::string rest = s.substr(eq + 1);
    size_t i = 0;
    while (i < rest.size()) {
      if (std::isspace(static_cast<unsigned char>(rest[i]))) {
        ++i;
        continue;
      }
      if (rest[i] == '"') {
        size_t close = rest.find('"', i + 1);
        if (close == std::string::npos)
          throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(lineno) + ": unterminated quote");
        kv.values.push_back(rest.substr(i + 1, close - i - 1));
        i = close + 1;
      } else {
        size_t end = i;
        while (end < rest.size() && !std::isspace(static_cast<unsigned char>(rest[end]))) ++end;
        kv.values.push_back(rest.substr(i, end - i));
        i = end;
      }
    }
    if (kv.values.empty())
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(lineno) + ": key '" + kv.key + "' has no value");
    out.push_back(std::move(kv));
  }
  return out;
}

double as_number(const KeyValue& kv) {
  if (kv.values.size() != 1)
    throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(kv.line) + ": '" + kv.key + "' expects one number");
  try {
    size_t pos = 0;
    double v = std::stod(kv.values[0], &pos);
    if (pos != kv.values[0].size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(kv.line) + ": '" + kv.key + "' is not a number");
  }
}

VectorField as_field(const KeyValue& kv) {
  if (kv.values.size() != 2)
    throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(kv.line) + ": '" + kv.key +
                                              "' expects two quoted component expressions");
  return VectorField::parse(kv.values[0], kv.values[1]);
}

} // namespace

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  cfg.raw_text = text;
  std::string jf_src, js_src, functional_name = "energy";
  bool has_jf = false, has_js = false;

  for (const auto& kv : tokenize_config(text)) {
    auto bad_key = [&]() -> Error {
      return Error(ErrorCode::InvalidConfig, "line " + std::to_string(kv.line) + ": unknown key '" +
                                                 kv.key + "' in section [" + kv.section + "]");
    };
    if (kv.section == "geometry") {
      if (kv.key == "box_half_width") cfg.geometry.box_half_width = as_number(kv);
      else if (kv.key == "support_radius") cfg.geometry.support_radius = as_number(kv);
      else if (kv.key == "interface") cfg.geometry.interface_curve = InterfaceCurve::parse(kv.values[0]);
      else if (kv.key == "edge_length") cfg.geometry.target_edge_length = as_number(kv);
      else if (kv.key == "min_angle") cfg.geometry.min_angle_deg = as_number(kv);
      else if (kv.key == "mesh_file") cfg.mesh_file = kv.values[0];
      else throw bad_key();
    } else if (kv.section == "physics") {
      if (kv.key == "nu") cfg.physics.nu = as_number(kv);
      else if (kv.key == "mu") cfg.physics.mu = as_number(kv);
      else if (kv.key == "f") cfg.physics.f = as_field(kv);
      else if (kv.key == "g") cfg.physics.g = as_field(kv);
      else throw bad_key();
    } else if (kv.section == "solver") {
      if (kv.key == "tol_abs") cfg.solver.tol_abs = as_number(kv);
      else if (kv.key == "tol_rel") cfg.solver.tol_rel = as_number(kv);
      else if (kv.key == "max_iter") cfg.solver.max_iter = static_cast<int>(as_number(kv));
      else if (kv.key == "damping") cfg.solver.damping = as_number(kv);
      else if (kv.key == "j_min") cfg.solver.j_min = as_number(kv);
      else throw bad_key();
    } else if (kv.section == "functional") {
      if (kv.key == "name") functional_name = kv.values[0];
      else if (kv.key == "jf") { jf_src = kv.values[0]; has_jf = true; }
      else if (kv.key == "js") { js_src = kv.values[0]; has_js = true; }
      else throw bad_key();
    } else if (kv.section == "directions") {
      cfg.directions.emplace_back(kv.key, as_field(kv));
    } else if (kv.section == "study") {
      if (kv.key == "kinds") {
        cfg.study.kinds.clear();
        for (const auto& v : kv.values) cfg.study.kinds.push_back(study_kind_from_string(v));
      } else if (kv.key == "levels") cfg.study.levels = static_cast<int>(as_number(kv));
      else if (kv.key == "load_scales") {
        cfg.study.load_scales.clear();
        for (const auto& v : kv.values) cfg.study.load_scales.push_back(std::stod(v));
      } else if (kv.key == "fd_steps") {
        cfg.study.fd_steps.clear();
        for (const auto& v : kv.values) cfg.study.fd_steps.push_back(std::stod(v));
      } else if (kv.key == "seed") cfg.study.seed = static_cast<uint64_t>(as_number(kv));
      else throw bad_key();
    } else if (kv.section == "output") {
      if (kv.key == "directory") cfg.output_dir = kv.values[0];
      else throw bad_key();
    } else {
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(kv.line) + ": unknown section [" +
                                                kv.section + "]");
    }
  }

  if (functional_name == "energy") {
    cfg.functional = FunctionalSpec::energy();
  } else if (functional_name == "custom") {
    if (!has_jf || !has_js)
      throw Error(ErrorCode::InvalidConfig, "custom functional needs both jf and js");
    cfg.functional = FunctionalSpec::custom("custom", jf_src, js_src);
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown functional '" + functional_name + "'");
  }

  cfg.geometry.validate();
  cfg.physics.validate();
  cfg.solver.validate();
  return cfg;
}

RunConfig RunConfig::parse_file(const std::string& path) { return parse(read_file(path)); }

} // namespace fsi
