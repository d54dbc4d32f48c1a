#include "linfvar/problem_file.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "linfvar/errors.hpp"

namespace linfvar {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw InputError("problem." + path + ": " + what);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) schema_error(path + key, "missing field");
  return obj.at(key);
}

int positive_int(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() < 1) schema_error(path, "expected a positive integer");
  return static_cast<int>(v.get<long long>());
}

Eigen::VectorXd real_array(const json& v, int len, const std::string& path) {
  if (!v.is_array() || static_cast<int>(v.size()) != len)
    schema_error(path, "expected an array of " + std::to_string(len) + " numbers");
  Eigen::VectorXd out(len);
  for (int i = 0; i < len; ++i) {
    const json& e = v[static_cast<std::size_t>(i)];
    if (!e.is_number()) schema_error(path + "[" + std::to_string(i) + "]", "expected a number");
    out[i] = e.get<double>();
  }
  return out;
}

std::vector<int> int_array(const json& v, int len, const std::string& path) {
  if (!v.is_array() || static_cast<int>(v.size()) != len)
    schema_error(path, "expected an array of " + std::to_string(len) + " integers");
  std::vector<int> out;
  for (int i = 0; i < len; ++i) {
    const json& e = v[static_cast<std::size_t>(i)];
    if (!e.is_number_integer()) schema_error(path + "[" + std::to_string(i) + "]", "expected an integer");
    out.push_back(e.get<int>());
  }
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(s, &used);
    while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
    return used == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

Eigen::MatrixXd read_grid_csv(const std::filesystem::path& path, const DomainBox& box, int N) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open grid file " + path.string());
  const int n = box.dim();
  Eigen::MatrixXd samples = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(box.node_count()), N,
                                                      std::nan(""));
  std::vector<char> seen(box.node_count(), 0);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    double first = 0;
    if (line_no == 1 && !cells.empty() && !parse_double(cells[0], first)) continue;  // header
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (static_cast<int>(cells.size()) != n + N)
      throw InputError(where + ": expected " + std::to_string(n + N) + " columns");
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      double v = 0;
      if (!parse_double(cells[static_cast<std::size_t>(i)], v) || v != std::floor(v))
        throw InputError(where + ": bad node index");
      idx[static_cast<std::size_t>(i)] = static_cast<int>(v);
    }
    const NodeIndex node = box.linear_index(idx);
    if (seen[node]) throw InputError(where + ": duplicate node");
    seen[node] = 1;
    for (int a = 0; a < N; ++a) {
      double v = 0;
      if (!parse_double(cells[static_cast<std::size_t>(n + a)], v)) throw InputError(where + ": bad value");
      samples(static_cast<Eigen::Index>(node), a) = v;
    }
  }
  for (NodeIndex node = 0; node < box.node_count(); ++node)
    if (!seen[node]) throw InputError(path.string() + ": node " + std::to_string(node) + " missing");
  return samples;
}

void write_grid_csv(const std::filesystem::path& path, const DomainBox& box,
                    const Eigen::MatrixXd& samples) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write grid file " + path.string());
  const int n = box.dim();
  for (int i = 1; i <= n; ++i) out << "i" << i << ",";
  for (Eigen::Index a = 1; a <= samples.cols(); ++a) out << "u" << a << (a < samples.cols() ? "," : "\n");
  out.precision(17);
  for (NodeIndex node = 0; node < box.node_count(); ++node) {
    for (int k : box.multi_index(node)) out << k << ",";
    for (Eigen::Index a = 0; a < samples.cols(); ++a)
      out << samples(static_cast<Eigen::Index>(node), a) << (a + 1 < samples.cols() ? "," : "\n");
  }
}

Problem parse_problem(const std::string& json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("problem file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InputError("problem: expected a JSON object");

  Problem p;
  p.canonical = doc.dump();
  p.n = positive_int(require(doc, "n", ""), "n");
  p.N = positive_int(require(doc, "N", ""), "N");

  const json& dom = require(doc, "domain", "");
  p.domain = DomainBox(real_array(require(dom, "lo", "domain."), p.n, "domain.lo"),
                       real_array(require(dom, "hi", "domain."), p.n, "domain.hi"),
                       int_array(require(dom, "resolution", "domain."), p.n, "domain.resolution"));

  const json& h = require(doc, "H", "");
  if (!h.is_string()) schema_error("H", "expected a string");
  p.H_source = h.get<std::string>();
  p.H = Hamiltonian::parse(p.H_source, p.n, p.N);

  const json& u = require(doc, "u", "");
  if (u.is_array()) {
    for (std::size_t a = 0; a < u.size(); ++a) {
      if (!u[a].is_string()) schema_error("u[" + std::to_string(a) + "]", "expected a string");
      p.u_source.push_back(u[a].get<std::string>());
    }
    if (static_cast<int>(p.u_source.size()) != p.N)
      schema_error("u", "expected " + std::to_string(p.N) + " components");
    p.u = MapField::parse(p.u_source, p.n, p.N);
  } else if (u.is_object()) {
    const json& g = require(u, "grid", "u.");
    if (!g.is_string()) schema_error("u.grid", "expected a path string");
    p.u = MapField::grid(p.domain, read_grid_csv(base_dir / g.get<std::string>(), p.domain, p.N));
  } else {
    schema_error("u", "expected an array of expressions or {\"grid\": path}");
  }

  Subdomain omega = Subdomain::whole(p.domain);
  if (doc.contains("subdomain")) {
    const json& s = doc.at("subdomain");
    omega = Subdomain::from_box(p.domain, real_array(require(s, "lo", "subdomain."), p.n, "subdomain.lo"),
                                real_array(require(s, "hi", "subdomain."), p.n, "subdomain.hi"));
  }
  if (doc.contains("singular")) {
    const json& s = doc.at("singular");
    if (!s.is_array()) schema_error("singular", "expected an array");
    for (std::size_t k = 0; k < s.size(); ++k) {
      const std::string path = "singular[" + std::to_string(k) + "].";
      const int axis = positive_int(require(s[k], "axis", path), path + "axis");
      if (axis > p.n) schema_error(path + "axis", "axis exceeds n");
      const json& val = require(s[k], "value", path);
      if (!val.is_number()) schema_error(path + "value", "expected a number");
      const double v = val.get<double>();
      const double slack = 1e-9 * p.domain.spacing(axis - 1);
      for (NodeIndex node = 0; node < p.domain.node_count(); ++node)
        if (std::abs(p.domain.coordinates(node)[axis - 1] - v) <= slack)
          p.declared_singular.push_back(node);
    }
    if (!p.declared_singular.empty()) omega = omega.with_singular(p.declared_singular);
  }
  const Subdomain scanned = prescan_singular(omega, p.u, p.H);
  for (NodeIndex node : omega.closure())
    if (scanned.singular(node)) p.detected_singular.push_back(node);
  p.omega = scanned;
  return p;
}

Problem load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open problem file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str(), path.parent_path());
}

}  // namespace linfvar
