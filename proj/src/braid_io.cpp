#include "glv/braid.hpp"
#include "glv/errors.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace glv {

namespace {

std::string trimmed(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("bad number '" + s + "' in " + where);
  }
}

}  // namespace

Braid read_braid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open braid file " + path);

  Braid braid;
  bool have_domain = false;
  std::vector<double> ts;
  std::vector<vec3> pts;
  std::string section;

  auto flush_strand = [&]() {
    if (section != "strand") return;
    if (ts.size() < 2) throw FormatError("strand section needs at least two rows in " + path);
    braid.strands.push_back(Strand::through(ts, pts));
    ts.clear();
    pts.clear();
  };

  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trimmed(raw);
    if (line.empty() || line[0] == '#') continue;
    const std::string where = path + ":" + std::to_string(lineno);

    if (line.front() == '[') {
      if (line.back() != ']') throw FormatError("unterminated section header at " + where);
      flush_strand();
      section = trimmed(line.substr(1, line.size() - 2));
      if (section != "domain" && section != "strand")
        throw FormatError("unknown section [" + section + "] at " + where);
      if (section == "domain") have_domain = true;
      continue;
    }

    if (section == "domain") {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw FormatError("expected key = value at " + where);
      const std::string key = trimmed(line.substr(0, eq));
      const double val = parse_double(trimmed(line.substr(eq + 1)), where);
      if (key == "rho")
        braid.domain.rho = val;
      else if (key == "ell")
        braid.domain.ell = val;
      else if (key == "ell_tilde")
        braid.domain.ell_tilde = val;
      else if (key == "delta0")
        braid.domain.delta0 = val;
      else
        throw FormatError("unknown domain key '" + key + "' at " + where);
    } else if (section == "strand") {
      std::istringstream row(line);
      std::string a, b, c, d, extra;
      if (!(row >> a >> b >> c >> d) || (row >> extra))
        throw FormatError("expected 't x y z' row at " + where);
      const double t = parse_double(a, where);
      const vec3 p(parse_double(b, where), parse_double(c, where), parse_double(d, where));
      if (!std::isfinite(t) || !p.allFinite())
        throw NonFiniteControlPoint("non-finite strand row at " + where);
      ts.push_back(t);
      pts.push_back(p);
    } else {
      throw FormatError("content before any section at " + where);
    }
  }
  flush_strand();

  if (!have_domain) throw FormatError("braid file lacks a [domain] section: " + path);
  if (braid.strands.empty()) throw EmptyBraid("braid file has no strands: " + path);
  braid.domain.validate();

  double cap = 0.0;
  for (const auto& s : braid.strands)
    cap = std::max({cap, std::abs(s.pos(-1.0).z()), std::abs(s.pos(1.0).z())});
  braid.cap_z = cap;
  return braid;
}

void write_braid(const Braid& braid, const std::string& path, int rows_per_strand) {
  if (rows_per_strand < 2) throw BadParameter("write_braid needs at least two rows per strand");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write braid file " + path);
  out.precision(17);
  out << "[domain]\n";
  out << "rho = " << braid.domain.rho << "\n";
  out << "ell = " << braid.domain.ell << "\n";
  out << "ell_tilde = " << braid.domain.ell_tilde << "\n";
  out << "delta0 = " << braid.domain.delta0 << "\n";
  for (const auto& s : braid.strands) {
    out << "\n[strand]\n";
    for (int i = 0; i < rows_per_strand; ++i) {
      const double t = -1.0 + 2.0 * i / (rows_per_strand - 1);
      const vec3 p = s.pos(t);
      out << t << " " << p.x() << " " << p.y() << " " << p.z() << "\n";
    }
  }
  if (!out) throw IoError("failed writing braid file " + path);
}

void export_braid_csv(const Braid& braid, const std::string& path, int samples_per_strand) {
  if (samples_per_strand < 2) throw BadParameter("csv export needs at least two samples");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write csv file " + path);
  out.precision(17);
  out << "strand_id,t,x,y,z\n";
  for (size_t k = 0; k < braid.strands.size(); ++k) {
    for (int i = 0; i < samples_per_strand; ++i) {
      const double t = -1.0 + 2.0 * i / (samples_per_strand - 1);
      const vec3 p = braid.strands[k].pos(t);
      out << k << "," << t << "," << p.x() << "," << p.y() << "," << p.z() << "\n";
    }
  }
  if (!out) throw IoError("failed writing csv file " + path);
}

}  // namespace glv
