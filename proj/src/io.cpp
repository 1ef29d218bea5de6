#include "effham/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "effham/errors.hpp"

namespace effham {

namespace {

std::string strip(const std::string& line) {
  std::string s = line;
  const auto hash = s.find('#');
  if (hash != std::string::npos) s.erase(hash);
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_number(const std::string& tok, const std::string& origin) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0')
    throw InvalidInputError(origin + ": malformed number '" + tok + "'");
  return v;
}

long parse_int(const std::string& tok, const std::string& origin) {
  char* end = nullptr;
  const long v = std::strtol(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0')
    throw InvalidInputError(origin + ": malformed integer '" + tok + "'");
  return v;
}

}  // namespace

TrigPotential parse_potential(std::istream& in, const std::string& origin) {
  int dim = 0;
  std::vector<TrigMode> modes;
  std::string line;
  while (std::getline(in, line)) {
    const std::string s = strip(line);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw InvalidInputError(origin + ": expected 'key = value' in '" + s + "'");
    std::string key = strip(s.substr(0, eq));
    std::string value = strip(s.substr(eq + 1));
    if (key == "dim") {
      dim = static_cast<int>(parse_int(value, origin));
      if (dim < 1) throw InvalidInputError(origin + ": dim must be >= 1");
    } else if (key == "mode") {
      if (dim == 0) throw InvalidInputError(origin + ": 'dim' must precede 'mode' lines");
      std::istringstream fields(value);
      std::vector<std::string> toks;
      std::string t;
      while (fields >> t) toks.push_back(t);
      if (static_cast<int>(toks.size()) != dim + 2)
        throw InvalidInputError(origin + ": mode line needs dim k components plus a and b");
      TrigMode m;
      m.k.resize(dim);
      for (int i = 0; i < dim; ++i) m.k[i] = static_cast<int>(parse_int(toks[i], origin));
      m.a = parse_number(toks[dim], origin);
      m.b = parse_number(toks[dim + 1], origin);
      modes.push_back(std::move(m));
    } else {
      throw InvalidInputError(origin + ": unknown key '" + key + "'");
    }
  }
  if (dim == 0) throw InvalidInputError(origin + ": missing 'dim'");
  return TrigPotential(dim, std::move(modes));
}

TrigPotential read_potential_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open potential file '" + path + "'");
  return parse_potential(in, path);
}

void write_potential(const TrigPotential& p, std::ostream& out) {
  out << "dim = " << p.dim() << "\n";
  for (const auto& m : p.modes()) {
    out << "mode =";
    for (int c : m.k) out << " " << c;
    out << " " << format_double(m.a) << " " << format_double(m.b) << "\n";
  }
}

void write_potential_file(const TrigPotential& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInputError("cannot write potential file '" + path + "'");
  write_potential(p, out);
}

DensityInput read_density_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open density file '" + path + "'");
  // trig files contain '=' in their first meaningful line; raw grids are bare numbers
  std::string line;
  std::streampos start = in.tellg();
  bool trig = false;
  while (std::getline(in, line)) {
    const std::string s = strip(line);
    if (s.empty()) continue;
    trig = s.find('=') != std::string::npos;
    break;
  }
  in.clear();
  in.seekg(start);
  DensityInput d;
  if (trig) {
    d.is_trig = true;
    d.trig = parse_potential(in, path);
    d.dim = d.trig.dim();
    return d;
  }
  std::vector<std::string> toks;
  std::string t;
  while (in >> t) toks.push_back(t);
  if (toks.size() < 2) throw InvalidInputError(path + ": raw density needs N and N^dim values");
  d.N = static_cast<int>(parse_int(toks[0], path));
  if (d.N < 2) throw InvalidInputError(path + ": N must be >= 2");
  const long count = static_cast<long>(toks.size()) - 1;
  if (count == d.N) d.dim = 1;
  else if (count == static_cast<long>(d.N) * d.N) d.dim = 2;
  else throw InvalidInputError(path + ": value count matches neither N nor N^2");
  d.values.resize(count);
  for (long i = 0; i < count; ++i) d.values[i] = parse_number(toks[i + 1], path);
  return d;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

bool needs_quotes(const std::string& f) {
  return f.find_first_of(",\"\n\r") != std::string::npos;
}

std::string quoted(const std::string& f) {
  if (!needs_quotes(f)) return f;
  std::string out = "\"";
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

void CsvWriter::header(const std::vector<std::string>& columns) { row(columns); }

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << quoted(fields[i]);
  }
  out_ << '\n';
}

}  // namespace effham
