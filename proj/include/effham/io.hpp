#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "effham/potential.hpp"

namespace effham {

/// Key-value potential format:
///   # comment
///   dim = 1
///   mode = 1 0.3 0.0        (k components, then a, then b)
/// Doubles are written with %.17g so write/parse round-trips bit-exactly.
TrigPotential parse_potential(std::istream& in, const std::string& origin = "<stream>");
TrigPotential read_potential_file(const std::string& path);
void write_potential(const TrigPotential& p, std::ostream& out);
void write_potential_file(const TrigPotential& p, const std::string& path);

/// A density file is either the trig key-value format above or a raw grid:
/// first token N, then N^dim whitespace-separated values, row-major
/// (dim inferred from the count).
struct DensityInput {
  bool is_trig = false;
  TrigPotential trig{1, {}};
  int dim = 1;
  int N = 0;
  std::vector<double> values;
};
DensityInput read_density_file(const std::string& path);

/// Shortest exact decimal form (%.17g): parsing it recovers the same bits.
std::string format_double(double v);

/// RFC-4180-style CSV: comma separated, quoted only when a field needs it,
/// header row mandatory, '.' decimal point, LF line ends.
class CsvWriter {
public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}
  void header(const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& fields);

private:
  std::ostream& out_;
};

}  // namespace effham
