#include "savflow/snapshot.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace savflow {
namespace {

static_assert(std::endian::native == std::endian::little,
              "snapshot writer assumes a little-endian host");

std::string header_tail(const Grid& g) {
  std::ostringstream os;
  os << g.dim();
  for (int d = 0; d < g.dim(); ++d) os << ' ' << g.points(d);
  os.precision(17);
  for (int d = 0; d < g.dim(); ++d) os << ' ' << g.length(d);
  return os.str();
}

void write_block(std::ostream& out, const Eigen::ArrayXd& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::shared_ptr<const Grid> parse_header(std::istream& in,
                                         const std::string& magic) {
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("snapshot: missing header");
  std::istringstream hs(line);
  std::string tag;
  int dim = 0;
  hs >> tag >> dim;
  if (tag != magic || dim < 1 || dim > 3)
    throw std::runtime_error("snapshot: bad header '" + line + "'");
  std::vector<int> n(dim);
  std::vector<double> len(dim);
  for (int d = 0; d < dim; ++d) hs >> n[d];
  for (int d = 0; d < dim; ++d) hs >> len[d];
  if (!hs) throw std::runtime_error("snapshot: truncated header");
  return make_grid(n, len);
}

Eigen::ArrayXd read_block(std::istream& in, std::int64_t count) {
  Eigen::ArrayXd v(count);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw std::runtime_error("snapshot: truncated data block");
  return v;
}

}  // namespace

void write_snapshot(const std::string& path, const Field& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("snapshot: cannot open " + path);
  out << "SAVF1 " << header_tail(f.grid()) << '\n';
  write_block(out, f.values());
}

Field read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("snapshot: cannot open " + path);
  auto grid = parse_header(in, "SAVF1");
  return Field(grid, read_block(in, grid->total_points()));
}

void write_qtensor_snapshot(const std::string& path,
                            const std::vector<Field>& components) {
  if (components.size() != 5)
    throw std::invalid_argument("qtensor snapshot: expected 5 components");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("snapshot: cannot open " + path);
  out << "SAVQ1 " << header_tail(components[0].grid()) << '\n';
  for (const Field& c : components) write_block(out, c.values());
}

std::vector<Field> read_qtensor_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("snapshot: cannot open " + path);
  auto grid = parse_header(in, "SAVQ1");
  std::vector<Field> out;
  for (int c = 0; c < 5; ++c)
    out.emplace_back(grid, read_block(in, grid->total_points()));
  return out;
}

}  // namespace savflow
