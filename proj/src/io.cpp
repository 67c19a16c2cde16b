#include "gchjb/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace gchjb {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

double parse_field(const std::string& s, int line) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
    throw InputError("bad number '" + s + "' on line " + std::to_string(line));
  }
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_solution_csv(std::ostream& out, const GridFunction& u) {
  const Grid& g = u.grid();
  out << (g.dim == 1 ? "x1,value\n" : "x1,x2,value\n");
  if (g.dim == 1) {
    for (int i = 0; i < g.points(0); ++i) {
      out << format_double(g.coord(0, i)) << ',' << format_double(u.at(i)) << '\n';
    }
    return;
  }
  for (int i = 0; i < g.points(0); ++i) {
    for (int j = 0; j < g.points(1); ++j) {
      out << format_double(g.coord(0, i)) << ',' << format_double(g.coord(1, j)) << ','
          << format_double(u.at(i, j)) << '\n';
    }
  }
}

void write_solution_csv(const std::filesystem::path& path, const GridFunction& u) {
  auto out = open_out(path);
  write_solution_csv(out, u);
}

GridFunction read_solution_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty solution file");
  int dim = 0;
  if (line == "x1,value") {
    dim = 1;
  } else if (line == "x1,x2,value") {
    dim = 2;
  } else {
    throw InputError("unrecognized solution header '" + line + "'");
  }
  std::vector<std::array<double, 3>> rows;
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (static_cast<int>(cells.size()) != dim + 1) {
      throw InputError("wrong column count on line " + std::to_string(number));
    }
    std::array<double, 3> r{0.0, 0.0, 0.0};
    for (int c = 0; c <= dim; ++c) r[static_cast<std::size_t>(c)] = parse_field(cells[static_cast<std::size_t>(c)], number);
    if (dim == 1) std::swap(r[1], r[2]);
    rows.push_back(r);
  }
  std::vector<double> x1, x2;
  for (const auto& r : rows) {
    x1.push_back(r[0]);
    x2.push_back(r[1]);
  }
  const auto distinct = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  const auto ax1 = distinct(x1);
  const auto ax2 = dim == 2 ? distinct(x2) : std::vector<double>{0.0};
  if (ax1.size() * ax2.size() != rows.size()) throw InputError("solution rows do not form a grid");
  std::array<double, 2> lo{ax1.front(), dim == 2 ? ax2.front() : 0.0};
  std::array<double, 2> hi{ax1.back(), dim == 2 ? ax2.back() : 1.0};
  const Grid grid = Grid::make(dim, lo, hi,
                               {static_cast<int>(ax1.size()) - 2,
                                dim == 2 ? static_cast<int>(ax2.size()) - 2 : 1});
  GridFunction u(grid);
  for (const auto& r : rows) {
    const int i = static_cast<int>(std::lower_bound(ax1.begin(), ax1.end(), r[0]) - ax1.begin());
    const int j = dim == 2 ? static_cast<int>(std::lower_bound(ax2.begin(), ax2.end(), r[1]) - ax2.begin()) : 0;
    u.at(i, j) = r[2];
  }
  return u;
}

GridFunction read_solution_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  return read_solution_csv(in);
}

void write_free_boundary_csv(const std::filesystem::path& path, const FreeBoundaryMask& mask) {
  auto out = open_out(path);
  const int dim = mask.grid.dim;
  out << (dim == 1 ? "x1\n" : "x1,x2\n");
  for (const auto& p : mask.interface_points) {
    out << format_double(p(0));
    if (dim == 2) out << ',' << format_double(p(1));
    out << '\n';
  }
}

void write_mask_csv(const std::filesystem::path& path, const FreeBoundaryMask& mask) {
  auto out = open_out(path);
  const Grid& g = mask.grid;
  out << (g.dim == 1 ? "x1,flag\n" : "x1,x2,flag\n");
  for (std::size_t k = 0; k < mask.flags.size(); ++k) {
    const auto [i, j] = g.node_of(k);
    out << format_double(g.coord(0, i));
    if (g.dim == 2) out << ',' << format_double(g.coord(1, j));
    out << ',' << mask.flags[k] << '\n';
  }
}

}  // namespace gchjb
