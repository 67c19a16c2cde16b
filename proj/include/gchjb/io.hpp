// CSV export of grid functions and free-boundary masks. Floats carry 17
// significant digits so a written solution reads back bit-exactly.
#pragma once

#include <filesystem>
#include <iosfwd>

#include "gchjb/diagnostics.hpp"
#include "gchjb/grid.hpp"

namespace gchjb {

// Header "x1,value" or "x1,x2,value"; one row per node, boundary included.
void write_solution_csv(std::ostream& out, const GridFunction& u);
void write_solution_csv(const std::filesystem::path& path, const GridFunction& u);

// Rebuilds grid and values from a file written by write_solution_csv.
// Throws InputError on malformed input.
GridFunction read_solution_csv(std::istream& in);
GridFunction read_solution_csv(const std::filesystem::path& path);

// Interface points, header "x1[,x2]".
void write_free_boundary_csv(const std::filesystem::path& path, const FreeBoundaryMask& mask);
// Per interior node: coordinates and flag (0 pde, 1 constraint, 2 both near).
void write_mask_csv(const std::filesystem::path& path, const FreeBoundaryMask& mask);

// "%.17g"
std::string format_double(double v);

}  // namespace gchjb
