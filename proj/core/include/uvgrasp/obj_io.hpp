#pragma once

#include <filesystem>
#include <iosfwd>

#include "uvgrasp/geometry.hpp"

namespace uvgrasp {

// Wavefront OBJ subset: `v`, `vt` and triangular `f` records whose corners
// carry both a position and a texture index (`f a/ta b/tb c/tc`, a normal
// index may follow). Every distinct (position, texture) pair becomes one mesh
// vertex; vertices that share a position index share a position id.
//
// Errors: ParseError (with line number) for malformed records, zero or
// out-of-range indices and non-triangle faces; MissingUV when a face corner
// has no texture index.
Mesh
read_obj(std::istream& in);

Mesh
load_obj(const std::filesystem::path& path);

// Writes one `v` per position group, one `vt` per vertex and 1-based faces,
// with nine significant digits.
void
write_obj(std::ostream& out, const Mesh& mesh);

void
save_obj(const Mesh& mesh, const std::filesystem::path& path);

} // namespace uvgrasp
