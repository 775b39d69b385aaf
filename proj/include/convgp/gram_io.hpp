#pragma once

#include <string>

#include "convgp/types.hpp"

namespace convgp {

/// Binary kernel-matrix file: 16-byte header (magic "CGPK", u32 version,
/// u32 rows, u32 cols, little-endian) followed by row-major IEEE-754
/// doubles. Lets a matrix be computed once and re-solved cheaply.
void write_gram(const std::string& path, const GramMatrix& gram);
GramMatrix read_gram(const std::string& path);

constexpr uint32_t kGramFormatVersion = 1;

}  // namespace convgp
