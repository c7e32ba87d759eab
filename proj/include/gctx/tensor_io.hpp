#pragma once

#include <iosfwd>
#include <string>

#include "gctx/tensor.hpp"

namespace gctx {

// Text format, line 1: `tensor v1 <rank> <d0> ... <dk>`, then the elements as
// whitespace-separated decimals in row-major order. The writer emits 17
// significant digits so values round-trip bit-exactly; the parser accepts
// scientific notation.
void write_tensor_text(const Tensor& t, std::ostream& os);
void write_tensor_file(const Tensor& t, const std::string& path);
Tensor read_tensor_text(std::istream& is);
Tensor read_tensor_file(const std::string& path);

}  // namespace gctx
