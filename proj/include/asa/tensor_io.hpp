#pragma once

#include <filesystem>
#include <vector>

#include "asa/util.hpp"

namespace asa {

// Plain row-major float32 matrix, the on-disk and feature-side carrier.
struct FloatMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<float> data;

  FloatMatrix() = default;
  FloatMatrix(int r, int c) : rows(r), cols(c), data(size_t(r) * size_t(c), 0.0f) {
    require(r >= 0 && c >= 1, "matrix: bad shape ", r, " x ", c);
  }
  float& at(int r, int c) { return data[size_t(r) * cols + c]; }
  float at(int r, int c) const { return data[size_t(r) * cols + c]; }
  size_t numel() const { return data.size(); }
};

// Portable tensor file: ASCII header "TNSR v1 <rows> <cols>\n" followed by
// row-major little-endian IEEE-754 float32 payload.
FloatMatrix read_tnsr(const std::filesystem::path& path);
void write_tnsr(const std::filesystem::path& path, const FloatMatrix& m);

// Stream variants used by the checkpoint format, which embeds named blocks.
FloatMatrix read_tnsr_stream(std::istream& in, const std::string& context);
void write_tnsr_stream(std::ostream& out, const FloatMatrix& m);

}  // namespace asa
