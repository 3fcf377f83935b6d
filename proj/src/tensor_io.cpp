#include "asa/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "tensor i/o assumes a little-endian host");
static_assert(sizeof(float) == 4);

namespace asa {

FloatMatrix read_tnsr_stream(std::istream& in, const std::string& context) {
  std::string header;
  require(bool(std::getline(in, header)), "tensor ", context, ": missing header");
  std::istringstream hs(header);
  std::string magic, version;
  long rows = -1, cols = -1;
  hs >> magic >> version >> rows >> cols;
  require(!hs.fail() && magic == "TNSR" && version == "v1", "tensor ", context,
          ": corrupt header '", header, "'");
  require(rows >= 0 && cols >= 1 && rows * cols < (1L << 31), "tensor ", context,
          ": bad dimensions ", rows, " x ", cols);
  FloatMatrix m{int(rows), int(cols)};
  in.read(reinterpret_cast<char*>(m.data.data()),
          std::streamsize(m.numel() * sizeof(float)));
  require(size_t(in.gcount()) == m.numel() * sizeof(float), "truncated tensor ", context,
          ": header says ", rows, "x", cols, " but payload is short");
  return m;
}

FloatMatrix read_tnsr(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "tensor file not found: ", path.string());
  return read_tnsr_stream(in, path.string());
}

void write_tnsr_stream(std::ostream& out, const FloatMatrix& m) {
  out << "TNSR v1 " << m.rows << " " << m.cols << "\n";
  out.write(reinterpret_cast<const char*>(m.data.data()),
            std::streamsize(m.numel() * sizeof(float)));
}

void write_tnsr(const std::filesystem::path& path, const FloatMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write tensor file: ", path.string());
  write_tnsr_stream(out, m);
  require(out.good(), "write failed: ", path.string());
}

}  // namespace asa
