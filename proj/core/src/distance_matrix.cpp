#include <fstream>

#include "omnitraj/binary_io.hpp"
#include "omnitraj/similarity.hpp"

namespace omnitraj {

void DistanceMatrix::save(const std::filesystem::path& path) const {
  require(values.size() == static_cast<std::size_t>(rows) * cols, "distance matrix size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  binary::write_magic(out, "OTDM");
  binary::write<std::uint32_t>(out, rows);
  binary::write<std::uint32_t>(out, cols);
  binary::write<std::uint32_t>(out, static_cast<std::uint32_t>(measure));
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
}

DistanceMatrix DistanceMatrix::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  binary::expect_magic(in, "OTDM");
  DistanceMatrix m;
  m.rows = binary::read<std::uint32_t>(in);
  m.cols = binary::read<std::uint32_t>(in);
  m.measure = static_cast<Measure>(binary::read<std::uint32_t>(in));
  m.values.resize(static_cast<std::size_t>(m.rows) * m.cols);
  in.read(reinterpret_cast<char*>(m.values.data()), static_cast<std::streamsize>(m.values.size() * sizeof(float)));
  if (!in) throw IoError("truncated distance matrix " + path.string());
  return m;
}

}  // namespace omnitraj
