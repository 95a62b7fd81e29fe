#include "aed/hashing.hpp"
#include "aed/matrix.hpp"

#include <cstdio>

namespace aed {

std::string hex_string(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

Matrix vstack(const std::vector<const Matrix*>& parts) {
  std::size_t rows = 0;
  std::size_t cols = 0;
  for (const Matrix* m : parts) {
    if (m->rows() == 0) continue;
    if (cols == 0) cols = m->cols();
    if (m->cols() != cols)
      throw InvalidArgument("vstack: column count mismatch");
    rows += m->rows();
  }
  Matrix out(rows, cols);
  std::size_t r = 0;
  for (const Matrix* m : parts) {
    for (std::size_t i = 0; i < m->rows(); ++i, ++r) {
      auto src = m->row(i);
      auto dst = out.row(r);
      std::copy(src.begin(), src.end(), dst.begin());
    }
  }
  return out;
}

}  // namespace aed
