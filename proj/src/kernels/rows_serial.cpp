#include "geopatch/kernels.hpp"

namespace geopatch::kernels {

void for_each_row_serial(std::int64_t rows, const RowBody& body) {
  for (std::int64_t row = 0; row < rows; ++row) {
    body(row);
  }
}

}  // namespace geopatch::kernels
