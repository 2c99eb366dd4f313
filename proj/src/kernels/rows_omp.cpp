#include <omp.h>

#include <exception>
#include <mutex>

#include "geopatch/kernels.hpp"

namespace geopatch::kernels {

void for_each_row_parallel(std::int64_t rows, const RowBody& body) {
  std::exception_ptr first_error;
  std::mutex error_mu;
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t row = 0; row < rows; ++row) {
    try {
      body(row);
    } catch (...) {
      std::lock_guard lock(error_mu);
      if (!first_error) {
        first_error = std::current_exception();
      }
    }
  }
  if (first_error) {
    std::rethrow_exception(first_error);
  }
}

int max_threads() noexcept { return omp_get_max_threads(); }

}  // namespace geopatch::kernels
