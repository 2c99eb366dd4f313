#pragma once

// Data-parallel pixel kernels. Each kernel is written once as a per-row body;
// `serial` runs rows in order and is the reference used by the tests,
// `parallel` distributes rows with OpenMP. Both must produce bit-identical
// output.

#include <cstdint>
#include <functional>

namespace geopatch {

enum class ExecPolicy { Serial, Parallel };

namespace kernels {

using RowBody = std::function<void(std::int64_t row)>;

void for_each_row_serial(std::int64_t rows, const RowBody& body);
/// OpenMP dynamic schedule over rows. Exceptions thrown by `body` are
/// captured and the first one is rethrown after the loop.
void for_each_row_parallel(std::int64_t rows, const RowBody& body);

inline void for_each_row(ExecPolicy policy, std::int64_t rows, const RowBody& body) {
  if (policy == ExecPolicy::Parallel) {
    for_each_row_parallel(rows, body);
  } else {
    for_each_row_serial(rows, body);
  }
}

int max_threads() noexcept;

}  // namespace kernels
}  // namespace geopatch
