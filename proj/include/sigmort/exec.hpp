#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace sigmort {

/// Selects between the OpenMP kernel and its serial reference. Both produce
/// bit-identical results; the serial path exists for testing and benchmarking.
enum class Exec { serial, parallel };

/// Sets the OpenMP thread count; 0 keeps the runtime default.
void set_thread_count(int jobs);
int thread_count();

/// Runs body(i) for i in [0, n). Under Exec::parallel the iterations are
/// spread over OpenMP threads; if any throw, the exception from the lowest
/// index is rethrown, so both policies fail the same way.
template <class Body>
void for_each_index(std::ptrdiff_t n, Exec exec, Body&& body) {
    if (exec == Exec::serial) {
        for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n > 0 ? n : 0));
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            body(i);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace sigmort
