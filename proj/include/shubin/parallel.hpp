#pragma once

#include <cstddef>
#include <functional>

namespace shubin {

void set_thread_count(int n);
int thread_count();

// runs body(i) for i in [0, count); iterations must be independent.
// The first exception thrown by any iteration is rethrown after joining.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace shubin
