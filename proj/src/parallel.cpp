#include "lpo/parallel.hpp"

namespace lpo {

namespace {
int g_workers = 1;
}

int parallel_workers() { return g_workers; }

void set_parallel_workers(int n) { g_workers = n < 1 ? 1 : n; }

} // namespace lpo
