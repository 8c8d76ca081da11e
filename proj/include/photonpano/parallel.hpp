#pragma once

#include <cstdint>
#include <functional>

namespace photonpano::parallel {

// Worker count resolution: programmatic override, else PHOTONPANO_THREADS,
// else hardware concurrency. 0 means "auto" in both the override and the
// environment variable.
int worker_count();
void set_workers(int n);

// Runs fn(i) for every i in [0, n) on a transient worker pool. Tasks must
// write only to per-index state; execution order is unspecified, so callers
// that reduce floating-point results must do so themselves in index order.
// The task grid never depends on the worker count, which is what makes
// results reproducible across PHOTONPANO_THREADS settings.
void for_each_index(int64_t n, const std::function<void(int64_t)>& fn);

}  // namespace photonpano::parallel
