#pragma once

namespace peakspec {

// Worker count for parallel assembly/sweeps: PEAKSPEC_THREADS when set and
// positive, otherwise the hardware concurrency (at least 1).
int configured_threads();

}  // namespace peakspec
