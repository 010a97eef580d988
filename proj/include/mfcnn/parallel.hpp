#pragma once

#include <functional>

namespace mfcnn {

// Worker count from MFCNN_THREADS (default 1, capped at hardware concurrency x4).
int thread_count();

// Calls body(i) for i in [0, count) on up to thread_count() threads. Callers
// write results into slot i, so output order never depends on scheduling.
void parallel_for(int count, const std::function<void(int)>& body);

}  // namespace mfcnn
