#pragma once

#include "rv/model.hpp"

#include <string>
#include <vector>

namespace rv {

struct BenchRow {
    int count = 0;
    double without_s = 0.0;  // full re-encode per candidate
    double with_s = 0.0;     // one pre_encode, per-candidate action path

    double speedup() const { return with_s > 0.0 ? without_s / with_s : 0.0; }
    double per_action_ms() const { return count > 0 ? with_s / count * 1000.0 : 0.0; }
};

struct BenchReport {
    std::vector<BenchRow> rows;
    std::string hardware_note;
    int threads = 1;

    std::string to_table() const;
};

// Times candidate scoring with and without the shared perception cache.
// Median of `reps` timed repetitions after `warmup` untimed ones; both paths
// must produce identical outputs or this throws. counts must be strictly
// increasing. threads > 1 scores in parallel chunks (noted in the report).
BenchReport bench_cache(const Prm& model, const Observation& obs, const std::vector<int>& counts,
                        int reps = 5, int warmup = 2, uint64_t seed = 0, int threads = 1);

}  // namespace rv
