#include "rv/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace rv {

namespace {

double now_s() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<PrmOutput> score_all_cached(const Prm& model, const PerceptionCache& cache,
                                        const std::vector<Action>& actions, int threads) {
    if (threads <= 1) return model.score_batch(cache, actions);
    std::vector<PrmOutput> outs(actions.size());
    std::vector<std::thread> pool;
    size_t chunk = (actions.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        size_t lo = t * chunk, hi = std::min(actions.size(), lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            for (size_t i = lo; i < hi; ++i) outs[i] = model.score(cache, actions[i]);
        });
    }
    for (auto& th : pool) th.join();
    return outs;
}

}  // namespace

BenchReport bench_cache(const Prm& model, const Observation& obs, const std::vector<int>& counts,
                        int reps, int warmup, uint64_t seed, int threads) {
    for (size_t i = 1; i < counts.size(); ++i)
        if (counts[i] <= counts[i - 1])
            throw std::invalid_argument("bench_cache: counts must be strictly increasing");
    if (counts.empty() || counts.front() < 1)
        throw std::invalid_argument("bench_cache: need positive candidate counts");

    BenchReport report;
    report.threads = threads;
    std::ostringstream note;
    note << "cpu single-socket, " << std::thread::hardware_concurrency() << " hw threads, "
         << (threads > 1 ? "parallel scoring path" : "single-threaded") << ", 64-bit floats";
    report.hardware_note = note.str();

    RngStream rng(seed);
    const int d = model.config().d_dir;
    StepStamp stamp{0, 0};

    for (int count : counts) {
        std::vector<Action> actions(static_cast<size_t>(count));
        RngStream arng = rng.sub(static_cast<uint64_t>(count));
        for (auto& a : actions) {
            a.pose = arng.gaussian_vector(d, 0.1);
            a.gripper = arng.uniform01() < 0.5 ? 1.0 : -1.0;
        }

        std::vector<double> t_without, t_with;
        std::vector<PrmOutput> ref_without, ref_with;
        for (int rep = 0; rep < warmup + reps; ++rep) {
            double t0 = now_s();
            std::vector<PrmOutput> outs_nc(actions.size());
            for (size_t i = 0; i < actions.size(); ++i) {
                PerceptionCache c = model.pre_encode(obs, stamp);  // re-encoded per candidate
                outs_nc[i] = model.score(c, actions[i]);
            }
            double t1 = now_s();
            PerceptionCache cache = model.pre_encode(obs, stamp);
            std::vector<PrmOutput> outs_c = score_all_cached(model, cache, actions, threads);
            double t2 = now_s();
            if (rep >= warmup) {
                t_without.push_back(t1 - t0);
                t_with.push_back(t2 - t1);
            }
            ref_without = std::move(outs_nc);
            ref_with = std::move(outs_c);
        }
        for (size_t i = 0; i < ref_without.size(); ++i) {
            if (std::fabs(ref_without[i].reward - ref_with[i].reward) > 1e-12)
                throw std::runtime_error("bench_cache: cached and uncached rewards disagree");
            for (int c = 0; c < d; ++c)
                if (std::fabs(ref_without[i].direction[c] - ref_with[i].direction[c]) > 1e-12)
                    throw std::runtime_error("bench_cache: cached and uncached directions disagree");
        }
        report.rows.push_back({count, median(t_without), median(t_with)});
    }
    return report;
}

std::string BenchReport::to_table() const {
    std::ostringstream os;
    os << "count    w/o cache (s)   w cache (s)    speedup    per-action (ms)\n";
    for (const auto& r : rows) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%-8d %-15.6f %-14.6f %-10.2f %-10.4f\n", r.count,
                      r.without_s, r.with_s, r.speedup(), r.per_action_ms());
        os << buf;
    }
    os << "# " << hardware_note << "\n";
    return os.str();
}

}  // namespace rv
