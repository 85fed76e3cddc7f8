#pragma once

#include "rv/env.hpp"
#include "rv/episode_io.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rv {

struct NoiseConfig {
    double sigma_base = 0.1;
    double sigma_min = 0.01;
    double k = 1.0;
    bool include_expert = true;  // add (expert > sampled) preference pairs
    int tuples_per_step = 4;
    double subsample = 0.2;  // fraction of steps turned into tuples

    void validate() const;
};

// Anchor-centered training tuple. Action indices used by `pairs`:
// 0 = expert, 1 = anchor, 2 = better, 3 = worse. u_gt[i] is the unit
// direction from sampled action i+1 toward the expert.
struct TrainingTuple {
    int episode = 0;
    int step = 0;
    Action a_e, a_anc, a_better, a_worse;
    std::array<std::vector<double>, 3> u_gt;
    std::vector<std::pair<int, int>> pairs;  // (preferred, dispreferred)
};

struct TupleDataset {
    int d_dir = 2;
    std::vector<TrainingTuple> tuples;
};

Action make_anchor(const Action& a_e, const NoiseConfig& cfg, RngStream& rng);

// Unit direction from a_x toward a_e; .second flags the degenerate case.
std::pair<std::vector<double>, bool> gt_direction(const Action& a_e, const Action& a_x);

double rmse_distance(const Action& a, const Action& a_e);

double adaptive_sigma(double d0, const NoiseConfig& cfg);

enum class HalfSpace { better, worse };

// Flips eps so it lands on the requested side of the hyperplane orthogonal
// to u_gt; the boundary moves per the <= / >= conventions.
std::vector<double> halfspace_project(std::vector<double> eps, const std::vector<double>& u_gt,
                                      HalfSpace side);

std::optional<TrainingTuple> make_tuple(int episode, int step, const Action& a_e,
                                        const NoiseConfig& cfg, RngStream& rng);

// Tuple generation over a dataset; steps are subsampled and each kept step
// yields cfg.tuples_per_step tuples from its own RNG sub-stream.
TupleDataset generate_tuples(const EpisodeDataset& ds, const NoiseConfig& cfg, uint64_t seed);

// Tuple dataset file, magic "RVTP".
void write_rvtp(const std::string& path, const TupleDataset& ds);
TupleDataset read_rvtp(const std::string& path);

// Per-axis and norm statistics of policy-minus-expert action deviations.
struct DeviationStats {
    int d_dir = 0;
    size_t count = 0;
    std::vector<double> mean, stdev, median;  // per pose axis
    double norm_mean = 0, norm_median = 0, norm_min = 0, norm_max = 0;

    std::string to_table() const;
};

DeviationStats deviation_stats(const std::vector<Action>& policy,
                               const std::vector<Action>& expert);

}  // namespace rv
