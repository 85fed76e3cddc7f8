#pragma once

#include "rv/env.hpp"

#include <string>
#include <vector>

namespace rv {

// In-memory episode dataset plus the geometry needed to interpret it.
struct EpisodeDataset {
    int d_dir = 2;
    int horizon = 80;
    int state_dim = 8;
    int grid_channels = 3;
    int grid = 32;
    int n_tasks = 4;
    std::vector<Episode> episodes;

    size_t total_steps() const {
        size_t n = 0;
        for (const auto& e : episodes) n += e.steps.size();
        return n;
    }
    const StepRecord& step(int episode, int step_idx) const;
};

// Record-based binary file, magic "RVEP": header (version, d_dir, horizon,
// counts), then per-step little-endian 64-bit reals for state_vec, grid and
// the expert action.
void write_rvep(const std::string& path, const EpisodeDataset& ds);
EpisodeDataset read_rvep(const std::string& path);

// One JSON object per step; the grid is bulky and off by default.
void export_jsonl(const std::string& path, const EpisodeDataset& ds, bool with_grid = false);

// Committed dataset recipe shared by the CLI and the acceptance suite.
// policy_frac of the episodes roll the degraded base policy (expert-labeled)
// for state coverage, interleaved deterministically; d_dir == 6 switches to
// the synthetic sampler.
struct GenConfig {
    int episodes = 56;
    double policy_frac = 0.5;
    int d_dir = 2;
    Synth6dConfig synth;
};

EpisodeDataset generate_episode_dataset(const EnvConfig& env, const Degradation& deg,
                                        const GenConfig& gen, uint64_t seed);

}  // namespace rv
