#pragma once

#include "rv/env.hpp"
#include "rv/graph.hpp"
#include "rv/optim.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rv {

struct PrmConfig {
    int hidden = 64;
    int layers = 2;   // fusion blocks
    int heads = 4;
    int d_dir = 2;
    int patch = 8;
    int grid = 32;
    int grid_channels = 3;
    int state_dim = 8;
    int n_tasks = 4;
    int ffn_mult = 4;
    bool use_amplifier = true;

    void validate() const;
    int patches_per_side() const { return grid / patch; }
    int n_patches() const { return patches_per_side() * patches_per_side(); }
    int patch_dim() const { return grid_channels * patch * patch; }
    int n_obs_tokens() const { return n_patches() + 2; }  // + state + goal tokens
    int seq_len() const { return n_obs_tokens() + 1; }    // + action token
};

struct StepStamp {
    int64_t episode = -1;
    int64_t step = -1;
    bool operator==(const StepStamp&) const = default;
};

struct PrmOutput {
    double reward = 0.0;
    std::vector<double> direction;  // unit vector, or the fallback axis
    bool degenerate_direction = false;
};

// Per-step encoded observation reused across all candidate scorings.
// `tokens` is the embedded+normalized token matrix; the block key/value
// slabs let score() run only the action row through the fusion stack.
struct PerceptionCache {
    StepStamp stamp;
    Tensor2 tokens;  // [T_obs x H]
    struct BlockKV {
        Tensor2 k, v;  // [T_obs x H]
    };
    std::vector<BlockKV> blocks;
    Tensor2 read_k, read_v;  // readout keys/values of the obs rows
};

// Bridges a ParamStore into a Graph: leaves are created on first use and
// their gradients are pushed back after backward().
struct ParamBinder {
    Graph& g;
    ParamStore& ps;
    std::vector<std::pair<std::string, Node*>> bound;

    Node* operator()(const std::string& name);
    void accumulate_grads();
};

struct PrmGraphOut {
    Node* reward;    // [S x 1]
    Node* dir_raw;   // [S x d_dir]
    Node* dir_unit;  // [S x d_dir], smooth normalization for the loss path
};

// The verifier: observation/goal/state encoded once, candidate actions
// encoded through the action amplifier, fused by masked attention blocks,
// read out by learned reward/direction query tokens.
class Prm {
public:
    Prm(PrmConfig cfg, uint64_t init_seed);

    const PrmConfig& config() const { return cfg_; }
    ParamStore& params() { return ps_; }
    const ParamStore& params() const { return ps_; }

    PerceptionCache pre_encode(const Observation& obs, StepStamp stamp = {}) const;
    Tensor2 action_encode(const Action& a) const;  // [1 x H]

    PrmOutput score(const PerceptionCache& cache, const Action& a) const;
    PrmOutput score(const PerceptionCache& cache, const Action& a, StepStamp current) const;
    std::vector<PrmOutput> score_batch(const PerceptionCache& cache,
                                       const std::vector<Action>& actions) const;
    std::vector<PrmOutput> score_batch(const PerceptionCache& cache,
                                       const std::vector<Action>& actions,
                                       StepStamp current) const;

    // Full forward pass without the cache, through the autodiff graph.
    // The dual route for the cache-equivalence checks.
    PrmOutput score_monolithic(const Observation& obs, const Action& a) const;

    void save(const std::string& path) const;
    static Prm load(const std::string& path);

private:
    PrmConfig cfg_;
    ParamStore ps_;
    void init_params(uint64_t seed);
};

// Graph forward over S sequences. uniq_obs lists distinct observations;
// obs_of_seq maps each sequence to one of them; actions is [S x (d_dir+1)].
PrmGraphOut build_prm_graph(Graph& g, ParamBinder& bind, const PrmConfig& cfg,
                            const std::vector<const Observation*>& uniq_obs,
                            const std::vector<int>& obs_of_seq, const Tensor2& actions);

Tensor2 extract_patches(const Observation& obs, const PrmConfig& cfg);  // [P x patch_dim]
Tensor2 action_row(const Action& a);                                    // [1 x (d_dir+1)]

}  // namespace rv
