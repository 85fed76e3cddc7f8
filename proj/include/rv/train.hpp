#pragma once

#include "rv/datagen.hpp"
#include "rv/model.hpp"

#include <string>
#include <vector>

namespace rv {

struct TrainConfig {
    double lambda_dir = 1.0;
    double lambda_rew = 1.0;
    double lr = 1e-3;
    double clip = 1.0;  // global gradient-norm clip
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int epochs = 100;
    int batch = 64;
    uint64_t seed = 0;
    int val_mod = 10;  // episodes hashing to 0 mod val_mod are held out

    void validate() const;
};

// 1 - <u_hat, u_gt>; both inputs must already be unit vectors.
double loss_dir(const std::vector<double>& u_hat, const std::vector<double>& u_gt);

// Bradley-Terry pair loss -log(sigmoid(r_i - r_j)) for i preferred over j.
double loss_rew(double r_i, double r_j);

// Seed-stable validation split on episode index.
bool is_val_episode(uint64_t episode, uint64_t seed, int val_mod);

struct ValReport {
    double cos_align = 0.0;  // mean <u_hat, u_gt> over sampled actions
    double angle_err = 0.0;  // mean arccos(clamped cosine), radians
    double spearman = 0.0;   // rank corr of reward vs rmse (expect negative)
    double pair_acc = 0.0;   // fraction of ordered pairs ranked correctly
    size_t n_actions = 0;
    size_t n_pairs = 0;
};

ValReport validate(const Prm& model, const EpisodeDataset& episodes,
                   const std::vector<const TrainingTuple*>& tuples);

struct EpochLog {
    int epoch = 0;
    double l_dir = 0.0, l_rew = 0.0, total = 0.0;
    double cos_align = 0.0, angle_err = 0.0, spearman = 0.0, pair_acc = 0.0;
};

struct BatchLoss {
    double total = 0.0, l_dir = 0.0, l_rew = 0.0;
};

// Builds the combined-objective graph over one batch; with_grads runs
// backward and accumulates parameter gradients (caller zeroes beforehand).
BatchLoss batch_loss_and_grads(Prm& model, const EpisodeDataset& episodes,
                               const std::vector<const TrainingTuple*>& batch, double lambda_dir,
                               double lambda_rew, bool with_grads = true);

// Full training run. When run_dir is non-empty, writes train_log.csv plus a
// checkpoint per epoch under <run_dir>/checkpoints/.
std::vector<EpochLog> train(Prm& model, const EpisodeDataset& episodes, const TupleDataset& tuples,
                            const TrainConfig& cfg, const std::string& run_dir = "");

// Average-rank Spearman correlation.
double spearman_corr(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace rv
