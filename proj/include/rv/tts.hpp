#pragma once

#include "rv/env.hpp"
#include "rv/model.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace rv {

enum class TtsMode { none, random, direction_guided };

std::string to_string(TtsMode m);
TtsMode tts_mode_from_string(const std::string& s);

struct TtsConfig {
    int n = 4;                  // policy proposals
    int m = 12;                 // expansions, m % n == 0; ignored when mode none
    double alpha = 1.0471975511965976;  // angular bound, pi/3
    double sigma_exp = 0.1;     // expansion magnitude scale
    TtsMode mode = TtsMode::direction_guided;

    int expansions_per_proposal() const { return mode == TtsMode::none ? 0 : m / n; }
    int k_total() const { return n + (mode == TtsMode::none ? 0 : m); }
    void validate() const;
};

// Scoring interface shared by the PRM and test oracles.
class Verifier {
public:
    virtual ~Verifier() = default;
    virtual PerceptionCache pre_encode(const Observation& obs, StepStamp stamp) const = 0;
    virtual std::vector<PrmOutput> score_batch(const PerceptionCache& cache,
                                               const std::vector<Action>& actions,
                                               StepStamp current) const = 0;
};

class PrmVerifier : public Verifier {
public:
    explicit PrmVerifier(const Prm& model) : model_(model) {}
    PerceptionCache pre_encode(const Observation& obs, StepStamp stamp) const override {
        return model_.pre_encode(obs, stamp);
    }
    std::vector<PrmOutput> score_batch(const PerceptionCache& cache,
                                       const std::vector<Action>& actions,
                                       StepStamp current) const override {
        return model_.score_batch(cache, actions, current);
    }

private:
    const Prm& model_;
};

// Scores -rmse to a target action and points straight at it. Ground-truth
// stand-in for argmax/monotonicity checks.
class OracleVerifier : public Verifier {
public:
    void set_target(Action target) { target_ = std::move(target); }
    PerceptionCache pre_encode(const Observation&, StepStamp stamp) const override {
        PerceptionCache c;
        c.stamp = stamp;
        return c;
    }
    std::vector<PrmOutput> score_batch(const PerceptionCache& cache,
                                       const std::vector<Action>& actions,
                                       StepStamp current) const override;

private:
    Action target_;
};

struct Candidate {
    Action action;
    int proposal_j = 0;    // source proposal
    int expansion_k = -1;  // -1 for the proposal itself
    PrmOutput out;
};

struct CandidateSet {
    std::vector<Candidate> items;  // first n entries are the raw proposals
};

struct TimingBreakdown {
    double pre_encode_s = 0, direction_s = 0, expand_s = 0, score_s = 0, total_s = 0;
};

struct SelectResult {
    Action action;
    int selected_index = 0;
    CandidateSet set;
    TimingBreakdown timing;
};

// Deterministic geometric core of guided expansion:
// pose += m * (cos(theta) * u_hat + sin(theta) * p_unit).
Action guided_candidate(const Action& a_p, const std::vector<double>& u_hat,
                        const std::vector<double>& p_unit, double theta, double m);

// Samples count candidates within angle alpha of u_hat.
std::vector<Action> expand_guided(const Action& a_p, const std::vector<double>& u_hat,
                                  int count, const TtsConfig& cfg, RngStream& rng);

std::vector<Action> expand_random(const Action& a_p, int count, const TtsConfig& cfg,
                                  RngStream& rng);

// Majority over binarized grippers; ties go to the first proposal.
double gripper_vote(const std::vector<Action>& proposals);

using ProposalFn = std::function<Action(int j)>;

SelectResult select_action(const Observation& obs, StepStamp stamp, const ProposalFn& propose,
                           const Verifier& verifier, const TtsConfig& cfg, const RngStream& step_rng);

struct EvalCell {
    TtsMode mode = TtsMode::none;
    int n = 1;
    int m = 0;
};

struct EvalRow {
    EvalCell cell;
    int episodes = 0;
    int successes = 0;
    double rate = 0.0;
    double se = 0.0;     // binomial standard error
    double ci_lo = 0.0;  // normal-approximation 95% interval
    double ci_hi = 0.0;
    double mean_steps = 0.0;
    double wall_s = 0.0;  // reported in logs, never in byte-compared CSVs
};

// Rolls seeded episodes per cell with the degraded base policy and the given
// verifier; episode resets are paired across cells. base supplies alpha and
// sigma_exp; each cell overrides n/m/mode.
std::vector<EvalRow> run_eval(const EnvConfig& env_cfg, const Degradation& deg,
                              const Verifier& verifier, const TtsConfig& base,
                              const std::vector<EvalCell>& cells, int episodes, uint64_t seed);

// Base-policy-only rollout success (no verifier involved).
int rollout_base_policy_successes(const EnvConfig& env_cfg, const Degradation& deg, int episodes,
                                  uint64_t seed);

}  // namespace rv
