#pragma once

#include "rv/rng.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace rv {

using Vec2 = std::array<double, 2>;

// End-effector delta: continuous pose components plus a gripper scalar that
// binarizes to {-1, +1} (>= 0 closes). pose.size() is d_dir (2 planar,
// 6 synthetic).
struct Action {
    std::vector<double> pose;
    double gripper = -1.0;

    int d_dir() const { return static_cast<int>(pose.size()); }
};

inline double binarize_gripper(double g) { return g >= 0.0 ? 1.0 : -1.0; }

struct EnvConfig {
    double bound = 1.0;          // workspace [-bound, bound]^2
    double a_max = 0.1;          // per-component delta clamp, meters/step
    double grasp_radius = 0.05;  // close succeeds within this distance
    double goal_tol = 0.04;      // success: object released this close to goal
    int horizon = 80;
    double spawn_lo = -0.8;      // spawn box for agent/object/goal
    double spawn_hi = 0.8;
    double min_obj_goal = 0.4;   // separations enforced at reset
    double min_agent_obj = 0.3;
    int grid = 32;
    int grid_channels = 3;
    double blob_std = 1.5;  // occupancy blob std, in cells
    int n_tasks = 4;

    int state_dim() const { return 8; }  // agent, object, goal, grasped one-hot
    int grid_len() const { return grid_channels * grid * grid; }
};

struct EnvState {
    Vec2 agent{0, 0};
    Vec2 object{0, 0};
    Vec2 goal{0, 0};
    Vec2 distractor{0, 0};  // wrong-mode target for the degraded policy
    bool grasped = false;
    int step_index = 0;
};

struct Observation {
    std::vector<double> state_vec;  // [8]
    std::vector<double> grid;       // channel-major [3 * 32 * 32], values in [0,1]
    int task_id = 0;
};

struct StepRecord {
    Observation obs;
    Action expert;
};

struct Episode {
    std::vector<StepRecord> steps;
    bool success = false;
    int task_id = 0;
};

// Degraded stand-in for a frozen stochastic policy: expert plus bias and
// Gaussian noise, an occasional delta toward the distractor, and a rare
// gripper flip.
struct Degradation {
    double sigma_p = 0.05;
    Vec2 bias{0.02, -0.01};
    double p_wrong = 0.1;
    double p_grip_err = 0.05;
};

EnvState env_reset(const EnvConfig& cfg, RngStream& rng);
EnvState env_step(const EnvConfig& cfg, const EnvState& s, const Action& a);
bool env_success(const EnvConfig& cfg, const EnvState& s);

Action expert_action(const EnvConfig& cfg, const EnvState& s);
Action base_policy_sample(const EnvConfig& cfg, const EnvState& s, RngStream& rng,
                          const Degradation& deg);

Observation observe(const EnvConfig& cfg, const EnvState& s, int task_id);

Episode rollout_expert(const EnvConfig& cfg, RngStream rng, int task_id = 0);

// Rolls the degraded base policy for state coverage while recording the
// scripted expert's action at every visited state. Keeps training
// observations on the manifold the verifier will actually see at test time.
Episode rollout_policy_with_expert_labels(const EnvConfig& cfg, const Degradation& deg,
                                          RngStream rng, int task_id = 0);

// Random 6D expert delta with configured per-axis spread, paired with a
// random planar scene observation; exercises the d_dir = 6 path without
// 6-DoF dynamics.
struct Synth6dConfig {
    std::array<double, 6> axis_std{0.184, 0.116, 0.165, 0.1, 0.1, 0.1};
    int steps_per_episode = 40;
};

std::pair<Observation, Action> synth6d_sample(const Synth6dConfig& scfg, const EnvConfig& cfg,
                                              RngStream& rng);
Episode synth6d_episode(const Synth6dConfig& scfg, const EnvConfig& cfg, RngStream rng,
                        int task_id = 0);

}  // namespace rv
