#include "rv/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rv {

namespace {

double clampd(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

double dist2(const Vec2& a, const Vec2& b) {
    return std::hypot(a[0] - b[0], a[1] - b[1]);
}

double dist_inf(const Vec2& a, const Vec2& b) {
    return std::max(std::fabs(a[0] - b[0]), std::fabs(a[1] - b[1]));
}

// Straight-line delta toward target, scaled so the inf-norm stays <= a_max.
std::vector<double> line_delta(const Vec2& from, const Vec2& to, double a_max) {
    double dx = to[0] - from[0], dy = to[1] - from[1];
    double n = std::max(std::fabs(dx), std::fabs(dy));
    double s = (n > a_max) ? a_max / n : 1.0;
    return {dx * s, dy * s};
}

}  // namespace

EnvState env_reset(const EnvConfig& cfg, RngStream& rng) {
    EnvState s;
    auto draw = [&](RngStream& r) -> Vec2 {
        return {r.uniform(cfg.spawn_lo, cfg.spawn_hi), r.uniform(cfg.spawn_lo, cfg.spawn_hi)};
    };
    s.agent = draw(rng);
    for (int tries = 0; tries < 1000; ++tries) {
        s.object = draw(rng);
        if (dist2(s.object, s.agent) >= cfg.min_agent_obj) break;
    }
    for (int tries = 0; tries < 1000; ++tries) {
        s.goal = draw(rng);
        if (dist2(s.goal, s.object) >= cfg.min_obj_goal) break;
    }
    for (int tries = 0; tries < 1000; ++tries) {
        s.distractor = draw(rng);
        if (dist2(s.distractor, s.object) >= cfg.min_obj_goal &&
            dist2(s.distractor, s.goal) >= cfg.min_obj_goal)
            break;
    }
    return s;
}

EnvState env_step(const EnvConfig& cfg, const EnvState& s, const Action& a) {
    if (a.d_dir() < 2) throw std::invalid_argument("env_step: planar action needs 2 pose components");
    EnvState n = s;
    double dx = clampd(a.pose[0], -cfg.a_max, cfg.a_max);
    double dy = clampd(a.pose[1], -cfg.a_max, cfg.a_max);
    n.agent[0] = clampd(s.agent[0] + dx, -cfg.bound, cfg.bound);
    n.agent[1] = clampd(s.agent[1] + dy, -cfg.bound, cfg.bound);
    if (n.grasped) n.object = n.agent;
    double g = binarize_gripper(a.gripper);
    if (g > 0.0) {
        if (!n.grasped && dist2(n.agent, n.object) <= cfg.grasp_radius) {
            n.grasped = true;
            n.object = n.agent;
        }
    } else {
        n.grasped = false;  // release drops the object in place
    }
    n.step_index = s.step_index + 1;
    return n;
}

bool env_success(const EnvConfig& cfg, const EnvState& s) {
    return !s.grasped && dist2(s.object, s.goal) <= cfg.goal_tol;
}

Action expert_action(const EnvConfig& cfg, const EnvState& s) {
    // Phase boundaries are tolerance bands, half the respective radius, so
    // the controller also closes/releases when a noisy rollout gets close
    // rather than only on an exact landing.
    const double close_dist = 0.5 * cfg.grasp_radius;
    const double release_dist = 0.5 * cfg.goal_tol;
    Action a;
    if (!s.grasped) {
        if (dist_inf(s.agent, s.object) > close_dist) {
            a.pose = line_delta(s.agent, s.object, cfg.a_max);
            a.gripper = -1.0;
        } else {
            a.pose = line_delta(s.agent, s.object, cfg.a_max);
            a.gripper = 1.0;
        }
    } else {
        if (dist_inf(s.agent, s.goal) > release_dist) {
            a.pose = line_delta(s.agent, s.goal, cfg.a_max);
            a.gripper = 1.0;
        } else {
            a.pose = line_delta(s.agent, s.goal, cfg.a_max);
            a.gripper = -1.0;
        }
    }
    return a;
}

Action base_policy_sample(const EnvConfig& cfg, const EnvState& s, RngStream& rng,
                          const Degradation& deg) {
    Action e = expert_action(cfg, s);
    // Fixed draw order keeps consumption identical across branches.
    double u_wrong = rng.uniform01();
    std::vector<double> noise = rng.gaussian_vector(2, deg.sigma_p);
    double u_grip = rng.uniform01();

    Action a;
    if (u_wrong < deg.p_wrong) {
        a.pose = line_delta(s.agent, s.distractor, cfg.a_max);
        a.pose[0] += noise[0];
        a.pose[1] += noise[1];
    } else {
        a.pose = {e.pose[0] + deg.bias[0] + noise[0], e.pose[1] + deg.bias[1] + noise[1]};
    }
    a.gripper = (u_grip < deg.p_grip_err) ? -binarize_gripper(e.gripper) : e.gripper;
    return a;
}

Observation observe(const EnvConfig& cfg, const EnvState& s, int task_id) {
    Observation o;
    o.task_id = task_id;
    o.state_vec = {s.agent[0],  s.agent[1],  s.object[0],          s.object[1],
                   s.goal[0],   s.goal[1],   s.grasped ? 1.0 : 0.0, s.grasped ? 0.0 : 1.0};
    const int G = cfg.grid;
    o.grid.assign(static_cast<size_t>(cfg.grid_len()), 0.0);
    const Vec2* ent[3] = {&s.agent, &s.object, &s.goal};
    const double inv2s2 = 1.0 / (2.0 * cfg.blob_std * cfg.blob_std);
    for (int ch = 0; ch < 3; ++ch) {
        // Continuous cell coordinates of the blob center.
        double cx = (((*ent[ch])[0] + cfg.bound) / (2.0 * cfg.bound)) * G - 0.5;
        double cy = (((*ent[ch])[1] + cfg.bound) / (2.0 * cfg.bound)) * G - 0.5;
        double* chan = o.grid.data() + static_cast<size_t>(ch) * G * G;
        for (int iy = 0; iy < G; ++iy) {
            for (int ix = 0; ix < G; ++ix) {
                double d2 = (ix - cx) * (ix - cx) + (iy - cy) * (iy - cy);
                chan[iy * G + ix] = std::exp(-d2 * inv2s2);
            }
        }
    }
    return o;
}

Episode rollout_expert(const EnvConfig& cfg, RngStream rng, int task_id) {
    Episode ep;
    ep.task_id = task_id;
    EnvState s = env_reset(cfg, rng);
    for (int t = 0; t < cfg.horizon; ++t) {
        if (env_success(cfg, s)) {
            ep.success = true;
            break;
        }
        Action a = expert_action(cfg, s);
        ep.steps.push_back({observe(cfg, s, task_id), a});
        s = env_step(cfg, s, a);
    }
    if (!ep.success) ep.success = env_success(cfg, s);
    return ep;
}

Episode rollout_policy_with_expert_labels(const EnvConfig& cfg, const Degradation& deg,
                                          RngStream rng, int task_id) {
    Episode ep;
    ep.task_id = task_id;
    RngStream reset_rng = rng.sub(0);
    EnvState s = env_reset(cfg, reset_rng);
    for (int t = 0; t < cfg.horizon; ++t) {
        if (env_success(cfg, s)) {
            ep.success = true;
            break;
        }
        ep.steps.push_back({observe(cfg, s, task_id), expert_action(cfg, s)});
        RngStream prng = rng.sub(1, static_cast<uint64_t>(t));
        s = env_step(cfg, s, base_policy_sample(cfg, s, prng, deg));
    }
    if (!ep.success) ep.success = env_success(cfg, s);
    return ep;
}

std::pair<Observation, Action> synth6d_sample(const Synth6dConfig& scfg, const EnvConfig& cfg,
                                              RngStream& rng) {
    EnvState s = env_reset(cfg, rng);
    Observation o = observe(cfg, s, 0);
    Action a;
    a.pose.resize(6);
    for (int i = 0; i < 6; ++i)
        a.pose[i] = scfg.axis_std[i] == 0.0 ? 0.0 : scfg.axis_std[i] * rng.normal();
    a.gripper = rng.uniform01() < 0.5 ? 1.0 : -1.0;
    return {std::move(o), std::move(a)};
}

Episode synth6d_episode(const Synth6dConfig& scfg, const EnvConfig& cfg, RngStream rng,
                        int task_id) {
    Episode ep;
    ep.task_id = task_id;
    ep.success = true;
    for (int t = 0; t < scfg.steps_per_episode; ++t) {
        auto [o, a] = synth6d_sample(scfg, cfg, rng);
        o.task_id = task_id;
        ep.steps.push_back({std::move(o), std::move(a)});
    }
    return ep;
}

}  // namespace rv
