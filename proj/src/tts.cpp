#include "rv/tts.hpp"

#include "rv/datagen.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace rv {

namespace {
double now_s() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}
}  // namespace

std::string to_string(TtsMode m) {
    switch (m) {
        case TtsMode::none: return "none";
        case TtsMode::random: return "random";
        case TtsMode::direction_guided: return "dg";
    }
    return "?";
}

TtsMode tts_mode_from_string(const std::string& s) {
    if (s == "none") return TtsMode::none;
    if (s == "random") return TtsMode::random;
    if (s == "dg" || s == "direction_guided") return TtsMode::direction_guided;
    throw std::invalid_argument("unknown tts mode: " + s);
}

void TtsConfig::validate() const {
    if (n < 1) throw std::invalid_argument("TtsConfig: n >= 1 required");
    if (mode != TtsMode::none) {
        if (m < 0 || m % n != 0)
            throw std::invalid_argument("TtsConfig: m must be >= 0 and divisible by n");
    }
    if (!(alpha > 0.0) || alpha > 3.141592653589793 + 1e-12)
        throw std::invalid_argument("TtsConfig: alpha must be in (0, pi]");
    if (sigma_exp < 0.0) throw std::invalid_argument("TtsConfig: sigma_exp >= 0 required");
}

std::vector<PrmOutput> OracleVerifier::score_batch(const PerceptionCache&,
                                                   const std::vector<Action>& actions,
                                                   StepStamp) const {
    std::vector<PrmOutput> outs(actions.size());
    for (size_t i = 0; i < actions.size(); ++i) {
        outs[i].reward = -rmse_distance(actions[i], target_);
        std::vector<double> d(target_.pose.size());
        for (size_t c = 0; c < d.size(); ++c) d[c] = target_.pose[c] - actions[i].pose[c];
        auto [u, deg] = unit_normalize(d);
        outs[i].direction = std::move(u);
        outs[i].degenerate_direction = deg;
    }
    return outs;
}

Action guided_candidate(const Action& a_p, const std::vector<double>& u_hat,
                        const std::vector<double>& p_unit, double theta, double m) {
    Action c = a_p;  // gripper copied unchanged
    double ct = std::cos(theta), st = std::sin(theta);
    for (size_t i = 0; i < c.pose.size(); ++i)
        c.pose[i] += m * (ct * u_hat[i] + st * p_unit[i]);
    return c;
}

std::vector<Action> expand_guided(const Action& a_p, const std::vector<double>& u_hat,
                                  int count, const TtsConfig& cfg, RngStream& rng) {
    const int d = a_p.d_dir();
    if (static_cast<int>(u_hat.size()) != d)
        throw std::invalid_argument("expand_guided: direction dimension mismatch");
    std::vector<Action> out;
    out.reserve(static_cast<size_t>(count));
    for (int k = 0; k < count; ++k) {
        RngStream crng = rng.sub(static_cast<uint64_t>(k));
        std::vector<double> p(d, 0.0);
        double theta = 0.0;
        bool have_p = false;
        for (int tries = 0; tries < 5 && !have_p; ++tries) {
            std::vector<double> v = crng.gaussian_vector(d, 1.0);
            double vu = dot(v, u_hat);
            for (int i = 0; i < d; ++i) v[i] -= vu * u_hat[i];
            auto [pu, deg] = unit_normalize(v);
            if (!deg) {
                p = std::move(pu);
                have_p = true;
            }
        }
        theta = have_p ? crng.uniform(0.0, cfg.alpha) : 0.0;
        double m = std::fabs(crng.normal()) * cfg.sigma_exp;
        out.push_back(guided_candidate(a_p, u_hat, p, theta, m));
    }
    return out;
}

std::vector<Action> expand_random(const Action& a_p, int count, const TtsConfig& cfg,
                                  RngStream& rng) {
    std::vector<Action> out;
    out.reserve(static_cast<size_t>(count));
    for (int k = 0; k < count; ++k) {
        RngStream crng = rng.sub(static_cast<uint64_t>(k));
        std::vector<double> eps = crng.gaussian_vector(a_p.d_dir(), cfg.sigma_exp);
        Action c = a_p;
        for (int i = 0; i < a_p.d_dir(); ++i) c.pose[i] += eps[i];
        out.push_back(std::move(c));
    }
    return out;
}

double gripper_vote(const std::vector<Action>& proposals) {
    if (proposals.empty()) throw std::invalid_argument("gripper_vote: need at least one proposal");
    int pos = 0;
    for (const auto& a : proposals)
        if (binarize_gripper(a.gripper) > 0.0) ++pos;
    int neg = static_cast<int>(proposals.size()) - pos;
    if (pos > neg) return 1.0;
    if (neg > pos) return -1.0;
    return binarize_gripper(proposals[0].gripper);
}

SelectResult select_action(const Observation& obs, StepStamp stamp, const ProposalFn& propose,
                           const Verifier& verifier, const TtsConfig& cfg,
                           const RngStream& step_rng) {
    cfg.validate();
    SelectResult res;
    double t0 = now_s();

    std::vector<Action> proposals;
    proposals.reserve(static_cast<size_t>(cfg.n));
    for (int j = 0; j < cfg.n; ++j) proposals.push_back(propose(j));
    double vote = gripper_vote(proposals);

    if (cfg.mode == TtsMode::none && cfg.n == 1) {
        res.action = proposals[0];
        res.selected_index = 0;
        res.set.items.push_back({proposals[0], 0, -1, {}});
        res.timing.total_s = now_s() - t0;
        return res;
    }

    double t1 = now_s();
    PerceptionCache cache = verifier.pre_encode(obs, stamp);
    res.timing.pre_encode_s = now_s() - t1;

    // Direction is queried per proposal before any expansion.
    std::vector<std::vector<double>> dirs;
    if (cfg.mode == TtsMode::direction_guided) {
        double t2 = now_s();
        std::vector<PrmOutput> prop_outs = verifier.score_batch(cache, proposals, stamp);
        for (const auto& o : prop_outs) dirs.push_back(o.direction);
        res.timing.direction_s = now_s() - t2;
    }

    double t3 = now_s();
    for (int j = 0; j < cfg.n; ++j)
        res.set.items.push_back({proposals[j], j, -1, {}});
    const int epp = cfg.expansions_per_proposal();
    if (epp > 0) {
        for (int j = 0; j < cfg.n; ++j) {
            RngStream erng = step_rng.sub(static_cast<uint64_t>(j) + 1);
            std::vector<Action> exp =
                cfg.mode == TtsMode::direction_guided
                    ? expand_guided(proposals[j], dirs[j], epp, cfg, erng)
                    : expand_random(proposals[j], epp, cfg, erng);
            for (int k = 0; k < epp; ++k)
                res.set.items.push_back({std::move(exp[k]), j, k, {}});
        }
    }
    res.timing.expand_s = now_s() - t3;

    double t4 = now_s();
    std::vector<Action> all;
    all.reserve(res.set.items.size());
    for (const auto& c : res.set.items) all.push_back(c.action);
    std::vector<PrmOutput> outs = verifier.score_batch(cache, all, stamp);
    for (size_t i = 0; i < outs.size(); ++i) res.set.items[i].out = outs[i];
    res.timing.score_s = now_s() - t4;

    for (auto& c : res.set.items) c.action.gripper = vote;

    int best = 0;
    for (size_t i = 1; i < res.set.items.size(); ++i)
        if (res.set.items[i].out.reward > res.set.items[best].out.reward)
            best = static_cast<int>(i);
    res.selected_index = best;
    res.action = res.set.items[best].action;
    res.timing.total_s = now_s() - t0;
    return res;
}

namespace {
constexpr uint64_t kDomEnvReset = 0xE57ULL;
constexpr uint64_t kDomPolicyDraw = 0x90CULL;
constexpr uint64_t kDomExpand = 0xE8BULL;
}  // namespace

std::vector<EvalRow> run_eval(const EnvConfig& env_cfg, const Degradation& deg,
                              const Verifier& verifier, const TtsConfig& base,
                              const std::vector<EvalCell>& cells, int episodes, uint64_t seed) {
    if (episodes <= 0) throw std::invalid_argument("run_eval: need at least one episode");
    if (cells.empty()) throw std::invalid_argument("run_eval: empty cell grid");
    RngStream master(seed);
    std::vector<EvalRow> rows;
    for (const EvalCell& cell : cells) {
        TtsConfig cfg = base;
        cfg.n = cell.n;
        cfg.m = cell.mode == TtsMode::none ? 0 : cell.m;  // m is ignored under mode none
        cfg.mode = cell.mode;
        cfg.validate();

        EvalRow row;
        row.cell = cell;
        row.episodes = episodes;
        double t0 = now_s();
        long total_steps = 0;
        for (int ep = 0; ep < episodes; ++ep) {
            RngStream reset_rng = master.sub(kDomEnvReset, static_cast<uint64_t>(ep));
            EnvState state = env_reset(env_cfg, reset_rng);
            bool success = false;
            int t = 0;
            for (; t < env_cfg.horizon; ++t) {
                if (env_success(env_cfg, state)) {
                    success = true;
                    break;
                }
                Observation obs = observe(env_cfg, state, 0);
                StepStamp stamp{ep, t};
                RngStream policy_rng =
                    master.sub(kDomPolicyDraw, static_cast<uint64_t>(ep), static_cast<uint64_t>(t));
                ProposalFn propose = [&](int j) {
                    RngStream pr = policy_rng.sub(static_cast<uint64_t>(j));
                    return base_policy_sample(env_cfg, state, pr, deg);
                };
                RngStream step_rng =
                    master.sub(kDomExpand, static_cast<uint64_t>(ep), static_cast<uint64_t>(t));
                SelectResult sel = select_action(obs, stamp, propose, verifier, cfg, step_rng);
                state = env_step(env_cfg, state, sel.action);
            }
            if (!success) success = env_success(env_cfg, state);
            if (success) ++row.successes;
            total_steps += t;
        }
        row.wall_s = now_s() - t0;
        double p = static_cast<double>(row.successes) / episodes;
        row.rate = p;
        row.se = std::sqrt(p * (1.0 - p) / episodes);
        row.ci_lo = std::max(0.0, p - 1.96 * row.se);
        row.ci_hi = std::min(1.0, p + 1.96 * row.se);
        row.mean_steps = static_cast<double>(total_steps) / episodes;
        rows.push_back(row);
    }
    return rows;
}

int rollout_base_policy_successes(const EnvConfig& env_cfg, const Degradation& deg, int episodes,
                                  uint64_t seed) {
    RngStream master(seed);
    int successes = 0;
    for (int ep = 0; ep < episodes; ++ep) {
        RngStream reset_rng = master.sub(kDomEnvReset, static_cast<uint64_t>(ep));
        EnvState state = env_reset(env_cfg, reset_rng);
        bool success = false;
        for (int t = 0; t < env_cfg.horizon; ++t) {
            if (env_success(env_cfg, state)) {
                success = true;
                break;
            }
            RngStream pr = master.sub(kDomPolicyDraw, static_cast<uint64_t>(ep),
                                      static_cast<uint64_t>(t))
                               .sub(0);
            Action a = base_policy_sample(env_cfg, state, pr, deg);
            state = env_step(env_cfg, state, a);
        }
        if (!success) success = env_success(env_cfg, state);
        if (success) ++successes;
    }
    return successes;
}

}  // namespace rv
