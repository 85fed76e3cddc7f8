// rv: desk-scale verifier-guided action selection toolkit.
// Subcommands cover the full pipeline: episode generation, tuple
// construction, PRM training/validation, test-time-scaling evaluation,
// the cache latency benchmark and plot-data dumps.

#include <CLI11.hpp>

#include "rv/bench.hpp"
#include "rv/datagen.hpp"
#include "rv/env.hpp"
#include "rv/episode_io.hpp"
#include "rv/model.hpp"
#include "rv/plot.hpp"
#include "rv/runio.hpp"
#include "rv/train.hpp"
#include "rv/tts.hpp"

#include <cmath>
#include <iostream>
#include <sstream>

namespace {

using namespace rv;

EnvConfig env_from_kv(const KvConfig& kv) {
    EnvConfig c;
    c.a_max = kv.get_double("env.a_max", c.a_max);
    c.grasp_radius = kv.get_double("env.grasp_radius", c.grasp_radius);
    c.goal_tol = kv.get_double("env.goal_tol", c.goal_tol);
    c.horizon = kv.get_int("env.horizon", c.horizon);
    c.grid = kv.get_int("env.grid", c.grid);
    c.blob_std = kv.get_double("env.blob_std", c.blob_std);
    c.n_tasks = kv.get_int("env.n_tasks", c.n_tasks);
    return c;
}

void env_to_kv(const EnvConfig& c, KvConfig& kv) {
    kv.set_double("env.a_max", c.a_max);
    kv.set_double("env.grasp_radius", c.grasp_radius);
    kv.set_double("env.goal_tol", c.goal_tol);
    kv.set_int("env.horizon", c.horizon);
    kv.set_int("env.grid", c.grid);
    kv.set_double("env.blob_std", c.blob_std);
    kv.set_int("env.n_tasks", c.n_tasks);
}

Degradation degrade_from_kv(const KvConfig& kv) {
    Degradation d;
    d.sigma_p = kv.get_double("degrade.sigma_p", d.sigma_p);
    d.bias[0] = kv.get_double("degrade.bias_x", d.bias[0]);
    d.bias[1] = kv.get_double("degrade.bias_y", d.bias[1]);
    d.p_wrong = kv.get_double("degrade.p_wrong", d.p_wrong);
    d.p_grip_err = kv.get_double("degrade.p_grip_err", d.p_grip_err);
    return d;
}

void degrade_to_kv(const Degradation& d, KvConfig& kv) {
    kv.set_double("degrade.sigma_p", d.sigma_p);
    kv.set_double("degrade.bias_x", d.bias[0]);
    kv.set_double("degrade.bias_y", d.bias[1]);
    kv.set_double("degrade.p_wrong", d.p_wrong);
    kv.set_double("degrade.p_grip_err", d.p_grip_err);
}

NoiseConfig noise_from_kv(const KvConfig& kv) {
    NoiseConfig n;
    n.sigma_base = kv.get_double("noise.sigma_base", n.sigma_base);
    n.sigma_min = kv.get_double("noise.sigma_min", n.sigma_min);
    n.k = kv.get_double("noise.k", n.k);
    n.include_expert = kv.get_bool("noise.include_expert", n.include_expert);
    n.tuples_per_step = kv.get_int("noise.tuples_per_step", n.tuples_per_step);
    n.subsample = kv.get_double("noise.subsample", n.subsample);
    return n;
}

void noise_to_kv(const NoiseConfig& n, KvConfig& kv) {
    kv.set_double("noise.sigma_base", n.sigma_base);
    kv.set_double("noise.sigma_min", n.sigma_min);
    kv.set_double("noise.k", n.k);
    kv.set("noise.include_expert", n.include_expert ? "true" : "false");
    kv.set_int("noise.tuples_per_step", n.tuples_per_step);
    kv.set_double("noise.subsample", n.subsample);
}

TrainConfig train_from_kv(const KvConfig& kv) {
    TrainConfig t;
    t.lambda_dir = kv.get_double("train.lambda_dir", t.lambda_dir);
    t.lambda_rew = kv.get_double("train.lambda_rew", t.lambda_rew);
    t.lr = kv.get_double("train.lr", t.lr);
    t.clip = kv.get_double("train.clip", t.clip);
    t.epochs = kv.get_int("train.epochs", t.epochs);
    t.batch = kv.get_int("train.batch", t.batch);
    t.seed = kv.get_u64("train.seed", t.seed);
    t.val_mod = kv.get_int("train.val_mod", t.val_mod);
    return t;
}

void train_to_kv(const TrainConfig& t, KvConfig& kv) {
    kv.set_double("train.lambda_dir", t.lambda_dir);
    kv.set_double("train.lambda_rew", t.lambda_rew);
    kv.set_double("train.lr", t.lr);
    kv.set_double("train.clip", t.clip);
    kv.set_int("train.epochs", t.epochs);
    kv.set_int("train.batch", t.batch);
    kv.set_int("train.seed", static_cast<int64_t>(t.seed));
    kv.set_int("train.val_mod", t.val_mod);
}

PrmConfig model_from_kv(const KvConfig& kv, int d_dir) {
    PrmConfig c;
    c.hidden = kv.get_int("model.hidden", c.hidden);
    c.layers = kv.get_int("model.layers", c.layers);
    c.heads = kv.get_int("model.heads", c.heads);
    c.patch = kv.get_int("model.patch", c.patch);
    c.n_tasks = kv.get_int("model.n_tasks", c.n_tasks);
    c.use_amplifier = kv.get_bool("model.use_amplifier", c.use_amplifier);
    c.d_dir = d_dir;
    return c;
}

void model_to_kv(const PrmConfig& c, KvConfig& kv) {
    kv.set_int("model.hidden", c.hidden);
    kv.set_int("model.layers", c.layers);
    kv.set_int("model.heads", c.heads);
    kv.set_int("model.patch", c.patch);
    kv.set_int("model.n_tasks", c.n_tasks);
    kv.set("model.use_amplifier", c.use_amplifier ? "true" : "false");
    kv.set_int("model.d_dir", c.d_dir);
}

KvConfig load_config_arg(const std::string& path) {
    return path.empty() ? KvConfig{} : KvConfig::from_file(path);
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(std::stoi(tok));
    return out;
}

std::vector<std::string> parse_str_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(tok);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rv: verifier-guided test-time action selection"};
    app.require_subcommand(1);

    std::string config_path, run_path, episodes_file, tuples_file, prm_path, out_path;
    uint64_t seed = 0;
    int episodes = 200, d_dir = 2;
    bool jsonl = false, with_grid = false;

    // ---- gen-episodes
    auto* gen = app.add_subcommand("gen-episodes", "roll expert episodes into a dataset");
    gen->add_option("--run", run_path, "run directory (must not exist)")->required();
    gen->add_option("--episodes", episodes, "episode count");
    gen->add_option("--seed", seed, "master seed");
    gen->add_option("--d-dir", d_dir, "pose dimension: 2 planar, 6 synthetic");
    gen->add_option("--config", config_path, "key = value config file");
    double policy_frac = 0.5;
    gen->add_option("--policy-frac", policy_frac,
                    "fraction of episodes rolled out by the degraded base policy "
                    "(expert-labeled) for state coverage");
    gen->add_flag("--jsonl", jsonl, "also export episodes.jsonl");
    gen->add_flag("--with-grid", with_grid, "include rasters in the JSONL export");
    gen->callback([&] {
        KvConfig kv = load_config_arg(config_path);
        EnvConfig env = env_from_kv(kv);
        Degradation deg = degrade_from_kv(kv);
        if (d_dir != 2 && d_dir != 6) throw CLI::ValidationError("--d-dir must be 2 or 6");
        if (policy_frac < 0.0 || policy_frac > 1.0)
            throw CLI::ValidationError("--policy-frac must be in [0, 1]");
        RunDir run = RunDir::create(run_path);
        GenConfig gen_cfg;
        gen_cfg.episodes = episodes;
        gen_cfg.policy_frac = policy_frac;
        gen_cfg.d_dir = d_dir;
        EpisodeDataset ds = generate_episode_dataset(env, deg, gen_cfg, seed);
        int ok = 0;
        for (const auto& ep : ds.episodes)
            if (ep.success) ++ok;
        write_rvep(run.file("episodes.rvep"), ds);
        if (jsonl) export_jsonl(run.file("episodes.jsonl"), ds, with_grid);
        env_to_kv(env, kv);
        degrade_to_kv(deg, kv);
        kv.set_int("gen.episodes", episodes);
        kv.set_int("gen.d_dir", d_dir);
        kv.set_int("gen.seed", static_cast<int64_t>(seed));
        kv.set_double("gen.policy_frac", policy_frac);
        run.write_config(kv);
        run.write_seed(seed);
        std::cout << "episodes=" << episodes << " rollout_success=" << ok << " steps="
                  << ds.total_steps() << " -> " << run.file("episodes.rvep") << "\n";
    });

    // ---- gen-tuples
    auto* gt = app.add_subcommand("gen-tuples", "anchor-centered training tuples from episodes");
    gt->add_option("--run", run_path, "run directory (must not exist)")->required();
    gt->add_option("--episodes-file", episodes_file, "episodes.rvep input")->required();
    gt->add_option("--seed", seed, "tuple sampling seed");
    gt->add_option("--config", config_path, "key = value config file");
    double arg_sigma_base = -1, arg_k = -1, arg_subsample = -1;
    gt->add_option("--sigma-base", arg_sigma_base, "base noise scale");
    gt->add_option("--k", arg_k, "adaptive noise gain");
    gt->add_option("--subsample", arg_subsample, "fraction of steps used");
    gt->callback([&] {
        KvConfig kv = load_config_arg(config_path);
        NoiseConfig noise = noise_from_kv(kv);
        if (arg_sigma_base > 0) noise.sigma_base = arg_sigma_base;
        if (arg_k > 0) noise.k = arg_k;
        if (arg_subsample > 0) noise.subsample = arg_subsample;
        noise.validate();
        RunDir run = RunDir::create(run_path);
        EpisodeDataset ds = read_rvep(episodes_file);
        TupleDataset tuples = generate_tuples(ds, noise, seed);
        write_rvtp(run.file("tuples.rvtp"), tuples);
        noise_to_kv(noise, kv);
        kv.set_int("gen.seed", static_cast<int64_t>(seed));
        kv.set("gen.episodes_file", episodes_file);
        run.write_config(kv);
        run.write_seed(seed);
        std::cout << "tuples=" << tuples.tuples.size() << " d_dir=" << tuples.d_dir << " -> "
                  << run.file("tuples.rvtp") << "\n";
    });

    // ---- analyze-deviations
    auto* ad = app.add_subcommand("analyze-deviations",
                                  "policy-vs-expert action deviation statistics");
    ad->add_option("--run", run_path, "run directory (must not exist)")->required();
    ad->add_option("--episodes", episodes, "episode count");
    ad->add_option("--seed", seed, "master seed");
    ad->add_option("--config", config_path, "key = value config file");
    ad->callback([&] {
        KvConfig kv = load_config_arg(config_path);
        EnvConfig env = env_from_kv(kv);
        Degradation deg = degrade_from_kv(kv);
        RunDir run = RunDir::create(run_path);
        RngStream master(seed);
        std::vector<Action> pol, exp;
        for (int e = 0; e < episodes; ++e) {
            RngStream reset_rng = master.sub(0xE57, e);
            EnvState s = env_reset(env, reset_rng);
            for (int t = 0; t < env.horizon && !env_success(env, s); ++t) {
                Action ea = expert_action(env, s);
                RngStream pr = master.sub(0x90C, e, t).sub(0);
                pol.push_back(base_policy_sample(env, s, pr, deg));
                exp.push_back(ea);
                s = env_step(env, s, ea);  // expert-driven rollout
            }
        }
        DeviationStats st = deviation_stats(pol, exp);
        env_to_kv(env, kv);
        degrade_to_kv(deg, kv);
        kv.set_int("gen.episodes", episodes);
        kv.set_int("gen.seed", static_cast<int64_t>(seed));
        run.write_config(kv);
        run.write_seed(seed);
        auto csv = open_csv(run.file("deviations.csv"), "axis,mean,std,median", kv.hash_hex());
        for (int a = 0; a < st.d_dir; ++a)
            csv << a << ',' << fmt_double(st.mean[a]) << ',' << fmt_double(st.stdev[a]) << ','
                << fmt_double(st.median[a]) << '\n';
        auto ncsv = open_csv(run.file("deviation_norms.csv"), "stat,value", kv.hash_hex());
        ncsv << "mean," << fmt_double(st.norm_mean) << "\nmedian," << fmt_double(st.norm_median)
             << "\nmin," << fmt_double(st.norm_min) << "\nmax," << fmt_double(st.norm_max) << "\n";
        std::cout << st.to_table();
        NoiseConfig noise;
        std::cout << "sigma_base=" << noise.sigma_base
                  << (noise.sigma_base < st.norm_median ? " < " : " >= ")
                  << "median policy-expert gap " << st.norm_median << "\n";
    });

    // ---- train
    auto* tr = app.add_subcommand("train", "train the PRM on a tuple dataset");
    tr->add_option("--run", run_path, "run directory (must not exist)")->required();
    tr->add_option("--episodes-file", episodes_file, "episodes.rvep input")->required();
    tr->add_option("--tuples-file", tuples_file, "tuples.rvtp input")->required();
    tr->add_option("--seed", seed, "training seed");
    tr->add_option("--config", config_path, "key = value config file");
    int arg_epochs = -1, arg_batch = -1;
    double arg_lr = -1, arg_ldir = -1, arg_lrew = -1;
    bool no_amp = false;
    tr->add_option("--epochs", arg_epochs, "epoch count");
    tr->add_option("--batch", arg_batch, "batch size");
    tr->add_option("--lr", arg_lr, "learning rate");
    tr->add_option("--lambda-dir", arg_ldir, "direction loss weight");
    tr->add_option("--lambda-rew", arg_lrew, "preference loss weight");
    tr->add_flag("--no-amplifier", no_amp, "ablate the action amplifier");
    tr->callback([&] {
        KvConfig kv = load_config_arg(config_path);
        TrainConfig tc = train_from_kv(kv);
        if (arg_epochs >= 0) tc.epochs = arg_epochs;
        if (arg_batch > 0) tc.batch = arg_batch;
        if (arg_lr > 0) tc.lr = arg_lr;
        if (arg_ldir >= 0) tc.lambda_dir = arg_ldir;
        if (arg_lrew >= 0) tc.lambda_rew = arg_lrew;
        tc.seed = seed;
        tc.validate();
        EpisodeDataset eps = read_rvep(episodes_file);
        TupleDataset tuples = read_rvtp(tuples_file);
        PrmConfig mc = model_from_kv(kv, tuples.d_dir);
        if (no_amp) mc.use_amplifier = false;
        mc.grid = eps.grid;
        mc.grid_channels = eps.grid_channels;
        mc.state_dim = eps.state_dim;
        mc.n_tasks = eps.n_tasks;
        RunDir run = RunDir::create(run_path);
        train_to_kv(tc, kv);
        model_to_kv(mc, kv);
        kv.set("train.episodes_file", episodes_file);
        kv.set("train.tuples_file", tuples_file);
        run.write_config(kv);
        run.write_seed(seed);
        Prm model(mc, RngStream(tc.seed).sub(0x17).next_u64());
        auto logs = train(model, eps, tuples, tc, run.root);
        if (!logs.empty()) {
            const auto& last = logs.back();
            std::cout << "final: total=" << last.total << " L_dir=" << last.l_dir
                      << " L_rew=" << last.l_rew << " cos=" << last.cos_align
                      << " angle=" << last.angle_err << " spearman=" << last.spearman
                      << " pair_acc=" << last.pair_acc << "\n";
        }
        std::cout << "checkpoint: " << run.file("checkpoints/final.rvpm") << "\n";
    });

    // ---- validate
    auto* va = app.add_subcommand("validate", "validation metrics for a checkpoint");
    va->add_option("--prm", prm_path, "checkpoint file")->required();
    va->add_option("--episodes-file", episodes_file, "episodes.rvep input")->required();
    va->add_option("--tuples-file", tuples_file, "tuples.rvtp input")->required();
    va->add_option("--seed", seed, "split seed (must match training)");
    std::string split = "val";
    va->add_option("--split", split, "val | train | all");
    va->callback([&] {
        Prm model = Prm::load(prm_path);
        EpisodeDataset eps = read_rvep(episodes_file);
        TupleDataset tuples = read_rvtp(tuples_file);
        TrainConfig tc;
        std::vector<const TrainingTuple*> sel;
        for (const auto& t : tuples.tuples) {
            bool is_val = is_val_episode(static_cast<uint64_t>(t.episode), seed, tc.val_mod);
            if (split == "all" || (split == "val" && is_val) || (split == "train" && !is_val))
                sel.push_back(&t);
        }
        ValReport rep = validate(model, eps, sel);
        std::cout << "tuples=" << sel.size() << " cos_align=" << rep.cos_align
                  << " angle_err=" << rep.angle_err << " spearman=" << rep.spearman
                  << " pair_acc=" << rep.pair_acc << "\n";
    });

    // ---- eval-tts
    auto* ev = app.add_subcommand("eval-tts", "success-rate grid over (n, m, mode)");
    std::string n_list = "4", m_list = "12", mode_list = "dg";
    double alpha = 1.0471975511965976, sigma_exp = 0.1;
    ev->add_option("--run", run_path, "run directory (must not exist)")->required();
    ev->add_option("--prm", prm_path, "checkpoint file")->required();
    ev->add_option("--episodes", episodes, "episodes per cell");
    ev->add_option("--seed", seed, "evaluation seed");
    ev->add_option("--n", n_list, "comma list of proposal counts");
    ev->add_option("--m", m_list, "comma list of expansion counts");
    ev->add_option("--mode", mode_list, "comma list of modes: none,random,dg");
    ev->add_option("--alpha", alpha, "angular bound (radians)");
    ev->add_option("--sigma-exp", sigma_exp, "expansion magnitude scale");
    ev->add_option("--out", out_path, "csv name inside the run dir (default eval.csv)");
    ev->add_option("--config", config_path, "key = value config file");
    ev->callback([&] {
        KvConfig kv = load_config_arg(config_path);
        EnvConfig env = env_from_kv(kv);
        Degradation deg = degrade_from_kv(kv);
        Prm model = Prm::load(prm_path);
        PrmVerifier verifier(model);
        TtsConfig base;
        base.alpha = kv.get_double("tts.alpha", alpha);
        base.sigma_exp = kv.get_double("tts.sigma_exp", sigma_exp);
        std::vector<EvalCell> cells;
        for (const std::string& ms : parse_str_list(mode_list)) {
            TtsMode mode = tts_mode_from_string(ms);
            for (int n : parse_int_list(n_list)) {
                if (mode == TtsMode::none) {
                    cells.push_back({mode, n, 0});
                    continue;
                }
                for (int m : parse_int_list(m_list))
                    if (m % n == 0) cells.push_back({mode, n, m});
            }
        }
        RunDir run = RunDir::create(run_path);
        env_to_kv(env, kv);
        degrade_to_kv(deg, kv);
        kv.set_double("tts.alpha", base.alpha);
        kv.set_double("tts.sigma_exp", base.sigma_exp);
        kv.set("tts.n", n_list);
        kv.set("tts.m", m_list);
        kv.set("tts.mode", mode_list);
        kv.set_int("eval.episodes", episodes);
        kv.set_int("eval.seed", static_cast<int64_t>(seed));
        kv.set("eval.prm", prm_path);
        run.write_config(kv);
        run.write_seed(seed);
        auto rows = run_eval(env, deg, verifier, base, cells, episodes, seed);
        std::string csv_name = out_path.empty() ? "eval.csv" : out_path;
        auto csv = open_csv(run.file(csv_name),
                            "mode,n,m,k,episodes,successes,rate,se,ci_lo,ci_hi,mean_steps",
                            kv.hash_hex());
        std::ofstream log(run.file("log.txt"));
        for (const auto& r : rows) {
            csv << to_string(r.cell.mode) << ',' << r.cell.n << ',' << r.cell.m << ','
                << r.cell.n + r.cell.m << ',' << r.episodes << ',' << r.successes << ','
                << fmt_double(r.rate) << ',' << fmt_double(r.se) << ',' << fmt_double(r.ci_lo)
                << ',' << fmt_double(r.ci_hi) << ',' << fmt_double(r.mean_steps) << '\n';
            log << to_string(r.cell.mode) << " n=" << r.cell.n << " m=" << r.cell.m
                << " rate=" << r.rate << " wall_s=" << r.wall_s << "\n";
            std::cout << to_string(r.cell.mode) << " n=" << r.cell.n << " m=" << r.cell.m
                      << " rate=" << r.rate << " +-" << r.se << "\n";
        }
        write_scaling_svg(run.file("scaling.svg"), rows);
    });

    // ---- bench-cache
    auto* bc = app.add_subcommand("bench-cache", "perception-cache latency benchmark");
    std::string counts_list = "10,100,1000,10000";
    int reps = 5, threads = 1;
    bc->add_option("--run", run_path, "run directory (must not exist)")->required();
    bc->add_option("--prm", prm_path, "checkpoint file")->required();
    bc->add_option("--counts", counts_list, "comma list of candidate counts");
    bc->add_option("--reps", reps, "timed repetitions (median taken)");
    bc->add_option("--threads", threads, "parallel scoring threads (1 = off)");
    bc->add_option("--seed", seed, "scene/action seed");
    bc->callback([&] {
        Prm model = Prm::load(prm_path);
        EnvConfig env;
        env.grid = model.config().grid;
        RngStream rng(seed);
        RngStream reset_rng = rng.sub(0xE57);
        EnvState s = env_reset(env, reset_rng);
        Observation obs = observe(env, s, 0);
        RunDir run = RunDir::create(run_path);
        KvConfig kv;
        kv.set("bench.counts", counts_list);
        kv.set_int("bench.reps", reps);
        kv.set_int("bench.threads", threads);
        kv.set_int("bench.seed", static_cast<int64_t>(seed));
        kv.set("bench.prm", prm_path);
        run.write_config(kv);
        run.write_seed(seed);
        BenchReport rep = bench_cache(model, obs, parse_int_list(counts_list), reps, 2, seed, threads);
        auto csv = open_csv(run.file("bench.csv"),
                            "count,without_cache_s,with_cache_s,speedup,per_action_ms",
                            kv.hash_hex());
        for (const auto& r : rep.rows)
            csv << r.count << ',' << fmt_double(r.without_s) << ',' << fmt_double(r.with_s) << ','
                << fmt_double(r.speedup()) << ',' << fmt_double(r.per_action_ms()) << '\n';
        std::cout << rep.to_table();
        std::cout << "# reference (other hardware, 1000 candidates): 41.4748 s -> 5.7384 s, 7.23x\n";
    });

    // ---- dump-field
    auto* df = app.add_subcommand("dump-field", "direction-field probe grid (planar only)");
    double bounds = 0.15;
    int resolution = 12;
    df->add_option("--run", run_path, "run directory (must not exist)")->required();
    df->add_option("--prm", prm_path, "checkpoint file")->required();
    df->add_option("--bounds", bounds, "probe half-extent");
    df->add_option("--resolution", resolution, "grid resolution per side");
    df->add_option("--seed", seed, "scene seed");
    df->callback([&] {
        Prm model = Prm::load(prm_path);
        if (model.config().d_dir != 2)
            throw CLI::ValidationError("dump-field supports d_dir = 2 only");
        EnvConfig env;
        env.grid = model.config().grid;
        RngStream rng(seed);
        RngStream reset_rng = rng.sub(0xE57);
        EnvState s = env_reset(env, reset_rng);
        Observation obs = observe(env, s, 0);
        Action ea = expert_action(env, s);
        RunDir run = RunDir::create(run_path);
        KvConfig kv;
        kv.set_double("field.bounds", bounds);
        kv.set_int("field.resolution", resolution);
        kv.set_int("field.seed", static_cast<int64_t>(seed));
        kv.set("field.prm", prm_path);
        run.write_config(kv);
        run.write_seed(seed);
        PrmVerifier verifier(model);
        DirectionFieldDump dump =
            dump_direction_field(verifier, obs, {0, 0}, ea.gripper, bounds, resolution);
        write_field_csv(run.file("field.csv"), dump, kv.hash_hex());
        write_field_svg(run.file("field.svg"), dump);
        std::cout << "probes=" << dump.probes.size() << " -> " << run.file("field.svg") << "\n";
    });

    if (argc <= 1) {
        std::cout << app.help();
        return 2;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
