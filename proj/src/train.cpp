#include "rv/train.hpp"

#include "rv/runio.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace rv {

void TrainConfig::validate() const {
    if (lambda_dir < 0.0 || lambda_rew < 0.0 || (lambda_dir == 0.0 && lambda_rew == 0.0))
        throw std::invalid_argument("TrainConfig: lambdas must be >= 0 and not both 0");
    if (lr <= 0.0) throw std::invalid_argument("TrainConfig: lr must be positive");
    if (epochs < 0 || batch < 1) throw std::invalid_argument("TrainConfig: bad epochs/batch");
    if (val_mod < 2) throw std::invalid_argument("TrainConfig: val_mod must be >= 2");
}

double loss_dir(const std::vector<double>& u_hat, const std::vector<double>& u_gt) {
    if (u_hat.size() != u_gt.size()) throw std::invalid_argument("loss_dir: dimension mismatch");
    if (std::fabs(norm2(u_hat) - 1.0) > 1e-6 || std::fabs(norm2(u_gt) - 1.0) > 1e-6)
        throw std::invalid_argument("loss_dir: inputs must be unit vectors");
    return 1.0 - dot(u_hat, u_gt);
}

double loss_rew(double r_i, double r_j) { return softplus_neg(r_i - r_j); }

bool is_val_episode(uint64_t episode, uint64_t seed, int val_mod) {
    return mix64(mix64(episode ^ 0x5A17ULL) ^ mix64(seed)) % static_cast<uint64_t>(val_mod) == 0;
}

namespace {

std::vector<double> ranks_avg(const std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman_corr(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("spearman_corr: need two samples of equal length");
    std::vector<double> rx = ranks_avg(x), ry = ranks_avg(y);
    double mx = 0, my = 0;
    for (size_t i = 0; i < rx.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(rx.size());
    my /= static_cast<double>(ry.size());
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

ValReport validate(const Prm& model, const EpisodeDataset& episodes,
                   const std::vector<const TrainingTuple*>& tuples) {
    if (tuples.empty()) throw std::invalid_argument("validate: empty tuple set");
    ValReport rep;
    std::vector<double> rewards_pool, rmse_pool;
    double cos_sum = 0.0, ang_sum = 0.0;
    size_t correct = 0;
    for (const TrainingTuple* t : tuples) {
        const Observation& obs = episodes.step(t->episode, t->step).obs;
        PerceptionCache cache = model.pre_encode(obs, {t->episode, t->step});
        std::vector<Action> acts{t->a_e, t->a_anc, t->a_better, t->a_worse};
        std::vector<PrmOutput> outs = model.score_batch(cache, acts);
        const Action* sampled[3] = {&t->a_anc, &t->a_better, &t->a_worse};
        for (int i = 0; i < 3; ++i) {
            double c = dot(outs[i + 1].direction, t->u_gt[i]);
            cos_sum += c;
            double cc = std::min(std::max(c, -1.0 + 1e-12), 1.0 - 1e-12);
            ang_sum += std::acos(cc);
            rewards_pool.push_back(outs[i + 1].reward);
            rmse_pool.push_back(rmse_distance(*sampled[i], t->a_e));
        }
        for (auto [i, j] : t->pairs) {
            if (outs[i].reward > outs[j].reward) ++correct;
            ++rep.n_pairs;
        }
    }
    rep.n_actions = tuples.size() * 3;
    rep.cos_align = cos_sum / static_cast<double>(rep.n_actions);
    rep.angle_err = ang_sum / static_cast<double>(rep.n_actions);
    rep.spearman = spearman_corr(rewards_pool, rmse_pool);
    rep.pair_acc = rep.n_pairs ? static_cast<double>(correct) / static_cast<double>(rep.n_pairs) : 0.0;
    return rep;
}

BatchLoss batch_loss_and_grads(Prm& model, const EpisodeDataset& episodes,
                               const std::vector<const TrainingTuple*>& batch, double lambda_dir,
                               double lambda_rew, bool with_grads) {
    const PrmConfig& cfg = model.config();
    const int B = static_cast<int>(batch.size());
    const int S = 4 * B;  // expert, anchor, better, worse per tuple
    if (B == 0) throw std::invalid_argument("batch_loss_and_grads: empty batch");

    std::vector<const Observation*> uniq_obs(B);
    std::vector<int> obs_of_seq(S);
    Tensor2 actions(S, cfg.d_dir + 1);
    Tensor2 u_gt(3 * B, cfg.d_dir);
    std::vector<int> pref, disp, dir_rows;
    dir_rows.reserve(3 * B);
    for (int b = 0; b < B; ++b) {
        const TrainingTuple& t = *batch[b];
        if (t.a_e.d_dir() != cfg.d_dir)
            throw std::invalid_argument("batch_loss_and_grads: tuple d_dir mismatch vs model");
        uniq_obs[b] = &episodes.step(t.episode, t.step).obs;
        const Action* acts[4] = {&t.a_e, &t.a_anc, &t.a_better, &t.a_worse};
        for (int i = 0; i < 4; ++i) {
            int s = 4 * b + i;
            obs_of_seq[s] = b;
            for (int c = 0; c < cfg.d_dir; ++c) actions.at(s, c) = acts[i]->pose[c];
            actions.at(s, cfg.d_dir) = acts[i]->gripper;
        }
        for (int i = 0; i < 3; ++i) {
            dir_rows.push_back(4 * b + 1 + i);
            for (int c = 0; c < cfg.d_dir; ++c) u_gt.at(3 * b + i, c) = t.u_gt[i][c];
        }
        for (auto [i, j] : t.pairs) {
            pref.push_back(4 * b + i);
            disp.push_back(4 * b + j);
        }
    }

    Graph g;
    ParamBinder bind{g, model.params(), {}};
    PrmGraphOut out = build_prm_graph(g, bind, cfg, uniq_obs, obs_of_seq, actions);

    Node* dir_sel = g.gather_rows(out.dir_unit, dir_rows);
    Node* dots = g.rowwise_dot(dir_sel, g.input(u_gt));
    Node* l_dir = g.scale_add(g.mean_all(dots), -1.0, 1.0);

    Node* total = g.scale_add(l_dir, lambda_dir, 0.0);
    Node* l_rew = nullptr;
    if (!pref.empty()) {
        Node* rp = g.gather_rows(out.reward, pref);
        Node* rd = g.gather_rows(out.reward, disp);
        Node* diff = g.add(rp, g.scale_add(rd, -1.0, 0.0));
        l_rew = g.mean_all(g.softplus_neg(diff));
        total = g.add(total, g.scale_add(l_rew, lambda_rew, 0.0));
    }

    BatchLoss bl;
    bl.l_dir = l_dir->val.data[0];
    bl.l_rew = l_rew ? l_rew->val.data[0] : 0.0;
    bl.total = total->val.data[0];
    if (!std::isfinite(bl.total)) {
        std::ostringstream os;
        os << "batch_loss_and_grads: non-finite loss (l_dir=" << bl.l_dir << ", l_rew=" << bl.l_rew
           << ", batch=" << B << ")";
        throw std::runtime_error(os.str());
    }
    if (with_grads) {
        g.backward(total);
        bind.accumulate_grads();
    }
    return bl;
}

std::vector<EpochLog> train(Prm& model, const EpisodeDataset& episodes, const TupleDataset& tuples,
                            const TrainConfig& cfg, const std::string& run_dir) {
    cfg.validate();
    if (tuples.tuples.empty()) throw std::invalid_argument("train: empty tuple dataset");
    if (tuples.d_dir != model.config().d_dir)
        throw std::invalid_argument("train: dataset d_dir mismatch vs model");

    std::vector<const TrainingTuple*> train_set, val_set;
    for (const auto& t : tuples.tuples) {
        if (is_val_episode(static_cast<uint64_t>(t.episode), cfg.seed, cfg.val_mod))
            val_set.push_back(&t);
        else
            train_set.push_back(&t);
    }
    if (train_set.empty()) throw std::invalid_argument("train: no training tuples after split");

    std::ofstream log_csv;
    if (!run_dir.empty()) {
        std::filesystem::create_directories(run_dir + "/checkpoints");
        log_csv.open(run_dir + "/train_log.csv");
        log_csv << "epoch,L_dir,L_rew,total,cos_align,angle_err,spearman,pair_acc\n";
    }

    RngStream master(cfg.seed);
    std::vector<size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::vector<EpochLog> logs;
    int64_t adam_t = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        RngStream erng = master.sub(0xE90C4, static_cast<uint64_t>(epoch));
        for (size_t i = order.size(); i > 1; --i) {
            size_t j = erng.next_u64() % i;
            std::swap(order[i - 1], order[j]);
        }
        double sum_dir = 0, sum_rew = 0, sum_total = 0;
        size_t n_batches = 0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch)) {
            size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch));
            std::vector<const TrainingTuple*> batch;
            batch.reserve(end - start);
            for (size_t i = start; i < end; ++i) batch.push_back(train_set[order[i]]);
            model.params().zero_grad();
            BatchLoss bl = batch_loss_and_grads(model, episodes, batch, cfg.lambda_dir, cfg.lambda_rew);
            model.params().clip_global_norm(cfg.clip);
            model.params().adam_step(cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps, ++adam_t);
            sum_dir += bl.l_dir;
            sum_rew += bl.l_rew;
            sum_total += bl.total;
            ++n_batches;
        }
        EpochLog el;
        el.epoch = epoch;
        el.l_dir = sum_dir / static_cast<double>(n_batches);
        el.l_rew = sum_rew / static_cast<double>(n_batches);
        el.total = sum_total / static_cast<double>(n_batches);
        if (!val_set.empty()) {
            ValReport v = validate(model, episodes, val_set);
            el.cos_align = v.cos_align;
            el.angle_err = v.angle_err;
            el.spearman = v.spearman;
            el.pair_acc = v.pair_acc;
        }
        logs.push_back(el);
        if (!run_dir.empty()) {
            log_csv << el.epoch << ',' << fmt_double(el.l_dir) << ',' << fmt_double(el.l_rew) << ','
                    << fmt_double(el.total) << ',' << fmt_double(el.cos_align) << ','
                    << fmt_double(el.angle_err) << ',' << fmt_double(el.spearman) << ','
                    << fmt_double(el.pair_acc) << '\n';
            model.save(run_dir + "/checkpoints/last.rvpm");
        }
    }
    if (!run_dir.empty()) {
        model.save(run_dir + "/checkpoints/final.rvpm");
        log_csv.close();
    }
    return logs;
}

}  // namespace rv
