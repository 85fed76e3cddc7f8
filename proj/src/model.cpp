#include "rv/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace rv {

namespace {
constexpr double kLnEps = 1e-5;
constexpr double kDirEpsSq = 1e-12;  // smooth-normalize floor in the loss path
constexpr double kInitStd = 0.02;
}  // namespace

void PrmConfig::validate() const {
    if (hidden <= 0 || hidden % heads != 0)
        throw std::invalid_argument("PrmConfig: hidden must be positive and divisible by heads");
    if (hidden % 4 != 0) throw std::invalid_argument("PrmConfig: hidden must be divisible by 4");
    if (d_dir != 2 && d_dir != 6) throw std::invalid_argument("PrmConfig: d_dir must be 2 or 6");
    if (layers < 1) throw std::invalid_argument("PrmConfig: need at least one fusion layer");
    if (patch <= 0 || grid % patch != 0)
        throw std::invalid_argument("PrmConfig: raster size not divisible by patch size");
    if (n_tasks < 1 || state_dim < 1 || grid_channels < 1)
        throw std::invalid_argument("PrmConfig: bad dimensions");
}

Node* ParamBinder::operator()(const std::string& name) {
    for (auto& [n, node] : bound)
        if (n == name) return node;
    Node* node = g.input(ps.get(name).value);
    bound.emplace_back(name, node);
    return node;
}

void ParamBinder::accumulate_grads() {
    for (auto& [name, node] : bound) add_inplace(ps.get(name).grad, node->grad);
}

Tensor2 extract_patches(const Observation& obs, const PrmConfig& cfg) {
    if (static_cast<int>(obs.grid.size()) != cfg.grid_channels * cfg.grid * cfg.grid)
        throw std::invalid_argument("extract_patches: grid length mismatch");
    const int G = cfg.grid, P = cfg.patch, side = cfg.patches_per_side();
    Tensor2 out(cfg.n_patches(), cfg.patch_dim());
    for (int py = 0; py < side; ++py) {
        for (int px = 0; px < side; ++px) {
            double* row = out.row_ptr(py * side + px);
            int i = 0;
            for (int c = 0; c < cfg.grid_channels; ++c) {
                const double* chan = obs.grid.data() + static_cast<size_t>(c) * G * G;
                for (int yy = 0; yy < P; ++yy)
                    for (int xx = 0; xx < P; ++xx)
                        row[i++] = chan[(py * P + yy) * G + (px * P + xx)];
            }
        }
    }
    return out;
}

Tensor2 action_row(const Action& a) {
    Tensor2 t(1, a.d_dir() + 1);
    for (int i = 0; i < a.d_dir(); ++i) t.data[i] = a.pose[i];
    t.data[a.d_dir()] = a.gripper;
    return t;
}

Prm::Prm(PrmConfig cfg, uint64_t init_seed) : cfg_(cfg) {
    cfg_.validate();
    init_params(init_seed);
}

void Prm::init_params(uint64_t seed) {
    RngStream rng(seed);
    const int H = cfg_.hidden;
    auto tn = [&](int r, int c) { return trunc_normal(rng, r, c, kInitStd); };
    auto zeros = [](int r, int c) { return Tensor2::zeros(r, c); };
    auto ones = [](int r, int c) { return Tensor2::full(r, c, 1.0); };

    ps_.add("embed.patch.W", tn(cfg_.patch_dim(), H));
    ps_.add("embed.patch.b", zeros(1, H));
    ps_.add("embed.state.W", tn(cfg_.state_dim, H));
    ps_.add("embed.state.b", zeros(1, H));
    ps_.add("embed.task.E", tn(cfg_.n_tasks, H));
    ps_.add("embed.pos", tn(cfg_.n_obs_tokens(), H));
    ps_.add("embed.ln.g", ones(1, H));
    ps_.add("embed.ln.b", zeros(1, H));

    ps_.add("act.embed.W", tn(cfg_.d_dir + 1, H));
    ps_.add("act.embed.b", zeros(1, H));
    ps_.add("act.amp.fc1.W", tn(H, 2 * H));
    ps_.add("act.amp.fc1.b", zeros(1, 2 * H));
    ps_.add("act.amp.fc2.W", tn(2 * H, H));
    ps_.add("act.amp.fc2.b", zeros(1, H));
    ps_.add("act.amp.ln.g", ones(1, H));
    ps_.add("act.amp.ln.b", zeros(1, H));

    for (int l = 0; l < cfg_.layers; ++l) {
        std::string p = "blk" + std::to_string(l) + ".";
        ps_.add(p + "ln1.g", ones(1, H));
        ps_.add(p + "ln1.b", zeros(1, H));
        ps_.add(p + "attn.Wq", tn(H, H));
        ps_.add(p + "attn.bq", zeros(1, H));
        ps_.add(p + "attn.Wk", tn(H, H));
        ps_.add(p + "attn.bk", zeros(1, H));
        ps_.add(p + "attn.Wv", tn(H, H));
        ps_.add(p + "attn.bv", zeros(1, H));
        ps_.add(p + "attn.Wo", tn(H, H));
        ps_.add(p + "attn.bo", zeros(1, H));
        ps_.add(p + "ln2.g", ones(1, H));
        ps_.add(p + "ln2.b", zeros(1, H));
        ps_.add(p + "ffn.W1", tn(H, cfg_.ffn_mult * H));
        ps_.add(p + "ffn.b1", zeros(1, cfg_.ffn_mult * H));
        ps_.add(p + "ffn.W2", tn(cfg_.ffn_mult * H, H));
        ps_.add(p + "ffn.b2", zeros(1, H));
    }

    ps_.add("read.q", tn(2, H));  // row 0 reward query, row 1 direction query
    ps_.add("read.lnq.g", ones(1, H));
    ps_.add("read.lnq.b", zeros(1, H));
    ps_.add("read.lnkv.g", ones(1, H));
    ps_.add("read.lnkv.b", zeros(1, H));
    ps_.add("read.attn.Wq", tn(H, H));
    ps_.add("read.attn.bq", zeros(1, H));
    ps_.add("read.attn.Wk", tn(H, H));
    ps_.add("read.attn.bk", zeros(1, H));
    ps_.add("read.attn.Wv", tn(H, H));
    ps_.add("read.attn.bv", zeros(1, H));
    ps_.add("read.attn.Wo", tn(H, H));
    ps_.add("read.attn.bo", zeros(1, H));
    ps_.add("read.lnf.g", ones(1, H));
    ps_.add("read.lnf.b", zeros(1, H));

    // Heads per the architecture table; final layers zero-initialized so the
    // reward starts at exactly 0 and the direction starts symmetric.
    ps_.add("head.rew.W1", tn(H, H / 2));
    ps_.add("head.rew.b1", zeros(1, H / 2));
    ps_.add("head.rew.W2", tn(H / 2, H / 4));
    ps_.add("head.rew.b2", zeros(1, H / 4));
    ps_.add("head.rew.W3", zeros(H / 4, 1));
    ps_.add("head.rew.b3", zeros(1, 1));
    ps_.add("head.dir.W1", tn(H, H / 2));
    ps_.add("head.dir.b1", zeros(1, H / 2));
    ps_.add("head.dir.W2", zeros(H / 2, cfg_.d_dir));
    ps_.add("head.dir.b2", zeros(1, cfg_.d_dir));
}

// ---------------------------------------------------------------------------
// Graph forward (training and the monolithic no-cache route)

namespace {

AttnMask fusion_mask(const PrmConfig& cfg) {
    // Observation rows attend among themselves only; the action row sees
    // everything. Keeps perception features independent of the candidate.
    const int T = cfg.seq_len(), To = cfg.n_obs_tokens();
    AttnMask m{T, T, std::vector<uint8_t>(static_cast<size_t>(T) * T, 0)};
    for (int i = 0; i < To; ++i)
        for (int j = 0; j < To; ++j) m.allow[static_cast<size_t>(i) * T + j] = 1;
    for (int j = 0; j < T; ++j) m.allow[static_cast<size_t>(To) * T + j] = 1;
    return m;
}

std::vector<int> tile_indices(int rows_per_copy, int copies) {
    std::vector<int> idx;
    idx.reserve(static_cast<size_t>(rows_per_copy) * copies);
    for (int s = 0; s < copies; ++s)
        for (int r = 0; r < rows_per_copy; ++r) idx.push_back(r);
    return idx;
}

}  // namespace

PrmGraphOut build_prm_graph(Graph& g, ParamBinder& bind, const PrmConfig& cfg,
                            const std::vector<const Observation*>& uniq_obs,
                            const std::vector<int>& obs_of_seq, const Tensor2& actions) {
    const int H = cfg.hidden;
    const int To = cfg.n_obs_tokens(), T = cfg.seq_len(), P = cfg.n_patches();
    const int nu = static_cast<int>(uniq_obs.size());
    const int S = static_cast<int>(obs_of_seq.size());
    if (actions.rows != S || actions.cols != cfg.d_dir + 1)
        throw std::invalid_argument("build_prm_graph: actions must be [S x (d_dir+1)]");

    // --- observation tokens for the unique observations
    Tensor2 patches(nu * P, cfg.patch_dim());
    Tensor2 states(nu, cfg.state_dim);
    std::vector<int> task_idx(nu);
    for (int u = 0; u < nu; ++u) {
        Tensor2 p = extract_patches(*uniq_obs[u], cfg);
        std::copy(p.data.begin(), p.data.end(), patches.data.begin() + static_cast<size_t>(u) * P * cfg.patch_dim());
        if (static_cast<int>(uniq_obs[u]->state_vec.size()) != cfg.state_dim)
            throw std::invalid_argument("build_prm_graph: state_vec length mismatch");
        std::copy(uniq_obs[u]->state_vec.begin(), uniq_obs[u]->state_vec.end(), states.row_ptr(u));
        if (uniq_obs[u]->task_id < 0 || uniq_obs[u]->task_id >= cfg.n_tasks)
            throw std::invalid_argument("build_prm_graph: task_id out of range");
        task_idx[u] = uniq_obs[u]->task_id;
    }
    Node* ptok = g.affine(g.input(std::move(patches)), bind("embed.patch.W"), bind("embed.patch.b"));
    Node* stok = g.affine(g.input(std::move(states)), bind("embed.state.W"), bind("embed.state.b"));
    Node* ttok = g.gather_rows(bind("embed.task.E"), task_idx);

    // Group rows per observation: [16 patches, state, task] x nu.
    std::vector<int> group(static_cast<size_t>(nu) * To);
    for (int u = 0; u < nu; ++u) {
        for (int p = 0; p < P; ++p) group[static_cast<size_t>(u) * To + p] = u * P + p;
        group[static_cast<size_t>(u) * To + P] = nu * P + u;
        group[static_cast<size_t>(u) * To + P + 1] = nu * P + nu + u;
    }
    Node* raw = g.gather_rows(g.concat_rows({ptok, stok, ttok}), group);
    Node* pos = g.gather_rows(bind("embed.pos"), tile_indices(To, nu));
    Node* obs_tokens = g.layer_norm(g.add(raw, pos), bind("embed.ln.g"), bind("embed.ln.b"), kLnEps);

    // Replicate observation token blocks out to the S sequences.
    std::vector<int> rep(static_cast<size_t>(S) * To);
    for (int s = 0; s < S; ++s) {
        if (obs_of_seq[s] < 0 || obs_of_seq[s] >= nu)
            throw std::invalid_argument("build_prm_graph: obs_of_seq out of range");
        for (int t = 0; t < To; ++t) rep[static_cast<size_t>(s) * To + t] = obs_of_seq[s] * To + t;
    }
    Node* obs_rep = g.gather_rows(obs_tokens, rep);

    // --- action tokens
    Node* emb = g.affine(g.input(actions), bind("act.embed.W"), bind("act.embed.b"));
    Node* atok = emb;
    if (cfg.use_amplifier) {
        Node* h = g.gelu(g.affine(emb, bind("act.amp.fc1.W"), bind("act.amp.fc1.b")));
        Node* amp = g.layer_norm(g.affine(h, bind("act.amp.fc2.W"), bind("act.amp.fc2.b")),
                                 bind("act.amp.ln.g"), bind("act.amp.ln.b"), kLnEps);
        atok = g.add(emb, amp);
    }

    // Interleave [obs tokens | action token] per sequence.
    std::vector<int> inter(static_cast<size_t>(S) * T);
    for (int s = 0; s < S; ++s) {
        for (int t = 0; t < To; ++t) inter[static_cast<size_t>(s) * T + t] = s * To + t;
        inter[static_cast<size_t>(s) * T + To] = S * To + s;
    }
    Node* x = g.gather_rows(g.concat_rows({obs_rep, atok}), inter);

    const AttnMask fmask = fusion_mask(cfg);
    for (int l = 0; l < cfg.layers; ++l) {
        std::string p = "blk" + std::to_string(l) + ".";
        Node* h = g.layer_norm(x, bind(p + "ln1.g"), bind(p + "ln1.b"), kLnEps);
        Node* q = g.affine(h, bind(p + "attn.Wq"), bind(p + "attn.bq"));
        Node* k = g.affine(h, bind(p + "attn.Wk"), bind(p + "attn.bk"));
        Node* v = g.affine(h, bind(p + "attn.Wv"), bind(p + "attn.bv"));
        Node* att = g.attention(q, k, v, S, cfg.heads, fmask);
        x = g.add(x, g.affine(att, bind(p + "attn.Wo"), bind(p + "attn.bo")));
        Node* h2 = g.layer_norm(x, bind(p + "ln2.g"), bind(p + "ln2.b"), kLnEps);
        Node* f1 = g.gelu(g.affine(h2, bind(p + "ffn.W1"), bind(p + "ffn.b1")));
        x = g.add(x, g.affine(f1, bind(p + "ffn.W2"), bind(p + "ffn.b2")));
    }

    // Readout: the two learned query tokens attend once over the fused
    // sequence, then feed the reward and direction heads.
    Node* q0 = g.gather_rows(bind("read.q"), tile_indices(2, S));
    Node* qn = g.layer_norm(q0, bind("read.lnq.g"), bind("read.lnq.b"), kLnEps);
    Node* kv = g.layer_norm(x, bind("read.lnkv.g"), bind("read.lnkv.b"), kLnEps);
    Node* rq = g.affine(qn, bind("read.attn.Wq"), bind("read.attn.bq"));
    Node* rk = g.affine(kv, bind("read.attn.Wk"), bind("read.attn.bk"));
    Node* rvv = g.affine(kv, bind("read.attn.Wv"), bind("read.attn.bv"));
    Node* ratt = g.attention(rq, rk, rvv, S, cfg.heads, AttnMask::full(2, T));
    Node* y = g.add(q0, g.affine(ratt, bind("read.attn.Wo"), bind("read.attn.bo")));
    Node* f = g.layer_norm(y, bind("read.lnf.g"), bind("read.lnf.b"), kLnEps);

    std::vector<int> rew_rows(S), dir_rows(S);
    for (int s = 0; s < S; ++s) {
        rew_rows[s] = 2 * s;
        dir_rows[s] = 2 * s + 1;
    }
    Node* fr = g.gather_rows(f, rew_rows);
    Node* fd = g.gather_rows(f, dir_rows);

    Node* r1 = g.gelu(g.affine(fr, bind("head.rew.W1"), bind("head.rew.b1")));
    Node* r2 = g.gelu(g.affine(r1, bind("head.rew.W2"), bind("head.rew.b2")));
    Node* reward = g.affine(r2, bind("head.rew.W3"), bind("head.rew.b3"));

    Node* d1 = g.gelu(g.affine(fd, bind("head.dir.W1"), bind("head.dir.b1")));
    Node* dir_raw = g.affine(d1, bind("head.dir.W2"), bind("head.dir.b2"));
    Node* dir_unit = g.row_normalize(dir_raw, kDirEpsSq);

    return {reward, dir_raw, dir_unit};
}

// ---------------------------------------------------------------------------
// Streaming inference (pre_encode once, per-candidate action path)

namespace {

Tensor2 affine_t(const Tensor2& x, const Tensor2& w, const Tensor2& b) {
    Tensor2 y = matmul(x, w);
    for (int r = 0; r < y.rows; ++r) {
        double* p = y.row_ptr(r);
        for (int c = 0; c < y.cols; ++c) p[c] += b.data[c];
    }
    return y;
}

Tensor2 layer_norm_t(const Tensor2& x, const Tensor2& g, const Tensor2& b) {
    Tensor2 y(x.rows, x.cols);
    const int C = x.cols;
    for (int r = 0; r < x.rows; ++r) {
        const double* xr = x.row_ptr(r);
        double mu = 0.0;
        for (int c = 0; c < C; ++c) mu += xr[c];
        mu /= C;
        double var = 0.0;
        for (int c = 0; c < C; ++c) var += (xr[c] - mu) * (xr[c] - mu);
        var /= C;
        double is = 1.0 / std::sqrt(var + kLnEps);
        double* yr = y.row_ptr(r);
        for (int c = 0; c < C; ++c) yr[c] = (xr[c] - mu) * is * g.data[c] + b.data[c];
    }
    return y;
}

void gelu_inplace(Tensor2& x) {
    for (double& e : x.data) e = gelu(e);
}

// Multi-head attention of query rows over key/value rows (full visibility).
Tensor2 attn_t(const Tensor2& q, const Tensor2& k, const Tensor2& v, int heads) {
    const int H = q.cols, dh = H / heads, tq = q.rows, tkv = k.rows;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    Tensor2 out(tq, H);
    std::vector<double> z(tkv);
    for (int h = 0; h < heads; ++h) {
        for (int i = 0; i < tq; ++i) {
            const double* qi = q.row_ptr(i) + h * dh;
            double m = -1e300;
            for (int j = 0; j < tkv; ++j) {
                const double* kj = k.row_ptr(j) + h * dh;
                double s = 0.0;
                for (int c = 0; c < dh; ++c) s += qi[c] * kj[c];
                z[j] = s * scale;
                if (z[j] > m) m = z[j];
            }
            double sum = 0.0;
            for (int j = 0; j < tkv; ++j) {
                z[j] = std::exp(z[j] - m);
                sum += z[j];
            }
            double* oi = out.row_ptr(i) + h * dh;
            for (int j = 0; j < tkv; ++j) {
                double p = z[j] / sum;
                const double* vj = v.row_ptr(j) + h * dh;
                for (int c = 0; c < dh; ++c) oi[c] += p * vj[c];
            }
        }
    }
    return out;
}

Tensor2 vstack(const Tensor2& a, const Tensor2& b) {
    Tensor2 y(a.rows + b.rows, a.cols);
    std::copy(a.data.begin(), a.data.end(), y.data.begin());
    std::copy(b.data.begin(), b.data.end(), y.data.begin() + a.data.size());
    return y;
}

}  // namespace

PerceptionCache Prm::pre_encode(const Observation& obs, StepStamp stamp) const {
    const auto& P = ps_;
    const int H = cfg_.hidden;

    Tensor2 ptok = affine_t(extract_patches(obs, cfg_), P.get("embed.patch.W").value,
                            P.get("embed.patch.b").value);
    Tensor2 srow(1, cfg_.state_dim);
    if (static_cast<int>(obs.state_vec.size()) != cfg_.state_dim)
        throw std::invalid_argument("pre_encode: state_vec length mismatch");
    std::copy(obs.state_vec.begin(), obs.state_vec.end(), srow.data.begin());
    Tensor2 stok = affine_t(srow, P.get("embed.state.W").value, P.get("embed.state.b").value);
    if (obs.task_id < 0 || obs.task_id >= cfg_.n_tasks)
        throw std::invalid_argument("pre_encode: task_id out of range");
    Tensor2 ttok(1, H);
    std::copy(P.get("embed.task.E").value.row_ptr(obs.task_id),
              P.get("embed.task.E").value.row_ptr(obs.task_id) + H, ttok.data.begin());

    Tensor2 raw = vstack(vstack(ptok, stok), ttok);
    add_inplace(raw, P.get("embed.pos").value);  // pos is [T_obs x H]
    Tensor2 tokens = layer_norm_t(raw, P.get("embed.ln.g").value, P.get("embed.ln.b").value);

    PerceptionCache cache;
    cache.stamp = stamp;
    cache.tokens = tokens;
    Tensor2 x = tokens;
    for (int l = 0; l < cfg_.layers; ++l) {
        std::string pre = "blk" + std::to_string(l) + ".";
        Tensor2 h = layer_norm_t(x, P.get(pre + "ln1.g").value, P.get(pre + "ln1.b").value);
        Tensor2 q = affine_t(h, P.get(pre + "attn.Wq").value, P.get(pre + "attn.bq").value);
        Tensor2 k = affine_t(h, P.get(pre + "attn.Wk").value, P.get(pre + "attn.bk").value);
        Tensor2 v = affine_t(h, P.get(pre + "attn.Wv").value, P.get(pre + "attn.bv").value);
        cache.blocks.push_back({k, v});
        Tensor2 att = attn_t(q, k, v, cfg_.heads);
        add_inplace(x, affine_t(att, P.get(pre + "attn.Wo").value, P.get(pre + "attn.bo").value));
        Tensor2 h2 = layer_norm_t(x, P.get(pre + "ln2.g").value, P.get(pre + "ln2.b").value);
        Tensor2 f1 = affine_t(h2, P.get(pre + "ffn.W1").value, P.get(pre + "ffn.b1").value);
        gelu_inplace(f1);
        add_inplace(x, affine_t(f1, P.get(pre + "ffn.W2").value, P.get(pre + "ffn.b2").value));
    }
    Tensor2 kv = layer_norm_t(x, P.get("read.lnkv.g").value, P.get("read.lnkv.b").value);
    cache.read_k = affine_t(kv, P.get("read.attn.Wk").value, P.get("read.attn.bk").value);
    cache.read_v = affine_t(kv, P.get("read.attn.Wv").value, P.get("read.attn.bv").value);
    return cache;
}

Tensor2 Prm::action_encode(const Action& a) const {
    if (a.d_dir() != cfg_.d_dir)
        throw std::invalid_argument("action_encode: action d_dir mismatch vs PrmConfig");
    const auto& P = ps_;
    Tensor2 emb = affine_t(action_row(a), P.get("act.embed.W").value, P.get("act.embed.b").value);
    if (!cfg_.use_amplifier) return emb;
    Tensor2 h = affine_t(emb, P.get("act.amp.fc1.W").value, P.get("act.amp.fc1.b").value);
    gelu_inplace(h);
    Tensor2 amp = layer_norm_t(affine_t(h, P.get("act.amp.fc2.W").value, P.get("act.amp.fc2.b").value),
                               P.get("act.amp.ln.g").value, P.get("act.amp.ln.b").value);
    add_inplace(amp, emb);
    return amp;
}

PrmOutput Prm::score(const PerceptionCache& cache, const Action& a) const {
    const auto& P = ps_;
    Tensor2 xa = action_encode(a);
    for (int l = 0; l < cfg_.layers; ++l) {
        std::string pre = "blk" + std::to_string(l) + ".";
        Tensor2 h = layer_norm_t(xa, P.get(pre + "ln1.g").value, P.get(pre + "ln1.b").value);
        Tensor2 q = affine_t(h, P.get(pre + "attn.Wq").value, P.get(pre + "attn.bq").value);
        Tensor2 ka = affine_t(h, P.get(pre + "attn.Wk").value, P.get(pre + "attn.bk").value);
        Tensor2 va = affine_t(h, P.get(pre + "attn.Wv").value, P.get(pre + "attn.bv").value);
        Tensor2 att = attn_t(q, vstack(cache.blocks[l].k, ka), vstack(cache.blocks[l].v, va),
                             cfg_.heads);
        add_inplace(xa, affine_t(att, P.get(pre + "attn.Wo").value, P.get(pre + "attn.bo").value));
        Tensor2 h2 = layer_norm_t(xa, P.get(pre + "ln2.g").value, P.get(pre + "ln2.b").value);
        Tensor2 f1 = affine_t(h2, P.get(pre + "ffn.W1").value, P.get(pre + "ffn.b1").value);
        gelu_inplace(f1);
        add_inplace(xa, affine_t(f1, P.get(pre + "ffn.W2").value, P.get(pre + "ffn.b2").value));
    }
    Tensor2 kva = layer_norm_t(xa, P.get("read.lnkv.g").value, P.get("read.lnkv.b").value);
    Tensor2 ka = affine_t(kva, P.get("read.attn.Wk").value, P.get("read.attn.bk").value);
    Tensor2 va = affine_t(kva, P.get("read.attn.Wv").value, P.get("read.attn.bv").value);

    const Tensor2& q0 = P.get("read.q").value;
    Tensor2 qn = layer_norm_t(q0, P.get("read.lnq.g").value, P.get("read.lnq.b").value);
    Tensor2 rq = affine_t(qn, P.get("read.attn.Wq").value, P.get("read.attn.bq").value);
    Tensor2 att = attn_t(rq, vstack(cache.read_k, ka), vstack(cache.read_v, va), cfg_.heads);
    Tensor2 y = affine_t(att, P.get("read.attn.Wo").value, P.get("read.attn.bo").value);
    add_inplace(y, q0);
    Tensor2 f = layer_norm_t(y, P.get("read.lnf.g").value, P.get("read.lnf.b").value);

    Tensor2 fr(1, cfg_.hidden), fd(1, cfg_.hidden);
    std::copy(f.row_ptr(0), f.row_ptr(0) + cfg_.hidden, fr.data.begin());
    std::copy(f.row_ptr(1), f.row_ptr(1) + cfg_.hidden, fd.data.begin());

    Tensor2 r1 = affine_t(fr, P.get("head.rew.W1").value, P.get("head.rew.b1").value);
    gelu_inplace(r1);
    Tensor2 r2 = affine_t(r1, P.get("head.rew.W2").value, P.get("head.rew.b2").value);
    gelu_inplace(r2);
    Tensor2 rw = affine_t(r2, P.get("head.rew.W3").value, P.get("head.rew.b3").value);

    Tensor2 d1 = affine_t(fd, P.get("head.dir.W1").value, P.get("head.dir.b1").value);
    gelu_inplace(d1);
    Tensor2 dr = affine_t(d1, P.get("head.dir.W2").value, P.get("head.dir.b2").value);

    PrmOutput out;
    out.reward = rw.data[0];
    auto [u, deg] = unit_normalize(dr.data);
    out.direction = std::move(u);
    out.degenerate_direction = deg;
    return out;
}

PrmOutput Prm::score(const PerceptionCache& cache, const Action& a, StepStamp current) const {
    if (!(cache.stamp == current))
        throw std::runtime_error("Prm::score: stale perception cache (stamp mismatch)");
    return score(cache, a);
}

std::vector<PrmOutput> Prm::score_batch(const PerceptionCache& cache,
                                        const std::vector<Action>& actions) const {
    std::vector<PrmOutput> out;
    out.reserve(actions.size());
    for (const auto& a : actions) out.push_back(score(cache, a));
    return out;
}

std::vector<PrmOutput> Prm::score_batch(const PerceptionCache& cache,
                                        const std::vector<Action>& actions,
                                        StepStamp current) const {
    if (!(cache.stamp == current))
        throw std::runtime_error("Prm::score_batch: stale perception cache (stamp mismatch)");
    return score_batch(cache, actions);
}

PrmOutput Prm::score_monolithic(const Observation& obs, const Action& a) const {
    Graph g;
    ParamStore& ps = const_cast<ParamStore&>(ps_);  // read-only use; no backward here
    ParamBinder bind{g, ps, {}};
    std::vector<const Observation*> uo{&obs};
    PrmGraphOut o = build_prm_graph(g, bind, cfg_, uo, {0}, action_row(a));
    PrmOutput out;
    out.reward = o.reward->val.data[0];
    auto [u, deg] = unit_normalize(o.dir_raw->val.data);
    out.direction = std::move(u);
    out.degenerate_direction = deg;
    return out;
}

// ---------------------------------------------------------------------------
// Checkpoint file, magic "RVPM": config header then named parameter blocks.

namespace {
constexpr char kCkptMagic[4] = {'R', 'V', 'P', 'M'};
constexpr uint32_t kCkptVersion = 1;

void put_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
uint32_t get_u32(std::istream& is) {
    uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
}  // namespace

void Prm::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("Prm::save: cannot open " + path);
    os.write(kCkptMagic, 4);
    put_u32(os, kCkptVersion);
    put_u32(os, static_cast<uint32_t>(cfg_.hidden));
    put_u32(os, static_cast<uint32_t>(cfg_.layers));
    put_u32(os, static_cast<uint32_t>(cfg_.heads));
    put_u32(os, static_cast<uint32_t>(cfg_.d_dir));
    put_u32(os, static_cast<uint32_t>(cfg_.patch));
    put_u32(os, static_cast<uint32_t>(cfg_.grid));
    put_u32(os, static_cast<uint32_t>(cfg_.grid_channels));
    put_u32(os, static_cast<uint32_t>(cfg_.state_dim));
    put_u32(os, static_cast<uint32_t>(cfg_.n_tasks));
    put_u32(os, static_cast<uint32_t>(cfg_.ffn_mult));
    put_u32(os, cfg_.use_amplifier ? 1u : 0u);
    put_u32(os, static_cast<uint32_t>(ps_.all().size()));
    for (const auto& p : ps_.all()) {
        put_u32(os, static_cast<uint32_t>(p.name.size()));
        os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        put_u32(os, static_cast<uint32_t>(p.value.rows));
        put_u32(os, static_cast<uint32_t>(p.value.cols));
        os.write(reinterpret_cast<const char*>(p.value.data.data()),
                 static_cast<std::streamsize>(p.value.data.size() * 8));
    }
    if (!os) throw std::runtime_error("Prm::save: write failed for " + path);
}

Prm Prm::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("Prm::load: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kCkptMagic, 4) != 0)
        throw std::runtime_error("Prm::load: bad magic in " + path);
    if (get_u32(is) != kCkptVersion) throw std::runtime_error("Prm::load: unsupported version");
    PrmConfig cfg;
    cfg.hidden = static_cast<int>(get_u32(is));
    cfg.layers = static_cast<int>(get_u32(is));
    cfg.heads = static_cast<int>(get_u32(is));
    cfg.d_dir = static_cast<int>(get_u32(is));
    cfg.patch = static_cast<int>(get_u32(is));
    cfg.grid = static_cast<int>(get_u32(is));
    cfg.grid_channels = static_cast<int>(get_u32(is));
    cfg.state_dim = static_cast<int>(get_u32(is));
    cfg.n_tasks = static_cast<int>(get_u32(is));
    cfg.ffn_mult = static_cast<int>(get_u32(is));
    cfg.use_amplifier = get_u32(is) != 0;
    Prm model(cfg, 0);
    uint32_t n = get_u32(is);
    if (n != model.ps_.all().size())
        throw std::runtime_error("Prm::load: parameter count mismatch");
    for (auto& p : model.ps_.all()) {
        uint32_t len = get_u32(is);
        std::string name(len, '\0');
        is.read(name.data(), len);
        if (name != p.name) throw std::runtime_error("Prm::load: parameter order mismatch: " + name);
        uint32_t r = get_u32(is), c = get_u32(is);
        if (static_cast<int>(r) != p.value.rows || static_cast<int>(c) != p.value.cols)
            throw std::runtime_error("Prm::load: shape mismatch for " + name);
        is.read(reinterpret_cast<char*>(p.value.data.data()),
                static_cast<std::streamsize>(p.value.data.size() * 8));
    }
    if (!is) throw std::runtime_error("Prm::load: truncated file " + path);
    return model;
}

}  // namespace rv
