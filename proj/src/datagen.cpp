#include "rv/datagen.hpp"

#include "rv/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rv {

void NoiseConfig::validate() const {
    if (!(sigma_min > 0.0) || !(sigma_min <= sigma_base))
        throw std::invalid_argument("NoiseConfig: need 0 < sigma_min <= sigma_base");
    if (!(k > 0.0)) throw std::invalid_argument("NoiseConfig: need k > 0");
    if (tuples_per_step < 1) throw std::invalid_argument("NoiseConfig: tuples_per_step >= 1");
    if (subsample <= 0.0 || subsample > 1.0)
        throw std::invalid_argument("NoiseConfig: subsample in (0, 1]");
}

Action make_anchor(const Action& a_e, const NoiseConfig& cfg, RngStream& rng) {
    Action a = a_e;  // gripper inherited from the expert
    std::vector<double> n = rng.gaussian_vector(a_e.d_dir(), cfg.sigma_base);
    for (int i = 0; i < a_e.d_dir(); ++i) a.pose[i] += n[i];
    return a;
}

std::pair<std::vector<double>, bool> gt_direction(const Action& a_e, const Action& a_x) {
    if (a_e.d_dir() != a_x.d_dir()) throw std::invalid_argument("gt_direction: d_dir mismatch");
    std::vector<double> d(a_e.pose.size());
    for (size_t i = 0; i < d.size(); ++i) d[i] = a_e.pose[i] - a_x.pose[i];
    return unit_normalize(d);
}

double rmse_distance(const Action& a, const Action& a_e) {
    if (a.d_dir() != a_e.d_dir()) throw std::invalid_argument("rmse_distance: d_dir mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.pose.size(); ++i) {
        double d = a.pose[i] - a_e.pose[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(a.pose.size()));
}

double adaptive_sigma(double d0, const NoiseConfig& cfg) {
    return std::min(std::max(cfg.k * d0, cfg.sigma_min), cfg.sigma_base);
}

std::vector<double> halfspace_project(std::vector<double> eps, const std::vector<double>& u_gt,
                                      HalfSpace side) {
    double d = dot(eps, u_gt);
    bool flip = (side == HalfSpace::better) ? (d <= 0.0) : (d >= 0.0);
    if (flip)
        for (double& x : eps) x = -x;
    return eps;
}

std::optional<TrainingTuple> make_tuple(int episode, int step, const Action& a_e,
                                        const NoiseConfig& cfg, RngStream& rng) {
    const int d = a_e.d_dir();
    for (int attempt = 0; attempt < 5; ++attempt) {
        Action anc = make_anchor(a_e, cfg, rng);
        auto [u_anc, deg] = gt_direction(a_e, anc);
        if (deg) continue;
        double d0 = rmse_distance(anc, a_e);
        double sig = adaptive_sigma(d0, cfg);

        std::vector<double> eb =
            halfspace_project(rng.gaussian_vector(d, sig), u_anc, HalfSpace::better);
        std::vector<double> ew =
            halfspace_project(rng.gaussian_vector(d, sig), u_anc, HalfSpace::worse);
        // Strict half-space membership; an exactly orthogonal draw resamples.
        if (dot(eb, u_anc) <= 0.0 || dot(ew, u_anc) >= 0.0) continue;

        TrainingTuple t;
        t.episode = episode;
        t.step = step;
        t.a_e = a_e;
        t.a_anc = anc;
        t.a_better = anc;
        t.a_worse = anc;
        for (int i = 0; i < d; ++i) {
            t.a_better.pose[i] += eb[i];
            t.a_worse.pose[i] += ew[i];
        }
        auto [u_bet, deg_b] = gt_direction(a_e, t.a_better);
        auto [u_wor, deg_w] = gt_direction(a_e, t.a_worse);
        if (deg_b || deg_w) continue;
        t.u_gt = {u_anc, u_bet, u_wor};

        // Ordered preference pairs from RMSE ranking; indices are
        // 0=expert, 1=anchor, 2=better, 3=worse; ties dropped.
        double dist[4] = {0.0, d0, rmse_distance(t.a_better, a_e), rmse_distance(t.a_worse, a_e)};
        for (int i = 1; i <= 3; ++i) {
            for (int j = i + 1; j <= 3; ++j) {
                if (dist[i] < dist[j])
                    t.pairs.emplace_back(i, j);
                else if (dist[j] < dist[i])
                    t.pairs.emplace_back(j, i);
            }
        }
        if (cfg.include_expert)
            for (int j = 1; j <= 3; ++j)
                if (dist[j] > 0.0) t.pairs.emplace_back(0, j);
        return t;
    }
    return std::nullopt;
}

TupleDataset generate_tuples(const EpisodeDataset& ds, const NoiseConfig& cfg, uint64_t seed) {
    cfg.validate();
    TupleDataset out;
    out.d_dir = ds.d_dir;
    RngStream master(seed);
    for (size_t e = 0; e < ds.episodes.size(); ++e) {
        const auto& ep = ds.episodes[e];
        for (size_t s = 0; s < ep.steps.size(); ++s) {
            RngStream pick = master.sub(e, s, 0);
            if (pick.uniform01() >= cfg.subsample) continue;
            for (int k = 0; k < cfg.tuples_per_step; ++k) {
                RngStream trng = master.sub(e, s, static_cast<uint64_t>(k) + 1);
                auto t = make_tuple(static_cast<int>(e), static_cast<int>(s), ep.steps[s].expert,
                                    cfg, trng);
                if (t) out.tuples.push_back(std::move(*t));
            }
        }
    }
    return out;
}

namespace {

constexpr char kMagic[4] = {'R', 'V', 'T', 'P'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
uint32_t get_u32(std::istream& is) {
    uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
void put_f64s(std::ostream& os, const std::vector<double>& v) {
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * 8));
}
void get_f64s(std::istream& is, std::vector<double>& v, size_t n) {
    v.resize(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * 8));
}

void put_action(std::ostream& os, const Action& a) {
    std::vector<double> v(a.pose);
    v.push_back(a.gripper);
    put_f64s(os, v);
}
Action get_action(std::istream& is, int d_dir) {
    std::vector<double> v;
    get_f64s(is, v, static_cast<size_t>(d_dir) + 1);
    Action a;
    a.pose.assign(v.begin(), v.end() - 1);
    a.gripper = v.back();
    return a;
}

}  // namespace

void write_rvtp(const std::string& path, const TupleDataset& ds) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_rvtp: cannot open " + path);
    os.write(kMagic, 4);
    put_u32(os, kVersion);
    put_u32(os, static_cast<uint32_t>(ds.d_dir));
    put_u32(os, static_cast<uint32_t>(ds.tuples.size()));
    for (const auto& t : ds.tuples) {
        put_u32(os, static_cast<uint32_t>(t.episode));
        put_u32(os, static_cast<uint32_t>(t.step));
        put_action(os, t.a_e);
        put_action(os, t.a_anc);
        put_action(os, t.a_better);
        put_action(os, t.a_worse);
        for (const auto& u : t.u_gt) put_f64s(os, u);
        put_u32(os, static_cast<uint32_t>(t.pairs.size()));
        for (auto [i, j] : t.pairs) {
            put_u32(os, static_cast<uint32_t>(i));
            put_u32(os, static_cast<uint32_t>(j));
        }
    }
    if (!os) throw std::runtime_error("write_rvtp: write failed for " + path);
}

TupleDataset read_rvtp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_rvtp: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("read_rvtp: bad magic in " + path);
    if (get_u32(is) != kVersion) throw std::runtime_error("read_rvtp: unsupported version");
    TupleDataset ds;
    ds.d_dir = static_cast<int>(get_u32(is));
    uint32_t n = get_u32(is);
    ds.tuples.resize(n);
    for (auto& t : ds.tuples) {
        t.episode = static_cast<int>(get_u32(is));
        t.step = static_cast<int>(get_u32(is));
        t.a_e = get_action(is, ds.d_dir);
        t.a_anc = get_action(is, ds.d_dir);
        t.a_better = get_action(is, ds.d_dir);
        t.a_worse = get_action(is, ds.d_dir);
        for (auto& u : t.u_gt) get_f64s(is, u, static_cast<size_t>(ds.d_dir));
        uint32_t np = get_u32(is);
        t.pairs.resize(np);
        for (auto& [i, j] : t.pairs) {
            i = static_cast<int>(get_u32(is));
            j = static_cast<int>(get_u32(is));
        }
        if (!is) throw std::runtime_error("read_rvtp: truncated file " + path);
    }
    return ds;
}

namespace {
double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
}  // namespace

DeviationStats deviation_stats(const std::vector<Action>& policy,
                               const std::vector<Action>& expert) {
    if (policy.empty() || policy.size() != expert.size())
        throw std::invalid_argument("deviation_stats: need equal, non-empty sample lists");
    const int d = policy[0].d_dir();
    DeviationStats st;
    st.d_dir = d;
    st.count = policy.size();
    st.mean.assign(d, 0.0);
    st.stdev.assign(d, 0.0);
    st.median.assign(d, 0.0);
    std::vector<std::vector<double>> per_axis(d);
    std::vector<double> norms;
    norms.reserve(policy.size());
    for (size_t i = 0; i < policy.size(); ++i) {
        if (policy[i].d_dir() != d || expert[i].d_dir() != d)
            throw std::invalid_argument("deviation_stats: d_dir mismatch in samples");
        double n2 = 0.0;
        for (int a = 0; a < d; ++a) {
            double delta = policy[i].pose[a] - expert[i].pose[a];
            per_axis[a].push_back(delta);
            st.mean[a] += delta;
            n2 += delta * delta;
        }
        norms.push_back(std::sqrt(n2));
    }
    const double n = static_cast<double>(st.count);
    for (int a = 0; a < d; ++a) {
        st.mean[a] /= n;
        double var = 0.0;
        for (double x : per_axis[a]) var += (x - st.mean[a]) * (x - st.mean[a]);
        st.stdev[a] = std::sqrt(var / n);
        st.median[a] = median_of(per_axis[a]);
    }
    double s = 0.0;
    for (double x : norms) s += x;
    st.norm_mean = s / n;
    st.norm_median = median_of(norms);
    st.norm_min = *std::min_element(norms.begin(), norms.end());
    st.norm_max = *std::max_element(norms.begin(), norms.end());
    return st;
}

std::string DeviationStats::to_table() const {
    std::ostringstream os;
    os << "axis  mean        std         median\n";
    for (int a = 0; a < d_dir; ++a) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%-4d  %-10.6f  %-10.6f  %-10.6f\n", a, mean[a], stdev[a],
                      median[a]);
        os << buf;
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "|delta|: mean %.6f  median %.6f  min %.6f  max %.6f  (n=%zu)\n", norm_mean,
                  norm_median, norm_min, norm_max, count);
    os << buf;
    return os.str();
}

}  // namespace rv
