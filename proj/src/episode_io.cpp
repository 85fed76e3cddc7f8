#include "rv/episode_io.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

namespace rv {

namespace {

void put_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void put_u8(std::ostream& os, uint8_t v) { os.write(reinterpret_cast<const char*>(&v), 1); }
void put_f64s(std::ostream& os, const std::vector<double>& v) {
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * 8));
}

uint32_t get_u32(std::istream& is) {
    uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
uint8_t get_u8(std::istream& is) {
    uint8_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 1);
    return v;
}
void get_f64s(std::istream& is, std::vector<double>& v, size_t n) {
    v.resize(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * 8));
}

constexpr char kMagic[4] = {'R', 'V', 'E', 'P'};
constexpr uint32_t kVersion = 1;

}  // namespace

const StepRecord& EpisodeDataset::step(int episode, int step_idx) const {
    if (episode < 0 || episode >= static_cast<int>(episodes.size()))
        throw std::out_of_range("EpisodeDataset: episode index out of range");
    const auto& e = episodes[episode];
    if (step_idx < 0 || step_idx >= static_cast<int>(e.steps.size()))
        throw std::out_of_range("EpisodeDataset: step index out of range");
    return e.steps[step_idx];
}

void write_rvep(const std::string& path, const EpisodeDataset& ds) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_rvep: cannot open " + path);
    os.write(kMagic, 4);
    put_u32(os, kVersion);
    put_u32(os, static_cast<uint32_t>(ds.d_dir));
    put_u32(os, static_cast<uint32_t>(ds.horizon));
    put_u32(os, static_cast<uint32_t>(ds.episodes.size()));
    put_u32(os, static_cast<uint32_t>(ds.state_dim));
    put_u32(os, static_cast<uint32_t>(ds.grid_channels));
    put_u32(os, static_cast<uint32_t>(ds.grid));
    put_u32(os, static_cast<uint32_t>(ds.n_tasks));
    for (const auto& ep : ds.episodes) {
        put_u32(os, static_cast<uint32_t>(ep.steps.size()));
        put_u8(os, ep.success ? 1 : 0);
        put_u32(os, static_cast<uint32_t>(ep.task_id));
        for (const auto& st : ep.steps) {
            if (static_cast<int>(st.obs.state_vec.size()) != ds.state_dim ||
                static_cast<int>(st.obs.grid.size()) != ds.grid_channels * ds.grid * ds.grid ||
                st.expert.d_dir() != ds.d_dir)
                throw std::runtime_error("write_rvep: record shape inconsistent with header");
            put_f64s(os, st.obs.state_vec);
            put_f64s(os, st.obs.grid);
            std::vector<double> act(st.expert.pose);
            act.push_back(st.expert.gripper);
            put_f64s(os, act);
        }
    }
    if (!os) throw std::runtime_error("write_rvep: write failed for " + path);
}

EpisodeDataset read_rvep(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_rvep: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("read_rvep: bad magic in " + path);
    uint32_t version = get_u32(is);
    if (version != kVersion) throw std::runtime_error("read_rvep: unsupported version");
    EpisodeDataset ds;
    ds.d_dir = static_cast<int>(get_u32(is));
    ds.horizon = static_cast<int>(get_u32(is));
    uint32_t n_eps = get_u32(is);
    ds.state_dim = static_cast<int>(get_u32(is));
    ds.grid_channels = static_cast<int>(get_u32(is));
    ds.grid = static_cast<int>(get_u32(is));
    ds.n_tasks = static_cast<int>(get_u32(is));
    size_t grid_len = static_cast<size_t>(ds.grid_channels) * ds.grid * ds.grid;
    ds.episodes.resize(n_eps);
    for (auto& ep : ds.episodes) {
        uint32_t n_steps = get_u32(is);
        ep.success = get_u8(is) != 0;
        ep.task_id = static_cast<int>(get_u32(is));
        ep.steps.resize(n_steps);
        for (auto& st : ep.steps) {
            get_f64s(is, st.obs.state_vec, static_cast<size_t>(ds.state_dim));
            get_f64s(is, st.obs.grid, grid_len);
            std::vector<double> act;
            get_f64s(is, act, static_cast<size_t>(ds.d_dir) + 1);
            st.obs.task_id = ep.task_id;
            st.expert.pose.assign(act.begin(), act.end() - 1);
            st.expert.gripper = act.back();
        }
        if (!is) throw std::runtime_error("read_rvep: truncated file " + path);
    }
    return ds;
}

EpisodeDataset generate_episode_dataset(const EnvConfig& env, const Degradation& deg,
                                        const GenConfig& gen, uint64_t seed) {
    if (gen.d_dir != 2 && gen.d_dir != 6)
        throw std::invalid_argument("generate_episode_dataset: d_dir must be 2 or 6");
    if (gen.policy_frac < 0.0 || gen.policy_frac > 1.0)
        throw std::invalid_argument("generate_episode_dataset: policy_frac in [0, 1]");
    EpisodeDataset ds;
    ds.d_dir = gen.d_dir;
    ds.horizon = env.horizon;
    ds.grid = env.grid;
    ds.grid_channels = env.grid_channels;
    ds.state_dim = env.state_dim();
    ds.n_tasks = env.n_tasks;
    RngStream master(seed);
    auto is_policy_ep = [&](int e) {
        return std::floor((e + 1) * gen.policy_frac) > std::floor(e * gen.policy_frac);
    };
    for (int e = 0; e < gen.episodes; ++e) {
        if (gen.d_dir == 6)
            ds.episodes.push_back(synth6d_episode(gen.synth, env, master.sub(0xE9, e)));
        else if (is_policy_ep(e))
            ds.episodes.push_back(rollout_policy_with_expert_labels(env, deg, master.sub(0xE9, e)));
        else
            ds.episodes.push_back(rollout_expert(env, master.sub(0xE9, e)));
    }
    return ds;
}

void export_jsonl(const std::string& path, const EpisodeDataset& ds, bool with_grid) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("export_jsonl: cannot open " + path);
    for (size_t e = 0; e < ds.episodes.size(); ++e) {
        const auto& ep = ds.episodes[e];
        for (size_t t = 0; t < ep.steps.size(); ++t) {
            const auto& st = ep.steps[t];
            nlohmann::json j{{"episode", e},
                             {"step", t},
                             {"task", ep.task_id},
                             {"success", ep.success},
                             {"state", st.obs.state_vec},
                             {"expert_pose", st.expert.pose},
                             {"expert_gripper", st.expert.gripper}};
            if (with_grid) j["grid"] = st.obs.grid;
            os << j.dump() << "\n";
        }
    }
}

}  // namespace rv
