#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rv/env.hpp"
#include "rv/model.hpp"
#include "test_util.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace rv;

namespace {
EnvConfig env;

PrmConfig small_cfg() {
    PrmConfig c;
    c.hidden = 32;
    c.layers = 2;
    c.heads = 4;
    c.d_dir = 2;
    return c;
}
}  // namespace

TEST_CASE("PrmConfig validation") {
    PrmConfig c;
    CHECK(c.n_obs_tokens() == 18);  // 16 patches + state + goal
    CHECK_NOTHROW(c.validate());
    c.patch = 7;  // 32 % 7 != 0
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = PrmConfig{};
    c.d_dir = 3;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = PrmConfig{};
    c.hidden = 30;  // not divisible by heads
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("pre_encode: purity and raster sensitivity") {
    Prm model(small_cfg(), 1);
    Observation o = rvtest::random_obs(env, 10);
    PerceptionCache c1 = model.pre_encode(o, {0, 0});
    PerceptionCache c2 = model.pre_encode(o, {0, 0});
    CHECK(c1.tokens.data == c2.tokens.data);
    CHECK(c1.read_k.data == c2.read_k.data);

    Observation o2 = o;
    o2.grid[100] += 1e-3;  // one raster cell differs
    PerceptionCache c3 = model.pre_encode(o2, {0, 0});
    CHECK(c1.tokens.data != c3.tokens.data);
}

TEST_CASE("action_encode: nearby actions stay distinguishable") {
    Prm model(small_cfg(), 2);
    Action a = rvtest::random_action(2, 3);
    Action b = a;
    b.pose[0] += 1e-3;
    Tensor2 ta = model.action_encode(a);
    Tensor2 tb = model.action_encode(b);
    double d2 = 0;
    for (size_t i = 0; i < ta.data.size(); ++i)
        d2 += (ta.data[i] - tb.data[i]) * (ta.data[i] - tb.data[i]);
    CHECK(d2 > 0.0);
    Tensor2 tc = model.action_encode(a);
    CHECK(ta.data == tc.data);

    Action bad;
    bad.pose = {0.1, 0.2, 0.3};
    CHECK_THROWS_AS(model.action_encode(bad), std::invalid_argument);
}

TEST_CASE("score: zero-initialized heads give reward 0 and flagged direction") {
    Prm model(small_cfg(), 3);
    Observation o = rvtest::random_obs(env, 4);
    PerceptionCache cache = model.pre_encode(o, {0, 0});
    for (int i = 0; i < 5; ++i) {
        PrmOutput out = model.score(cache, rvtest::random_action(2, 100 + i));
        CHECK(out.reward == 0.0);
        CHECK(out.degenerate_direction);
        CHECK(out.direction[0] == 1.0);
    }
}

TEST_CASE("score: deterministic, batch matches single, order independent") {
    Prm model(small_cfg(), 5);
    rvtest::randomize_params(model.params(), 77);
    Observation o = rvtest::random_obs(env, 6);
    PerceptionCache cache = model.pre_encode(o, {3, 14});

    std::vector<Action> acts;
    for (int i = 0; i < 6; ++i) acts.push_back(rvtest::random_action(2, 200 + i));

    PrmOutput s1 = model.score(cache, acts[0]);
    PrmOutput s2 = model.score(cache, acts[0]);
    CHECK(s1.reward == s2.reward);
    CHECK(s1.direction == s2.direction);

    auto batch = model.score_batch(cache, acts);
    REQUIRE(batch.size() == acts.size());
    CHECK(batch[0].reward == s1.reward);

    std::vector<Action> rev(acts.rbegin(), acts.rend());
    auto batch_rev = model.score_batch(cache, rev);
    for (size_t i = 0; i < acts.size(); ++i) {
        CHECK(batch[i].reward == batch_rev[acts.size() - 1 - i].reward);
        CHECK(batch[i].direction == batch_rev[acts.size() - 1 - i].direction);
    }
    CHECK(model.score_batch(cache, {}).empty());
}

TEST_CASE("score: stale cache stamp is a usage error") {
    Prm model(small_cfg(), 6);
    Observation o = rvtest::random_obs(env, 7);
    PerceptionCache cache = model.pre_encode(o, {2, 5});
    CHECK_NOTHROW(model.score(cache, rvtest::random_action(2, 1), StepStamp{2, 5}));
    CHECK_THROWS_AS(model.score(cache, rvtest::random_action(2, 1), StepStamp{2, 6}),
                    std::runtime_error);
    CHECK_THROWS_AS(model.score_batch(cache, {rvtest::random_action(2, 1)}, StepStamp{3, 5}),
                    std::runtime_error);
}

TEST_CASE("cache equivalence: streaming path matches the monolithic graph to 1e-12") {
    Prm model(small_cfg(), 7);
    rvtest::randomize_params(model.params(), 123);
    for (int i = 0; i < 20; ++i) {
        Observation o = rvtest::random_obs(env, 300 + i);
        Action a = rvtest::random_action(2, 400 + i);
        PerceptionCache cache = model.pre_encode(o, {0, i});
        PrmOutput fast = model.score(cache, a);
        PrmOutput slow = model.score_monolithic(o, a);
        CHECK(std::fabs(fast.reward - slow.reward) < 1e-12);
        REQUIRE(fast.direction.size() == slow.direction.size());
        for (size_t c = 0; c < fast.direction.size(); ++c)
            CHECK(std::fabs(fast.direction[c] - slow.direction[c]) < 1e-12);
        CHECK(fast.degenerate_direction == slow.degenerate_direction);
    }
}

TEST_CASE("direction output is unit-norm or flagged degenerate") {
    Prm model(small_cfg(), 8);
    rvtest::randomize_params(model.params(), 321);
    Observation o = rvtest::random_obs(env, 9);
    PerceptionCache cache = model.pre_encode(o, {0, 0});
    for (int i = 0; i < 50; ++i) {
        PrmOutput out = model.score(cache, rvtest::random_action(2, 500 + i));
        if (!out.degenerate_direction) CHECK(std::fabs(norm2(out.direction) - 1.0) <= 1e-9);
    }
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    PrmConfig cfg = small_cfg();
    cfg.use_amplifier = false;
    Prm model(cfg, 9);
    rvtest::randomize_params(model.params(), 456);
    std::string p1 = "/tmp/rv_ckpt1.rvpm", p2 = "/tmp/rv_ckpt2.rvpm";
    model.save(p1);
    Prm back = Prm::load(p1);
    CHECK(back.config().use_amplifier == false);
    CHECK(back.config().hidden == cfg.hidden);
    for (size_t i = 0; i < model.params().all().size(); ++i) {
        const auto& a = model.params().all()[i];
        const auto& b = back.params().all()[i];
        CHECK(a.name == b.name);
        CHECK(a.value.data == b.value.data);
    }
    back.save(p2);
    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), {});
    std::string s2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(s1 == s2);
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("full PRM graph gradients match finite differences") {
    PrmConfig cfg;
    cfg.hidden = 16;
    cfg.layers = 2;
    cfg.heads = 4;
    cfg.d_dir = 2;
    cfg.patch = 16;  // 4 patches, keeps the finite differences cheap
    Prm model(cfg, 10);
    Observation o1 = rvtest::random_obs(env, 20);
    Observation o2 = rvtest::random_obs(env, 21);
    std::vector<const Observation*> obs{&o1, &o2};
    std::vector<int> obs_of_seq{0, 0, 1, 1};
    Tensor2 actions(4, 3);
    RngStream arng(30);
    for (double& x : actions.data) x = 0.2 * arng.normal();

    Tensor2 targets(4, 2);
    for (int r = 0; r < 4; ++r) {
        auto [u, deg] = unit_normalize(arng.gaussian_vector(2, 1.0));
        targets.at(r, 0) = u[0];
        targets.at(r, 1) = u[1];
    }

    auto loss_fn = [&](bool wg) {
        Graph g;
        ParamBinder bind{g, model.params(), {}};
        PrmGraphOut out = build_prm_graph(g, bind, cfg, obs, obs_of_seq, actions);
        Node* dots = g.rowwise_dot(out.dir_unit, g.input(targets));
        Node* ld = g.scale_add(g.mean_all(dots), -1.0, 1.0);
        Node* diff = g.add(g.gather_rows(out.reward, {0, 2}),
                           g.scale_add(g.gather_rows(out.reward, {1, 3}), -1.0, 0.0));
        Node* lr = g.mean_all(g.softplus_neg(diff));
        Node* total = g.add(ld, lr);
        if (wg) {
            g.backward(total);
            bind.accumulate_grads();
        }
        return total->val.data[0];
    };

    double worst = 0.0;
    for (int draw = 0; draw < 10; ++draw) {
        rvtest::randomize_params(model.params(), 1000 + draw);
        double err = rvtest::fd_max_rel_err(model.params(), loss_fn, 2000 + draw, 12);
        worst = std::max(worst, err);
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("gradient flows through the amplifier after one training-style backward") {
    PrmConfig cfg = small_cfg();
    Prm model(cfg, 11);
    rvtest::randomize_params(model.params(), 5);
    Observation o = rvtest::random_obs(env, 22);
    std::vector<const Observation*> obs{&o};
    Tensor2 actions(2, 3);
    RngStream arng(31);
    for (double& x : actions.data) x = 0.1 * arng.normal();

    Graph g;
    ParamBinder bind{g, model.params(), {}};
    PrmGraphOut out = build_prm_graph(g, bind, cfg, obs, {0, 0}, actions);
    Node* diff = g.add(g.gather_rows(out.reward, {0}),
                       g.scale_add(g.gather_rows(out.reward, {1}), -1.0, 0.0));
    Node* loss = g.mean_all(g.softplus_neg(diff));
    model.params().zero_grad();
    g.backward(loss);
    bind.accumulate_grads();

    double amp_norm = 0.0;
    for (const auto& p : model.params().all())
        if (p.name.rfind("act.amp.", 0) == 0)
            for (double gr : p.grad.data) amp_norm += gr * gr;
    CHECK(amp_norm > 0.0);
}
