#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rv/datagen.hpp"
#include "rv/runio.hpp"
#include "rv/train.hpp"
#include "test_util.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace rv;

namespace {

EnvConfig env;

PrmConfig tiny_cfg() {
    PrmConfig c;
    c.hidden = 16;
    c.layers = 1;
    c.heads = 4;
    c.patch = 16;
    c.d_dir = 2;
    return c;
}

// Small planar dataset shared by the training tests.
struct TinyData {
    EpisodeDataset eps;
    TupleDataset tuples;
};

TinyData make_tiny(int n_episodes, uint64_t seed) {
    TinyData d;
    d.eps.d_dir = 2;
    d.eps.grid = env.grid;
    d.eps.state_dim = env.state_dim();
    RngStream master(seed);
    for (int e = 0; e < n_episodes; ++e)
        d.eps.episodes.push_back(rollout_expert(env, master.sub(e)));
    NoiseConfig nc;
    nc.subsample = 1.0;
    nc.tuples_per_step = 1;
    d.tuples = generate_tuples(d.eps, nc, seed + 1);
    return d;
}

}  // namespace

TEST_CASE("loss_dir: aligned, opposed, orthogonal") {
    CHECK(loss_dir({1, 0}, {1, 0}) == 0.0);
    CHECK(loss_dir({1, 0}, {-1, 0}) == 2.0);
    CHECK(loss_dir({1, 0}, {0, 1}) == 1.0);
    CHECK_THROWS_AS(loss_dir({2, 0}, {1, 0}), std::invalid_argument);
}

TEST_CASE("loss_dir stays in [0, 2] on random unit pairs") {
    RngStream rng(1);
    for (int i = 0; i < 10000; ++i) {
        auto [u, du] = unit_normalize(rng.gaussian_vector(2, 1.0));
        auto [v, dv] = unit_normalize(rng.gaussian_vector(2, 1.0));
        if (du || dv) continue;
        double l = loss_dir(u, v);
        CHECK(l >= 0.0);
        CHECK(l <= 2.0);
    }
}

TEST_CASE("loss_rew: frozen values and the logistic pair identity") {
    CHECK(loss_rew(1.0, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(loss_rew(2.0, 0.0) == doctest::Approx(0.126928011042972496).epsilon(1e-13));
    CHECK(loss_rew(0.0, 2.0) == doctest::Approx(2.126928011042972496).epsilon(1e-13));
    // overflow safety
    CHECK(std::isfinite(loss_rew(-350.0, 350.0)));

    RngStream rng(2);
    const double two_ln2 = 2.0 * std::log(2.0);
    for (int i = 0; i < 10000; ++i) {
        double ri = 20.0 * (rng.uniform01() - 0.5);
        double rj = 20.0 * (rng.uniform01() - 0.5);
        double s = loss_rew(ri, rj) + loss_rew(rj, ri);
        CHECK(s >= two_ln2 - 1e-12);
        if (std::fabs(ri - rj) > 1e-6) CHECK(s > two_ln2 + 1e-12);
    }
    CHECK(loss_rew(0.7, 0.7) + loss_rew(0.7, 0.7) == doctest::Approx(two_ln2).epsilon(1e-15));
}

TEST_CASE("spearman: oracle substitution gives exactly -1 and perfect pairs") {
    TinyData d = make_tiny(2, 50);
    std::vector<double> rewards, rmses;
    size_t correct = 0, pairs = 0;
    for (const auto& t : d.tuples.tuples) {
        const Action* acts[4] = {&t.a_e, &t.a_anc, &t.a_better, &t.a_worse};
        double r[4];
        for (int i = 0; i < 4; ++i) r[i] = -rmse_distance(*acts[i], t.a_e);
        for (int i = 1; i < 4; ++i) {
            rewards.push_back(r[i]);
            rmses.push_back(rmse_distance(*acts[i], t.a_e));
        }
        for (auto [i, j] : t.pairs) {
            if (r[i] > r[j]) ++correct;
            ++pairs;
        }
    }
    CHECK(spearman_corr(rewards, rmses) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(correct == pairs);
}

TEST_CASE("random unit directions have near-zero mean cosine in 2D") {
    RngStream rng(3);
    double sum = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        auto [u, du] = unit_normalize(rng.gaussian_vector(2, 1.0));
        auto [v, dv] = unit_normalize(rng.gaussian_vector(2, 1.0));
        sum += dot(u, v);
    }
    CHECK(std::fabs(sum / n) < 0.02);
}

TEST_CASE("zero-initialized heads: preference loss is exactly ln 2") {
    TinyData d = make_tiny(2, 60);
    Prm model(tiny_cfg(), 7);  // fresh init, heads zeroed
    std::vector<const TrainingTuple*> batch;
    for (const auto& t : d.tuples.tuples) batch.push_back(&t);
    model.params().zero_grad();
    BatchLoss bl = batch_loss_and_grads(model, d.eps, batch, 1.0, 1.0, false);
    CHECK(loss_rew(0.0, 0.0) == std::log(2.0));
    CHECK(bl.l_rew == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    // directions start as the zero vector, so the direction loss is exactly 1
    CHECK(bl.l_dir == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("lambda_dir = 0 makes the total equal the preference term") {
    TinyData d = make_tiny(2, 70);
    Prm model(tiny_cfg(), 8);
    rvtest::randomize_params(model.params(), 9);
    std::vector<const TrainingTuple*> batch;
    for (size_t i = 0; i < 8 && i < d.tuples.tuples.size(); ++i)
        batch.push_back(&d.tuples.tuples[i]);
    model.params().zero_grad();
    BatchLoss bl = batch_loss_and_grads(model, d.eps, batch, 0.0, 2.5, false);
    CHECK(bl.total == doctest::Approx(2.5 * bl.l_rew).epsilon(1e-12));
}

TEST_CASE("train: zero epochs leaves the checkpoint at initialization") {
    TinyData d = make_tiny(3, 80);
    Prm model(tiny_cfg(), 10);
    std::vector<double> before;
    for (const auto& p : model.params().all())
        before.insert(before.end(), p.value.data.begin(), p.value.data.end());
    TrainConfig tc;
    tc.epochs = 0;
    train(model, d.eps, d.tuples, tc);
    std::vector<double> after;
    for (const auto& p : model.params().all())
        after.insert(after.end(), p.value.data.begin(), p.value.data.end());
    CHECK(before == after);
}

TEST_CASE("train: same seed gives bit-identical loss curves") {
    TinyData d = make_tiny(4, 90);
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch = 16;
    tc.seed = 5;
    Prm m1(tiny_cfg(), 11), m2(tiny_cfg(), 11);
    auto l1 = train(m1, d.eps, d.tuples, tc);
    auto l2 = train(m2, d.eps, d.tuples, tc);
    REQUIRE(l1.size() == l2.size());
    for (size_t i = 0; i < l1.size(); ++i) {
        CHECK(l1[i].total == l2[i].total);
        CHECK(l1[i].l_dir == l2[i].l_dir);
        CHECK(l1[i].l_rew == l2[i].l_rew);
        CHECK(l1[i].pair_acc == l2[i].pair_acc);
    }
    for (size_t i = 0; i < m1.params().all().size(); ++i)
        CHECK(m1.params().all()[i].value.data == m2.params().all()[i].value.data);
}

TEST_CASE("train: single-tuple overfit drives the loss below 0.05") {
    TinyData d = make_tiny(1, 100);
    REQUIRE(!d.tuples.tuples.empty());
    TupleDataset one;
    one.d_dir = 2;
    one.tuples.push_back(d.tuples.tuples[0]);
    Prm model(tiny_cfg(), 12);
    TrainConfig tc;
    tc.epochs = 500;  // one batch per epoch
    tc.batch = 1;
    tc.val_mod = 1000000;  // no validation pass
    auto logs = train(model, d.eps, one, tc);
    REQUIRE(logs.size() == 500);
    CHECK(logs.back().total < 0.05);  // observed ~1e-4 at 500 steps
}

TEST_CASE("train: writes log csv and checkpoints when a run dir is given") {
    TinyData d = make_tiny(3, 110);
    Prm model(tiny_cfg(), 13);
    TrainConfig tc;
    tc.epochs = 2;
    tc.batch = 32;
    std::string dir = "/tmp/rv_train_run_test";
    std::filesystem::remove_all(dir);
    train(model, d.eps, d.tuples, tc, dir);
    CHECK(std::filesystem::exists(dir + "/train_log.csv"));
    CHECK(std::filesystem::exists(dir + "/checkpoints/last.rvpm"));
    CHECK(std::filesystem::exists(dir + "/checkpoints/final.rvpm"));
    std::ifstream is(dir + "/train_log.csv");
    std::string header;
    std::getline(is, header);
    CHECK(header == "epoch,L_dir,L_rew,total,cos_align,angle_err,spearman,pair_acc");
    std::filesystem::remove_all(dir);
}

TEST_CASE("train: d_dir mismatch is a config error") {
    TinyData d = make_tiny(2, 120);
    PrmConfig c = tiny_cfg();
    c.d_dir = 6;
    Prm model(c, 14);
    TrainConfig tc;
    CHECK_THROWS_AS(train(model, d.eps, d.tuples, tc), std::invalid_argument);
    CHECK_THROWS_AS(validate(model, d.eps, {}), std::invalid_argument);
}

TEST_CASE("validation split is seed-stable and near 10%") {
    int val = 0;
    for (uint64_t e = 0; e < 1000; ++e) {
        bool v1 = is_val_episode(e, 42, 10);
        bool v2 = is_val_episode(e, 42, 10);
        CHECK(v1 == v2);
        if (v1) ++val;
    }
    CHECK(val > 60);
    CHECK(val < 140);
}

TEST_CASE("TrainConfig validation") {
    TrainConfig t;
    t.lambda_dir = 0;
    t.lambda_rew = 0;
    CHECK_THROWS_AS(t.validate(), std::invalid_argument);
    t = TrainConfig{};
    t.lr = 0;
    CHECK_THROWS_AS(t.validate(), std::invalid_argument);
    t = TrainConfig{};
    t.batch = 0;
    CHECK_THROWS_AS(t.validate(), std::invalid_argument);
}

TEST_CASE("KvConfig: parse, merge, canonical hash") {
    std::string path = "/tmp/rv_kv_test.txt";
    {
        std::ofstream os(path);
        os << "# comment\n"
           << "train.lr = 0.01\n"
           << "  train.epochs=7  \n"
           << "model.hidden = 32\n";
    }
    KvConfig kv = KvConfig::from_file(path);
    CHECK(kv.get_double("train.lr", 0) == 0.01);
    CHECK(kv.get_int("train.epochs", 0) == 7);
    CHECK(kv.get_int("model.hidden", 0) == 32);
    CHECK(kv.get_int("missing", 5) == 5);
    std::string h1 = kv.hash_hex();
    KvConfig kv2 = kv;
    CHECK(kv2.hash_hex() == h1);
    kv2.set("train.lr", "0.02");
    CHECK(kv2.hash_hex() != h1);
    std::filesystem::remove(path);
}
