#include <cmath>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "unlearnrec/errors.hpp"
#include "unlearnrec/recmodels.hpp"
#include "unlearnrec/rng.hpp"
#include "unlearnrec/unlearning.hpp"

using namespace unlearnrec;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double sd = 1.0) {
    Matrix m(rows, cols);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.normal(0.0, sd);
    return m;
}

AttributeLabels six_user_labels() {
    return AttributeLabels{{0, 1, 0, 1, 1, 0}, {"M", "F"}};
}

struct Trained {
    SplitBundle bundle;
    TrainHyperparams hp;
    EmbeddingModel model;
};

Trained small_trained(ModelKind kind, std::size_t epochs = 15) {
    Trained t;
    t.bundle = fixtures::synthetic_bundle(60, 160, 12, 0.8, 9);
    t.hp = TrainHyperparams::defaults(kind);
    t.hp.dim = 8;
    t.hp.epochs = epochs;
    t.hp.batch_size = 128;
    t.hp.learning_rate = 0.01;
    t.model = train(init_model(kind, t.bundle.split.train.n_users, t.bundle.split.train.n_items, t.hp),
                    t.bundle.split, t.hp)
                  .model;
    return t;
}

}  // namespace

TEST_SUITE("exact-metrics") {

TEST_CASE("mmd closed forms") {
    Matrix x(1, 1), y(1, 1);
    x << 0.0;
    y << 1.0;
    CHECK(oracle::rel_diff(mmd_rbf_sq(x, y, 1.0), 2.0 - 2.0 * std::exp(-0.5)) <= 1e-12);
    CHECK(mmd_rbf_sq(x, y, 1.0) == doctest::Approx(0.78694).epsilon(1e-5));
    y << 100.0;
    CHECK(mmd_rbf_sq(x, y, 1.0) == doctest::Approx(2.0));
    Rng rng(1);
    const auto z = random_matrix(4, 3, rng);
    CHECK(mmd_rbf_sq(z, z, 0.7) == 0.0);
}

TEST_CASE("mmd matches the triple-sum oracle") {
    Rng rng(5);
    for (int trial = 0; trial < 60; ++trial) {
        const auto n = static_cast<Eigen::Index>(1 + rng.below(4));
        const auto m = static_cast<Eigen::Index>(1 + rng.below(4));
        const auto d = static_cast<Eigen::Index>(1 + rng.below(5));
        const auto x = random_matrix(n, d, rng);
        const auto y = random_matrix(m, d, rng, 1.5);
        const double sigma = 0.3 + 2.0 * rng.uniform();
        const double expected = oracle::mmd_triple_sum(x, y, sigma);
        CHECK(oracle::rel_diff(mmd_rbf_sq_grad(x, y, sigma, nullptr, nullptr), expected) <= 1e-12);
    }
}

}  // TEST_SUITE("exact-metrics")

TEST_SUITE("gradients") {

TEST_CASE("mmd gradient matches finite differences") {
    Rng rng(7);
    const auto x = random_matrix(3, 4, rng);
    const auto y = random_matrix(4, 4, rng, 0.8);
    const double sigma = 1.3;
    Matrix gx, gy;
    mmd_rbf_sq_grad(x, y, sigma, &gx, &gy);
    const auto nx = oracle::numeric_gradient([&](const Matrix& v) { return mmd_rbf_sq_grad(v, y, sigma, nullptr, nullptr); }, x);
    const auto ny = oracle::numeric_gradient([&](const Matrix& v) { return mmd_rbf_sq_grad(x, v, sigma, nullptr, nullptr); }, y);
    CHECK(oracle::max_rel_error(gx, nx, 1e-7) <= 1e-3);
    CHECK(oracle::max_rel_error(gy, ny, 1e-7) <= 1e-3);
}

TEST_CASE("d2d gradient matches finite differences") {
    Rng rng(11);
    const auto emb = random_matrix(6, 3, rng);
    const auto labels = six_user_labels();
    Matrix g;
    d2d_distinguishability(emb, labels, 0.9, &g);
    const auto n = oracle::numeric_gradient([&](const Matrix& e) { return d2d_distinguishability(e, labels, 0.9); }, emb);
    CHECK(oracle::max_rel_error(g, n, 1e-7) <= 1e-3);

    // Three classes: mean over the class pairs.
    const AttributeLabels three{{0, 1, 2, 0, 1, 2}, {"a", "b", "c"}};
    d2d_distinguishability(emb, three, 1.1, &g);
    const auto n3 = oracle::numeric_gradient([&](const Matrix& e) { return d2d_distinguishability(e, three, 1.1); }, emb);
    CHECK(oracle::max_rel_error(g, n3, 1e-7) <= 1e-3);
}

TEST_CASE("u2u gradient matches finite differences") {
    Rng rng(13);
    const auto emb = random_matrix(6, 3, rng);
    const auto pairs = cross_class_matching(six_user_labels(), 3);
    Matrix g;
    u2u_distinguishability(emb, pairs, &g);
    const auto n = oracle::numeric_gradient([&](const Matrix& e) { return u2u_distinguishability(e, pairs); }, emb);
    CHECK(oracle::max_rel_error(g, n, 1e-7) <= 1e-3);
}

TEST_CASE("regularizer gradient matches finite differences") {
    Rng rng(17);
    const auto emb = random_matrix(6, 3, rng);
    const auto orig = random_matrix(6, 3, rng);
    Matrix g;
    regularization_loss(emb, orig, &g);
    const auto n = oracle::numeric_gradient([&](const Matrix& e) { return regularization_loss(e, orig); }, emb);
    CHECK(oracle::max_rel_error(g, n, 1e-7) <= 1e-3);
}

}  // TEST_SUITE("gradients")

TEST_SUITE("unit") {

TEST_CASE("method names") {
    for (auto m : {UnlearnMethod::original, UnlearnMethod::u2u, UnlearnMethod::d2d, UnlearnMethod::retrain,
                   UnlearnMethod::adv}) {
        CHECK(parse_unlearn_method(to_string(m)) == m);
    }
    CHECK_THROWS_AS(parse_unlearn_method("erase"), ConfigError);
}

TEST_CASE("mmd argument errors") {
    Matrix x = Matrix::Zero(2, 2);
    CHECK_THROWS_AS(mmd_rbf_sq(x, x, 0.0), ConfigError);
    CHECK_THROWS_AS(mmd_rbf_sq(x, Matrix::Zero(0, 2), 1.0), ConfigError);
    CHECK_THROWS_AS(mmd_rbf_sq(x, Matrix::Zero(2, 3), 1.0), ConfigError);
}

TEST_CASE("u2u examples") {
    Matrix emb(2, 2);
    emb << 0, 0, 3, 4;
    const AttributeLabels labels{{0, 1}, {"A", "B"}};
    CHECK(u2u_distinguishability(emb, labels, 0) == 25.0);
    CHECK(u2u_distinguishability(Matrix::Constant(6, 3, 0.7), six_user_labels(), 4) == 0.0);
    Rng rng(19);
    auto z = random_matrix(6, 3, rng);
    const double before = u2u_distinguishability(z, six_user_labels(), 4);
    z.rowwise() += Eigen::RowVector3d(5.0, -2.0, 1.0);
    CHECK(u2u_distinguishability(z, six_user_labels(), 4) == doctest::Approx(before).epsilon(1e-12));
    CHECK_THROWS_AS(u2u_distinguishability(emb, AttributeLabels{{0, 0}, {"A", "B"}}, 0), DataError);
}

TEST_CASE("cross-class matching subsamples the larger class") {
    const AttributeLabels labels{{0, 0, 0, 0, 1, 1}, {"A", "B"}};
    const auto pairs = cross_class_matching(labels, 9);
    CHECK(pairs.size() == 2);
    for (const auto& [a, b] : pairs) CHECK(labels.labels[a] != labels.labels[b]);
    CHECK(cross_class_matching(labels, 9) == pairs);
}

TEST_CASE("regularizer examples") {
    Rng rng(23);
    const auto orig = random_matrix(4, 3, rng);
    CHECK(regularization_loss(orig, orig) == 0.0);
    auto moved = orig;
    moved(2, 1) += 2.0;
    CHECK(regularization_loss(moved, orig) == doctest::Approx(4.0).epsilon(1e-12));
    const auto delta = random_matrix(4, 3, rng);
    const double base = regularization_loss(orig + delta, orig);
    CHECK(regularization_loss(orig + 3.0 * delta, orig) == doctest::Approx(9.0 * base).epsilon(1e-12));
    CHECK_THROWS_AS(regularization_loss(orig, Matrix::Zero(3, 3)), ConfigError);
}

TEST_CASE("hyperparameter validation") {
    UnlearnHyperparams hp;
    hp.au_trade_off = -1;
    CHECK_THROWS_AS(hp.validate(), ConfigError);
    hp = {};
    hp.mmd_bandwidth = 0.0;
    CHECK_THROWS_AS(hp.validate(), ConfigError);
}

TEST_CASE("unlearning reduces distinguishability on both models") {
    for (auto kind : {ModelKind::mf, ModelKind::lightgcn}) {
        const auto t = small_trained(kind);
        UnlearnHyperparams hp;
        hp.steps = 60;
        for (auto m : {UnlearnMethod::u2u, UnlearnMethod::d2d}) {
            const auto r = run_unlearn(t.model, *t.bundle.labels, m, hp, &t.bundle.split);
            REQUIRE(r.trace.size() == 61);
            CHECK(r.trace.back().dist < r.trace.front().dist);
            CHECK(r.model.item_emb == t.model.item_emb);
            if (m == UnlearnMethod::d2d) CHECK(r.bandwidth > 0.0);
        }
    }
    const auto t = small_trained(ModelKind::lightgcn, 1);
    CHECK_THROWS_AS(run_unlearn(t.model, *t.bundle.labels, UnlearnMethod::d2d, UnlearnHyperparams{}), ConfigError);
}

TEST_CASE("non-finite embeddings abort with the step index") {
    auto t = small_trained(ModelKind::mf, 1);
    t.model.user_emb(0, 0) = std::nan("");
    UnlearnHyperparams hp;
    hp.steps = 3;
    try {
        run_unlearn(t.model, *t.bundle.labels, UnlearnMethod::u2u, hp);
        FAIL("expected a numeric error");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("step 0") != std::string::npos);
    }
}

TEST_CASE("in-training methods with no penalty reproduce plain training") {
    const auto bundle = fixtures::synthetic_bundle(40, 120, 10, 0.8, 3);
    auto hp = TrainHyperparams::defaults(ModelKind::mf);
    hp.dim = 6;
    hp.epochs = 4;
    hp.batch_size = 64;
    const auto plain = train(init_model(ModelKind::mf, 40, bundle.split.train.n_items, hp), bundle.split, hp);
    UnlearnHyperparams uhp;
    uhp.retrain_trade_off = 0.0;
    const auto retrained = retrain_with_penalty(bundle.split, *bundle.labels, ModelKind::mf, hp, uhp);
    CHECK(retrained.model.user_emb == plain.model.user_emb);
    CHECK(retrained.model.item_emb == plain.model.item_emb);
    uhp.adv_frozen = true;
    const auto adv = adv_in_training(bundle.split, *bundle.labels, ModelKind::mf, hp, uhp);
    CHECK(adv.model.user_emb == plain.model.user_emb);
    CHECK(adv.model.item_emb == plain.model.item_emb);
    const auto via_run = run_unlearn(plain.model, *bundle.labels, UnlearnMethod::retrain, uhp, &bundle.split, &hp);
    CHECK(via_run.model.user_emb == plain.model.user_emb);
    CHECK_THROWS_AS(run_unlearn(plain.model, *bundle.labels, UnlearnMethod::adv, uhp), ConfigError);
}

TEST_CASE("retrain penalty lowers the class MMD") {
    const auto bundle = fixtures::synthetic_bundle(80, 160, 12, 0.9, 6);
    auto hp = TrainHyperparams::defaults(ModelKind::mf);
    hp.dim = 8;
    hp.epochs = 20;
    hp.batch_size = 128;
    hp.learning_rate = 0.01;
    UnlearnHyperparams uhp;
    uhp.retrain_trade_off = 0.0;
    const auto plain = retrain_with_penalty(bundle.split, *bundle.labels, ModelKind::mf, hp, uhp);
    uhp.retrain_trade_off = 5.0;
    const auto penalized = retrain_with_penalty(bundle.split, *bundle.labels, ModelKind::mf, hp, uhp);
    const double bw = median_pairwise_distance(plain.model.user_emb);
    CHECK(d2d_distinguishability(penalized.model.user_emb, *bundle.labels, bw) <
          d2d_distinguishability(plain.model.user_emb, *bundle.labels, bw));
    CHECK(penalized.trace.size() == 20);
}

TEST_CASE("reversed adversary loses accuracy over training") {
    // Strong class-specific tastes make the attribute linearly readable.
    const auto bundle = fixtures::synthetic_bundle(80, 160, 12, 0.95, 8);
    auto hp = TrainHyperparams::defaults(ModelKind::mf);
    hp.dim = 8;
    hp.epochs = 40;
    hp.batch_size = 128;
    hp.learning_rate = 0.01;
    UnlearnHyperparams uhp;
    uhp.retrain_trade_off = 1.0;
    uhp.adv_learning_rate = 0.01;
    const auto r = adv_in_training(bundle.split, *bundle.labels, ModelKind::mf, hp, uhp);
    REQUIRE(r.adversary_accuracy.size() == 40);
    double peak = 0.0;
    for (std::size_t e = 0; e < 10; ++e) peak = std::max(peak, r.adversary_accuracy[e]);
    CHECK(r.adversary_accuracy.back() < peak);
}

}  // TEST_SUITE("unit")

TEST_SUITE("properties") {

TEST_CASE("zero steps and original are identities") {
    const auto t = small_trained(ModelKind::mf, 2);
    const auto& labels = *t.bundle.labels;
    UnlearnHyperparams hp;
    hp.steps = 0;
    for (auto m : {UnlearnMethod::original, UnlearnMethod::u2u, UnlearnMethod::d2d}) {
        const auto r = run_unlearn(t.model, labels, m, hp);
        CHECK(r.model.user_emb == t.model.user_emb);
        CHECK(r.model.item_emb == t.model.item_emb);
        CHECK(r.wall_time_seconds >= 0.0);
    }
    CHECK(run_unlearn(t.model, labels, UnlearnMethod::original, hp).trace.empty());
}

TEST_CASE("mmd is symmetric and non-negative") {
    Rng rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        const auto x = random_matrix(1 + static_cast<Eigen::Index>(rng.below(6)), 3, rng);
        const auto y = random_matrix(1 + static_cast<Eigen::Index>(rng.below(6)), 3, rng);
        const double s = 0.5 + rng.uniform();
        // Cross-term summation order differs, so only up to rounding.
        CHECK(oracle::rel_diff(mmd_rbf_sq(x, y, s), mmd_rbf_sq(y, x, s)) <= 1e-12);
        CHECK(mmd_rbf_sq(x, y, s) >= 0.0);
    }
}

TEST_CASE("loss trace decomposes into distance plus weighted regularizer") {
    const auto t = small_trained(ModelKind::mf, 5);
    UnlearnHyperparams hp;
    hp.steps = 25;
    hp.au_trade_off = 0.3;
    for (auto m : {UnlearnMethod::u2u, UnlearnMethod::d2d}) {
        const auto r = run_unlearn(t.model, *t.bundle.labels, m, hp);
        CHECK(r.trace.front().reg == 0.0);
        for (const auto& rec : r.trace) {
            CHECK(oracle::rel_diff(rec.total, rec.dist + hp.au_trade_off * rec.reg) <= 1e-9);
        }
        CHECK(r.model.item_emb == t.model.item_emb);
        CHECK(r.model.user_emb.rows() == t.model.user_emb.rows());
        const auto again = run_unlearn(t.model, *t.bundle.labels, m, hp);
        CHECK(again.model.user_emb == r.model.user_emb);
        CHECK(again.trace == r.trace);
    }
    const auto id = run_unlearn(t.model, *t.bundle.labels, UnlearnMethod::original, hp);
    CHECK(id.model.user_emb == t.model.user_emb);
}

}  // TEST_SUITE("properties")
