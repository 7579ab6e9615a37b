#include <Eigen/Eigenvalues>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "unlearnrec/errors.hpp"
#include "unlearnrec/recmodels.hpp"

using namespace unlearnrec;

namespace {

InteractionDataset toy_dataset(std::size_t n_users, std::size_t n_items,
                               const std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs) {
    std::vector<Interaction> xs;
    std::int64_t t = 0;
    for (const auto& [u, i] : pairs) xs.push_back({u, i, 1.0, t++});
    IdMap users, items;
    for (std::size_t u = 0; u < n_users; ++u) users.intern("u" + std::to_string(u));
    for (std::size_t i = 0; i < n_items; ++i) items.intern("i" + std::to_string(i));
    return InteractionDataset::from_interactions(n_users, n_items, std::move(xs), std::move(users), std::move(items));
}

Matrix dense(const NormAdjacency& adj) { return Matrix(adj.matrix); }

/// Two taste groups: users 0-3 like items 0-3, users 4-7 like items 4-7.
EvalSplit two_group_split() {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    for (std::uint32_t u = 0; u < 8; ++u) {
        const std::uint32_t base = u < 4 ? 0 : 4;
        for (std::uint32_t k = 0; k < 3; ++k) pairs.emplace_back(u, base + (u + k) % 4);
    }
    EvalSplit split;
    split.train = toy_dataset(8, 8, pairs);
    split.test.resize(8);
    for (std::uint32_t u = 0; u < 8; ++u) {
        const std::uint32_t base = u < 4 ? 0 : 4;
        split.test[u] = TestCase{base + (u + 3) % 4, {(base + 4) % 8}};
    }
    return split;
}

}  // namespace

TEST_SUITE("unit") {

TEST_CASE("init_model shapes and seeding") {
    TrainHyperparams hp;
    const auto a = init_model(ModelKind::mf, 943, 1682, hp);
    CHECK(a.user_emb.rows() == 943);
    CHECK(a.user_emb.cols() == 64);
    CHECK(a.item_emb.rows() == 1682);
    CHECK(a.item_emb.cols() == 64);
    const auto b = init_model(ModelKind::mf, 943, 1682, hp);
    CHECK(a.user_emb == b.user_emb);
    CHECK(a.item_emb == b.item_emb);
    hp.seed = 1;
    CHECK(init_model(ModelKind::mf, 943, 1682, hp).user_emb != a.user_emb);
    const double sd = std::sqrt(a.user_emb.squaredNorm() / static_cast<double>(a.user_emb.size()));
    CHECK(sd == doctest::Approx(0.1).epsilon(0.02));
    hp.dim = 0;
    CHECK_THROWS_AS(init_model(ModelKind::mf, 3, 3, hp), ConfigError);
}

TEST_CASE("model kind names") {
    CHECK(parse_model_kind("ncf") == ModelKind::mf);
    CHECK(parse_model_kind("lightgcn") == ModelKind::lightgcn);
    CHECK_THROWS_AS(parse_model_kind("svd"), ConfigError);
    CHECK(TrainHyperparams::defaults(ModelKind::lightgcn).epochs == 400);
    CHECK(TrainHyperparams::defaults(ModelKind::mf).epochs == 200);
}

TEST_CASE("adjacency values") {
    const auto single = build_norm_adjacency(toy_dataset(1, 1, {{0, 0}}));
    CHECK(single.matrix.nonZeros() == 2);
    CHECK(single.matrix.coeff(0, 1) == 1.0);
    CHECK(single.matrix.coeff(1, 0) == 1.0);

    const auto adj = build_norm_adjacency(toy_dataset(2, 2, {{0, 0}, {0, 1}, {1, 0}}));
    CHECK(adj.matrix.nonZeros() == 6);
    CHECK(adj.matrix.coeff(0, 2) == 0.5);
    CHECK(adj.matrix.coeff(2, 0) == 0.5);
    CHECK(adj.matrix.coeff(0, 0) == 0.0);

    const auto isolated = toy_dataset(2, 3, {{0, 0}, {1, 1}});
    CHECK_THROWS_AS(build_norm_adjacency(isolated), DataError);
    CHECK(build_norm_adjacency(isolated, IsolatedNodes::allow).matrix.row(4).nonZeros() == 0);
}

TEST_CASE("propagation closed forms") {
    EmbeddingModel m;
    m.kind = ModelKind::lightgcn;
    m.user_emb = Matrix::Constant(1, 2, 1.0);
    m.item_emb = Matrix::Constant(1, 2, 3.0);
    const auto adj = build_norm_adjacency(toy_dataset(1, 1, {{0, 0}}));
    m.lgcn_layers = 0;
    CHECK(lightgcn_propagate(m, adj).users == m.user_emb);
    m.lgcn_layers = 1;
    const auto fin = lightgcn_propagate(m, adj);
    CHECK(fin.users == Matrix::Constant(1, 2, 2.0));
    CHECK(fin.items == Matrix::Constant(1, 2, 2.0));
}

TEST_CASE("score is a dot product") {
    EmbeddingModel m;
    m.user_emb = Matrix(2, 2);
    m.user_emb << 1, 2, 0, 0;
    m.item_emb = Matrix(2, 2);
    m.item_emb << 3, 4, -2, 1;
    CHECK(score(m, nullptr, 0, 0) == 11.0);
    CHECK(score(m, nullptr, 0, 1) == 0.0);
    CHECK(score(m, nullptr, 1, 0) == 0.0);
}

TEST_CASE("train with zero epochs leaves the model unchanged") {
    const auto split = two_group_split();
    auto hp = TrainHyperparams::defaults(ModelKind::mf);
    hp.dim = 4;
    hp.epochs = 0;
    const auto init = init_model(ModelKind::mf, 8, 8, hp);
    const auto out = train(init, split, hp);
    CHECK(out.model.user_emb == init.user_emb);
    CHECK(out.model.item_emb == init.item_emb);
    CHECK(out.epoch_loss.empty());
}

TEST_CASE("train learns group structure and is deterministic") {
    const auto split = two_group_split();
    for (auto kind : {ModelKind::mf, ModelKind::lightgcn}) {
        auto hp = TrainHyperparams::defaults(kind);
        hp.dim = 8;
        hp.epochs = 200;
        hp.batch_size = 8;
        hp.learning_rate = 0.01;
        hp.l2_weight = 1e-4;
        const auto out = train(init_model(kind, 8, 8, hp), split, hp);
        const auto again = train(init_model(kind, 8, 8, hp), split, hp);
        CHECK(out.model.user_emb == again.model.user_emb);
        CHECK(out.model.item_emb == again.model.item_emb);
        NormAdjacency adj;
        if (kind == ModelKind::lightgcn) adj = build_norm_adjacency(split.train, IsolatedNodes::allow);
        const NormAdjacency* ap = kind == ModelKind::lightgcn ? &adj : nullptr;
        for (std::uint32_t u = 0; u < 8; ++u) {
            CHECK(score(out.model, ap, u, split.test[u].positive) > score(out.model, ap, u, split.test[u].negatives[0]));
        }
        CHECK(out.epoch_loss.back() < out.epoch_loss.front());
    }
}

TEST_CASE("train aborts on a non-finite loss with the epoch index") {
    const auto split = two_group_split();
    auto hp = TrainHyperparams::defaults(ModelKind::mf);
    hp.dim = 4;
    hp.epochs = 3;
    hp.init_std = 1e160;
    try {
        train(init_model(ModelKind::mf, 8, 8, hp), split, hp);
        FAIL("expected a numeric error");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("epoch 0") != std::string::npos);
    }
}

TEST_CASE("checkpoint round-trip at float32 precision") {
    fixtures::TempDir dir("ckpt");
    TrainHyperparams hp;
    hp.dim = 5;
    auto m = init_model(ModelKind::lightgcn, 7, 9, hp);
    m.lgcn_layers = 2;
    save_checkpoint(m, 42, dir.path());
    const auto back = load_checkpoint(dir.path());
    CHECK(back.kind == ModelKind::lightgcn);
    CHECK(back.lgcn_layers == 2);
    CHECK(back.user_emb == m.user_emb.cast<float>().cast<double>());
    CHECK(back.item_emb == m.item_emb.cast<float>().cast<double>());
    CHECK(std::filesystem::file_size(dir / "user_emb.f32") == 7 * 5 * 4);
    std::filesystem::resize_file(dir / "item_emb.f32", 10);
    CHECK_THROWS_AS(load_checkpoint(dir.path()), DataError);
}

}  // TEST_SUITE("unit")

TEST_SUITE("gradients") {

TEST_CASE("BPR gradient matches finite differences") {
    // 5 users, 6 items, a handful of triples with repeated users and items.
    const auto ds = toy_dataset(5, 6, {{0, 0}, {0, 1}, {1, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {4, 0}, {2, 2}});
    const std::vector<Triple> batch = {{0, 0, 3}, {0, 1, 5}, {1, 2, 0}, {2, 3, 1}, {3, 4, 2}, {4, 5, 3}, {4, 0, 1}};
    for (auto kind : {ModelKind::mf, ModelKind::lightgcn}) {
        TrainHyperparams hp;
        hp.dim = 3;
        hp.init_std = 0.5;
        auto model = init_model(kind, 5, 6, hp);
        model.lgcn_layers = kind == ModelKind::lightgcn ? 2 : 0;
        const auto adj = build_norm_adjacency(ds);
        const NormAdjacency* ap = kind == ModelKind::lightgcn ? &adj : nullptr;
        const double l2 = 0.05;
        Matrix gu, gi;
        bpr_loss(model, ap, batch, l2, &gu, &gi);
        const auto nu = oracle::numeric_gradient(
            [&](const Matrix& u) {
                auto m = model;
                m.user_emb = u;
                return bpr_loss(m, ap, batch, l2);
            },
            model.user_emb);
        const auto ni = oracle::numeric_gradient(
            [&](const Matrix& i) {
                auto m = model;
                m.item_emb = i;
                return bpr_loss(m, ap, batch, l2);
            },
            model.item_emb);
        CHECK(oracle::max_rel_error(gu, nu, 1e-6) <= 1e-3);
        CHECK(oracle::max_rel_error(gi, ni, 1e-6) <= 1e-3);
    }
}

}  // TEST_SUITE("gradients")

TEST_SUITE("properties") {

TEST_CASE("propagation is linear") {
    const auto bundle = fixtures::synthetic_bundle(15, 120, 6, 0.6, 4, 1, 10);
    const auto adj = build_norm_adjacency(bundle.split.train, IsolatedNodes::allow);
    TrainHyperparams hp;
    hp.dim = 4;
    auto m = init_model(ModelKind::lightgcn, 15, bundle.split.train.n_items, hp);
    m.lgcn_layers = 3;
    const auto base = lightgcn_propagate(m, adj);
    for (double alpha : {2.0, -0.5, 3.25}) {
        auto scaled = m;
        scaled.user_emb *= alpha;
        scaled.item_emb *= alpha;
        const auto out = lightgcn_propagate(scaled, adj);
        CHECK(oracle::max_rel_error(out.users, alpha * base.users) <= 1e-12);
        CHECK(oracle::max_rel_error(out.items, alpha * base.items) <= 1e-12);
    }
}

TEST_CASE("adjacency is symmetric with spectral radius at most 1") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const auto bundle = fixtures::synthetic_bundle(20, 110, 5 + seed, 0.5, seed, 1, 10);
        const auto adj = build_norm_adjacency(bundle.split.train, IsolatedNodes::allow);
        const Matrix a = dense(adj);
        CHECK((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(a.minCoeff() >= 0.0);
        CHECK(a.diagonal().cwiseAbs().maxCoeff() == 0.0);
        const Eigen::MatrixXd ad = a;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ad);
        CHECK(eig.eigenvalues().cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
        // Pattern mirrors the distinct training pairs.
        std::size_t distinct = 0;
        for (const auto& p : bundle.split.train.pos_sets) distinct += p.size();
        CHECK(static_cast<std::size_t>(adj.matrix.nonZeros()) == 2 * distinct);
    }
}

}  // TEST_SUITE("properties")
