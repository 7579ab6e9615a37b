#pragma once

// Attribute unlearning on trained user embeddings.
//
// The post-training methods (u2u, d2d) minimize
//
//     distinguishability(user representations) + au_trade_off * |E - E_0|_F^2
//
// over the user table E only; item tables are never touched. Distinguishability
// is either a mean squared distance over a fixed cross-class user matching
// (u2u) or the biased squared RBF-kernel MMD between class embedding sets
// (d2d). For LightGCN the representations are the propagated finals and the
// gradient flows back through propagation into E.
//
// The in-training baselines retrain from scratch: `retrain` adds
// retrain_trade_off * MMD to every batch, `adv` attaches an attribute
// classifier whose gradient is reversed into the user embeddings.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "unlearnrec/dataio.hpp"
#include "unlearnrec/optim.hpp"
#include "unlearnrec/recmodels.hpp"

namespace unlearnrec {

enum class UnlearnMethod { original, u2u, d2d, retrain, adv };

UnlearnMethod parse_unlearn_method(std::string_view name);
std::string_view to_string(UnlearnMethod method);

struct UnlearnHyperparams {
    double au_trade_off = 1e-6;
    double retrain_trade_off = 1.0;
    std::size_t steps = 500;
    double learning_rate = 1e-2;
    OptimizerKind optimizer = OptimizerKind::adam;
    /// Fixed RBF bandwidth; unset means the median pairwise distance heuristic.
    std::optional<double> mmd_bandwidth;
    /// Users drawn per class per batch for the retrain MMD term (0 = all batch users).
    std::size_t penalty_users_per_class = 128;
    std::size_t adv_hidden = 64;
    double adv_learning_rate = 1e-3;
    /// Keeps the adversary head at its initialization (no parameter updates).
    bool adv_frozen = false;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const UnlearnHyperparams&) const = default;
};

/// One optimization step (or epoch, for the in-training baselines).
/// total = dist + au_trade_off * reg for u2u/d2d. For retrain, dist is the
/// unweighted MMD term and reg the recommender loss; for adv, dist is the
/// adversary cross-entropy and reg the recommender loss.
struct LossRecord {
    std::size_t step = 0;
    double dist = 0.0;
    double reg = 0.0;
    double total = 0.0;

    bool operator==(const LossRecord&) const = default;
};

struct UnlearnResult {
    EmbeddingModel model;
    double wall_time_seconds = 0.0;
    std::vector<LossRecord> trace;
    /// RBF bandwidth used by d2d (0 when not applicable).
    double bandwidth = 0.0;
    /// Per-epoch adversary training accuracy (adv only).
    std::vector<double> adversary_accuracy;
};

/// Biased squared MMD with k(a, b) = exp(-|a - b|^2 / (2 bandwidth^2)),
/// clamped at 0.
double mmd_rbf_sq(const Matrix& x, const Matrix& y, double bandwidth);

/// Unclamped squared MMD. Writes gradients w.r.t. the rows of x and y when the
/// pointers are non-null.
double mmd_rbf_sq_grad(const Matrix& x, const Matrix& y, double bandwidth, Matrix* grad_x, Matrix* grad_y);

/// Median of |z_a - z_b| over all unordered row pairs.
double median_pairwise_distance(const Matrix& z);

/// Users of each pair of classes matched one-to-one after a seeded shuffle;
/// the larger class is subsampled. Pairs from all class pairs are pooled.
std::vector<std::pair<std::uint32_t, std::uint32_t>> cross_class_matching(const AttributeLabels& labels,
                                                                           std::uint64_t seed);

/// Mean squared distance over the given user pairs. Gradient is overwritten.
double u2u_distinguishability(const Matrix& emb, std::span<const std::pair<std::uint32_t, std::uint32_t>> pairs,
                              Matrix* grad = nullptr);

double u2u_distinguishability(const Matrix& emb, const AttributeLabels& labels, std::uint64_t pairing_seed);

/// Mean of the clamped MMD over every pair of classes.
double d2d_distinguishability(const Matrix& emb, const AttributeLabels& labels, double bandwidth,
                              Matrix* grad = nullptr);

/// |emb - original|_F^2. Gradient is overwritten.
double regularization_loss(const Matrix& emb, const Matrix& original, Matrix* grad = nullptr);

/// Applies `method` to a trained model. The in-training methods need `split`
/// and `train_hp`; LightGCN post-training needs `split` for its adjacency.
UnlearnResult run_unlearn(const EmbeddingModel& model, const AttributeLabels& labels, UnlearnMethod method,
                          const UnlearnHyperparams& hp, const EvalSplit* split = nullptr,
                          const TrainHyperparams* train_hp = nullptr);

UnlearnResult retrain_with_penalty(const EvalSplit& split, const AttributeLabels& labels, ModelKind kind,
                                   const TrainHyperparams& train_hp, const UnlearnHyperparams& hp);

UnlearnResult adv_in_training(const EvalSplit& split, const AttributeLabels& labels, ModelKind kind,
                              const TrainHyperparams& train_hp, const UnlearnHyperparams& hp);

}  // namespace unlearnrec
