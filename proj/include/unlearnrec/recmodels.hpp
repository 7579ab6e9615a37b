#pragma once

// Embedding recommenders: dot-product matrix factorization and LightGCN,
// trained with BPR on the leave-one-out training split.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/SparseCore>

#include "unlearnrec/dataio.hpp"
#include "unlearnrec/optim.hpp"

namespace unlearnrec {

enum class ModelKind { mf, lightgcn };

/// Accepts "mf" (also "ncf", "nmf") and "lightgcn" (also "lgcn").
ModelKind parse_model_kind(std::string_view name);
std::string_view to_string(ModelKind kind);

struct TrainHyperparams {
    std::size_t dim = 64;
    double learning_rate = 1e-3;
    double l2_weight = 1e-2;
    std::size_t epochs = 200;
    std::size_t batch_size = 2048;
    std::size_t neg_per_pos = 1;
    std::size_t lgcn_layers = 3;
    double init_std = 0.1;
    OptimizerKind optimizer = OptimizerKind::adam;
    std::uint64_t seed = 0;

    /// Defaults with the per-model epoch count (MF 200, LightGCN 400).
    static TrainHyperparams defaults(ModelKind kind);
    void validate() const;

    bool operator==(const TrainHyperparams&) const = default;
};

struct EmbeddingModel {
    ModelKind kind = ModelKind::mf;
    std::size_t lgcn_layers = 0;
    Matrix user_emb;
    Matrix item_emb;

    std::size_t dim() const { return static_cast<std::size_t>(user_emb.cols()); }
    std::size_t n_users() const { return static_cast<std::size_t>(user_emb.rows()); }
    std::size_t n_items() const { return static_cast<std::size_t>(item_emb.rows()); }
};

/// Tables drawn i.i.d. from Normal(0, init_std^2), users first, from a stream
/// derived from hp.seed.
EmbeddingModel init_model(ModelKind kind, std::size_t n_users, std::size_t n_items, const TrainHyperparams& hp);

/// What to do with users/items that have no interaction.
enum class IsolatedNodes { reject, allow };

/// D^-1/2 A D^-1/2 over the (n_users + n_items) bipartite graph. Users occupy
/// rows [0, n_users), items follow. Duplicate interactions count once.
struct NormAdjacency {
    std::size_t n_users = 0;
    std::size_t n_items = 0;
    Eigen::SparseMatrix<double, Eigen::RowMajor> matrix;
};

/// With IsolatedNodes::allow, zero-degree nodes get empty rows, which happens
/// for items whose only interactions were held out for testing.
NormAdjacency build_norm_adjacency(const InteractionDataset& ds, IsolatedNodes isolated = IsolatedNodes::reject);

struct FinalEmbeddings {
    Matrix users;
    Matrix items;
};

/// Mean of e^0..e^L with e^k = A e^(k-1), applied to a stacked (users; items) block.
Matrix propagate_layers(const Matrix& stacked, const NormAdjacency& adj, std::size_t layers);

FinalEmbeddings lightgcn_propagate(const EmbeddingModel& model, const NormAdjacency& adj);

/// The representations scoring uses: the tables themselves for MF, the
/// propagated finals for LightGCN (`adj` required).
FinalEmbeddings final_embeddings(const EmbeddingModel& model, const NormAdjacency* adj);

double score(const EmbeddingModel& model, const NormAdjacency* adj, std::uint32_t user, std::uint32_t item);

struct Triple {
    std::uint32_t user = 0;
    std::uint32_t pos = 0;
    std::uint32_t neg = 0;
};

/// Extra differentiable term added to every training batch, expressed on the
/// user representations that scoring sees. Used by the in-training baselines.
class BatchPenalty {
public:
    virtual ~BatchPenalty() = default;

    /// Adds d(penalty)/d(user_repr) into `user_grad` and returns the weighted
    /// penalty value that was added to the objective.
    virtual double apply(const Matrix& user_repr, std::span<const Triple> batch, Matrix& user_grad) = 0;

    virtual void end_epoch(std::size_t /*epoch*/) {}
};

/// Mean BPR loss -log sigmoid(s_ui - s_uj) over `batch` plus
/// l2 * mean(0.5 * (|e_u|^2 + |e_i|^2 + |e_j|^2)) on the raw tables.
/// Gradients w.r.t. both tables are written when the pointers are non-null.
double bpr_loss(const EmbeddingModel& model, const NormAdjacency* adj, std::span<const Triple> batch, double l2,
                Matrix* grad_user = nullptr, Matrix* grad_item = nullptr);

struct TrainResult {
    EmbeddingModel model;
    /// Mean BPR + L2 objective per epoch.
    std::vector<double> epoch_loss;
    /// Mean penalty value per epoch (zeros when no penalty is attached).
    std::vector<double> epoch_penalty;
};

/// Mini-batch training on BPR with `neg_per_pos` negatives per training
/// positive. LightGCN builds its adjacency from split.train.
/// Throws NumericError on a non-finite loss.
TrainResult train(EmbeddingModel model, const EvalSplit& split, const TrainHyperparams& hp,
                  BatchPenalty* penalty = nullptr);

// Checkpoints: model.json header plus little-endian float32 row-major tables.

void save_checkpoint(const EmbeddingModel& model, std::uint64_t seed, const std::filesystem::path& dir);
EmbeddingModel load_checkpoint(const std::filesystem::path& dir);

void write_f32_table(const Matrix& table, const std::filesystem::path& path);
Matrix read_f32_table(const std::filesystem::path& path, std::size_t rows, std::size_t cols);

}  // namespace unlearnrec
