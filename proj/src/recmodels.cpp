#include "unlearnrec/recmodels.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>

#include "json.hpp"
#include "unlearnrec/errors.hpp"
#include "unlearnrec/rng.hpp"

namespace unlearnrec {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kTrainStream = 2;

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Matrix stack(const Matrix& top, const Matrix& bottom) {
    Matrix out(top.rows() + bottom.rows(), top.cols());
    out.topRows(top.rows()) = top;
    out.bottomRows(bottom.rows()) = bottom;
    return out;
}

struct Objective {
    double rec = 0.0;
    double penalty = 0.0;
};

// BPR + L2 (+ optional penalty) on one batch. Gradients, when requested, are
// overwritten (not accumulated).
Objective batch_objective(const EmbeddingModel& model, const NormAdjacency* adj, std::span<const Triple> batch,
                          double l2, BatchPenalty* penalty, Matrix* grad_user, Matrix* grad_item) {
    const bool want_grad = grad_user != nullptr && grad_item != nullptr;
    const bool propagated = model.kind == ModelKind::lightgcn;
    if (propagated && adj == nullptr) throw ConfigError("LightGCN scoring needs an adjacency matrix");

    Matrix final_users;
    Matrix final_items;
    if (propagated) {
        const Matrix finals = propagate_layers(stack(model.user_emb, model.item_emb), *adj, model.lgcn_layers);
        final_users = finals.topRows(model.user_emb.rows());
        final_items = finals.bottomRows(model.item_emb.rows());
    }
    const Matrix& users = propagated ? final_users : model.user_emb;
    const Matrix& items = propagated ? final_items : model.item_emb;

    Matrix gu_final;
    Matrix gi_final;
    if (want_grad) {
        gu_final = Matrix::Zero(users.rows(), users.cols());
        gi_final = Matrix::Zero(items.rows(), items.cols());
    }

    const double inv_b = 1.0 / static_cast<double>(batch.size());
    Objective obj;
    for (const auto& t : batch) {
        const auto u = users.row(t.user);
        const double x = u.dot(items.row(t.pos) - items.row(t.neg));
        obj.rec += softplus(-x) * inv_b;
        if (want_grad) {
            const double g = -sigmoid(-x) * inv_b;
            gu_final.row(t.user) += g * (items.row(t.pos) - items.row(t.neg));
            gi_final.row(t.pos) += g * u;
            gi_final.row(t.neg) -= g * u;
        }
    }

    if (penalty != nullptr) {
        Matrix scratch;
        Matrix& target = want_grad ? gu_final : scratch;
        if (!want_grad) scratch = Matrix::Zero(users.rows(), users.cols());
        obj.penalty = penalty->apply(users, batch, target);
    }

    if (want_grad) {
        if (propagated) {
            // The propagation operator is a symmetric polynomial in A, so the
            // backward pass is the same operator applied to the gradient.
            const Matrix g0 = propagate_layers(stack(gu_final, gi_final), *adj, model.lgcn_layers);
            *grad_user = g0.topRows(users.rows());
            *grad_item = g0.bottomRows(items.rows());
        } else {
            *grad_user = std::move(gu_final);
            *grad_item = std::move(gi_final);
        }
    }

    const double scale = l2 * inv_b;
    for (const auto& t : batch) {
        const auto eu = model.user_emb.row(t.user);
        const auto ei = model.item_emb.row(t.pos);
        const auto ej = model.item_emb.row(t.neg);
        obj.rec += 0.5 * scale * (eu.squaredNorm() + ei.squaredNorm() + ej.squaredNorm());
        if (want_grad) {
            grad_user->row(t.user) += scale * eu;
            grad_item->row(t.pos) += scale * ei;
            grad_item->row(t.neg) += scale * ej;
        }
    }
    return obj;
}

}  // namespace

ModelKind parse_model_kind(std::string_view name) {
    if (name == "mf" || name == "ncf" || name == "nmf") return ModelKind::mf;
    if (name == "lightgcn" || name == "lgcn") return ModelKind::lightgcn;
    throw ConfigError("unknown model '" + std::string(name) + "' (expected mf/ncf or lightgcn/lgcn)");
}

std::string_view to_string(ModelKind kind) { return kind == ModelKind::mf ? "mf" : "lightgcn"; }

TrainHyperparams TrainHyperparams::defaults(ModelKind kind) {
    TrainHyperparams hp;
    if (kind == ModelKind::lightgcn) hp.epochs = 400;
    return hp;
}

void TrainHyperparams::validate() const {
    if (dim == 0) throw ConfigError("embedding dimension must be >= 1");
    if (!(learning_rate > 0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be > 0");
    if (!(l2_weight >= 0) || !std::isfinite(l2_weight)) throw ConfigError("l2_weight must be >= 0");
    if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
    if (neg_per_pos == 0) throw ConfigError("neg_per_pos must be >= 1");
    if (!(init_std > 0) || !std::isfinite(init_std)) throw ConfigError("init_std must be > 0");
}

EmbeddingModel init_model(ModelKind kind, std::size_t n_users, std::size_t n_items, const TrainHyperparams& hp) {
    if (hp.dim == 0) throw ConfigError("embedding dimension must be >= 1");
    if (n_users == 0 || n_items == 0) throw ConfigError("model needs at least one user and one item");
    EmbeddingModel model;
    model.kind = kind;
    model.lgcn_layers = kind == ModelKind::lightgcn ? hp.lgcn_layers : 0;
    const auto d = static_cast<Eigen::Index>(hp.dim);
    model.user_emb.resize(static_cast<Eigen::Index>(n_users), d);
    model.item_emb.resize(static_cast<Eigen::Index>(n_items), d);
    Rng rng(derive_seed(hp.seed, kInitStream));
    for (Eigen::Index k = 0; k < model.user_emb.size(); ++k) model.user_emb.data()[k] = rng.normal(0.0, hp.init_std);
    for (Eigen::Index k = 0; k < model.item_emb.size(); ++k) model.item_emb.data()[k] = rng.normal(0.0, hp.init_std);
    return model;
}

NormAdjacency build_norm_adjacency(const InteractionDataset& ds, IsolatedNodes isolated) {
    std::vector<std::size_t> item_deg(ds.n_items, 0);
    for (const auto& items : ds.pos_sets) {
        for (auto i : items) ++item_deg[i];
    }
    if (isolated == IsolatedNodes::reject) {
        for (std::size_t u = 0; u < ds.n_users; ++u) {
            if (ds.pos_sets[u].empty()) throw DataError("user " + std::to_string(u) + " has no interactions");
        }
        for (std::size_t i = 0; i < ds.n_items; ++i) {
            if (item_deg[i] == 0) throw DataError("item " + std::to_string(i) + " has no interactions");
        }
    }

    std::vector<Eigen::Triplet<double>> entries;
    std::size_t nnz = 0;
    for (const auto& items : ds.pos_sets) nnz += items.size();
    entries.reserve(2 * nnz);
    for (std::size_t u = 0; u < ds.n_users; ++u) {
        const auto du = static_cast<double>(ds.pos_sets[u].size());
        for (auto i : ds.pos_sets[u]) {
            const double v = 1.0 / std::sqrt(du * static_cast<double>(item_deg[i]));
            const auto row = static_cast<Eigen::Index>(u);
            const auto col = static_cast<Eigen::Index>(ds.n_users + i);
            entries.emplace_back(row, col, v);
            entries.emplace_back(col, row, v);
        }
    }
    NormAdjacency adj;
    adj.n_users = ds.n_users;
    adj.n_items = ds.n_items;
    const auto n = static_cast<Eigen::Index>(ds.n_users + ds.n_items);
    adj.matrix.resize(n, n);
    adj.matrix.setFromTriplets(entries.begin(), entries.end());
    return adj;
}

Matrix propagate_layers(const Matrix& stacked, const NormAdjacency& adj, std::size_t layers) {
    if (stacked.rows() != adj.matrix.rows()) throw ConfigError("embedding rows do not match adjacency size");
    Matrix acc = stacked;
    Matrix cur = stacked;
    for (std::size_t k = 0; k < layers; ++k) {
        Matrix next = adj.matrix * cur;
        cur = std::move(next);
        acc += cur;
    }
    acc /= static_cast<double>(layers + 1);
    if (!acc.allFinite()) throw NumericError("non-finite value during LightGCN propagation");
    return acc;
}

FinalEmbeddings lightgcn_propagate(const EmbeddingModel& model, const NormAdjacency& adj) {
    if (model.kind != ModelKind::lightgcn) throw ConfigError("lightgcn_propagate called on a non-LightGCN model");
    const Matrix finals = propagate_layers(stack(model.user_emb, model.item_emb), adj, model.lgcn_layers);
    return {finals.topRows(model.user_emb.rows()), finals.bottomRows(model.item_emb.rows())};
}

FinalEmbeddings final_embeddings(const EmbeddingModel& model, const NormAdjacency* adj) {
    if (model.kind == ModelKind::mf) return {model.user_emb, model.item_emb};
    if (adj == nullptr) throw ConfigError("LightGCN scoring needs an adjacency matrix");
    return lightgcn_propagate(model, *adj);
}

double score(const EmbeddingModel& model, const NormAdjacency* adj, std::uint32_t user, std::uint32_t item) {
    if (user >= model.n_users() || item >= model.n_items()) throw ConfigError("score: index out of range");
    if (model.kind == ModelKind::mf) return model.user_emb.row(user).dot(model.item_emb.row(item));
    const auto finals = final_embeddings(model, adj);
    return finals.users.row(user).dot(finals.items.row(item));
}

double bpr_loss(const EmbeddingModel& model, const NormAdjacency* adj, std::span<const Triple> batch, double l2,
                Matrix* grad_user, Matrix* grad_item) {
    if (batch.empty()) throw ConfigError("bpr_loss: empty batch");
    return batch_objective(model, adj, batch, l2, nullptr, grad_user, grad_item).rec;
}

TrainResult train(EmbeddingModel model, const EvalSplit& split, const TrainHyperparams& hp, BatchPenalty* penalty) {
    hp.validate();
    const auto& ds = split.train;
    if (ds.interactions.empty()) throw DataError("training split is empty");
    if (model.n_users() != ds.n_users || model.n_items() != ds.n_items) {
        throw ConfigError("model shape does not match the dataset");
    }

    NormAdjacency adj;
    const NormAdjacency* adj_ptr = nullptr;
    if (model.kind == ModelKind::lightgcn) {
        adj = build_norm_adjacency(ds, IsolatedNodes::allow);
        adj_ptr = &adj;
    }

    std::vector<std::pair<std::uint32_t, std::uint32_t>> positives;
    for (std::uint32_t u = 0; u < ds.n_users; ++u) {
        if (ds.pos_sets[u].size() + 1 > ds.n_items) {
            throw DataError("user " + std::to_string(u) + " interacted with every item; no negatives to sample");
        }
        for (auto i : ds.pos_sets[u]) positives.emplace_back(u, i);
    }

    TrainResult result;
    Rng rng(derive_seed(hp.seed, kTrainStream));
    Optimizer user_opt(hp.optimizer, hp.learning_rate, model.user_emb.rows(), model.user_emb.cols());
    Optimizer item_opt(hp.optimizer, hp.learning_rate, model.item_emb.rows(), model.item_emb.cols());
    Matrix grad_user;
    Matrix grad_item;
    std::vector<Triple> triples;
    triples.reserve(positives.size() * hp.neg_per_pos);

    for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
        rng.shuffle(std::span(positives));
        triples.clear();
        for (const auto& [u, i] : positives) {
            for (std::size_t k = 0; k < hp.neg_per_pos; ++k) {
                std::uint32_t j = 0;
                do {
                    j = static_cast<std::uint32_t>(rng.below(ds.n_items));
                } while (ds.is_positive(u, j));
                triples.push_back({u, i, j});
            }
        }

        double loss_sum = 0.0;
        double penalty_sum = 0.0;
        for (std::size_t start = 0; start < triples.size(); start += hp.batch_size) {
            const std::size_t len = std::min(hp.batch_size, triples.size() - start);
            const std::span<const Triple> batch(triples.data() + start, len);
            const auto obj = batch_objective(model, adj_ptr, batch, hp.l2_weight, penalty, &grad_user, &grad_item);
            if (!std::isfinite(obj.rec) || !std::isfinite(obj.penalty)) {
                throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
            }
            loss_sum += obj.rec * static_cast<double>(len);
            penalty_sum += obj.penalty * static_cast<double>(len);
            user_opt.step(model.user_emb, grad_user);
            item_opt.step(model.item_emb, grad_item);
        }
        const auto n = static_cast<double>(triples.size());
        result.epoch_loss.push_back(loss_sum / n);
        result.epoch_penalty.push_back(penalty_sum / n);
        if (penalty != nullptr) penalty->end_epoch(epoch);
    }
    if (!model.user_emb.allFinite() || !model.item_emb.allFinite()) {
        throw NumericError("non-finite embeddings after training");
    }
    result.model = std::move(model);
    return result;
}

// ---------------------------------------------------------------------------
// Checkpoints

void write_f32_table(const Matrix& table, const fs::path& path) {
    std::vector<std::uint32_t> words(static_cast<std::size_t>(table.size()));
    for (Eigen::Index k = 0; k < table.size(); ++k) {
        auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(table.data()[k]));
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
        words[static_cast<std::size_t>(k)] = bits;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(words.size() * 4));
    if (!out) throw DataError("write failed for " + path.string());
}

Matrix read_f32_table(const fs::path& path, std::size_t rows, std::size_t cols) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<std::uint32_t> words(rows * cols);
    in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(words.size() * 4));
    if (in.gcount() != static_cast<std::streamsize>(words.size() * 4) || in.peek() != std::char_traits<char>::eof()) {
        throw DataError(path.string() + ": expected " + std::to_string(rows * cols * 4) + " bytes");
    }
    Matrix table(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t k = 0; k < words.size(); ++k) {
        auto bits = words[k];
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
        table.data()[k] = static_cast<double>(std::bit_cast<float>(bits));
    }
    return table;
}

void save_checkpoint(const EmbeddingModel& model, std::uint64_t seed, const fs::path& dir) {
    fs::create_directories(dir);
    nlohmann::json header;
    header["format_version"] = kFormatVersion;
    header["tool_version"] = kToolVersion;
    header["kind"] = to_string(model.kind);
    header["dim"] = model.dim();
    header["lgcn_layers"] = model.lgcn_layers;
    header["n_users"] = model.n_users();
    header["n_items"] = model.n_items();
    header["seed"] = seed;
    header["dtype"] = "float32-le";
    std::ofstream out(dir / "model.json", std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + (dir / "model.json").string());
    out << header.dump(2) << "\n";
    write_f32_table(model.user_emb, dir / "user_emb.f32");
    write_f32_table(model.item_emb, dir / "item_emb.f32");
}

EmbeddingModel load_checkpoint(const fs::path& dir) {
    std::ifstream in(dir / "model.json");
    if (!in) throw DataError("missing checkpoint header " + (dir / "model.json").string());
    try {
        const auto header = nlohmann::json::parse(in);
        if (header.at("format_version").get<int>() != kFormatVersion) {
            throw DataError((dir / "model.json").string() + ": unsupported format version");
        }
        EmbeddingModel model;
        model.kind = parse_model_kind(header.at("kind").get<std::string>());
        model.lgcn_layers = header.at("lgcn_layers").get<std::size_t>();
        const auto d = header.at("dim").get<std::size_t>();
        model.user_emb = read_f32_table(dir / "user_emb.f32", header.at("n_users").get<std::size_t>(), d);
        model.item_emb = read_f32_table(dir / "item_emb.f32", header.at("n_items").get<std::size_t>(), d);
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw DataError((dir / "model.json").string() + ": " + e.what());
    }
}

}  // namespace unlearnrec
