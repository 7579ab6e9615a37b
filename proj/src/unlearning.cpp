#include "unlearnrec/unlearning.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "unlearnrec/errors.hpp"
#include "unlearnrec/rng.hpp"

namespace unlearnrec {

namespace {

constexpr std::uint64_t kPenaltyStream = 11;
constexpr std::uint64_t kAdversaryStream = 12;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Pairwise squared distances from the Gram matrix, diagonal forced to 0.
Matrix squared_distances(const Matrix& z) {
    const Vector sq = z.rowwise().squaredNorm();
    Matrix d = z * z.transpose();
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        for (Eigen::Index j = 0; j < d.cols(); ++j) {
            d(i, j) = i == j ? 0.0 : std::max(0.0, sq(i) + sq(j) - 2.0 * d(i, j));
        }
    }
    return d;
}

// sum_ij w_i w_j k(z_i, z_j); gradient w.r.t. z is overwritten when requested.
double weighted_kernel_sum(const Matrix& z, const Vector& w, double bandwidth, Matrix* grad) {
    const double inv_two_s2 = 1.0 / (2.0 * bandwidth * bandwidth);
    Matrix k = squared_distances(z);
    k = (-inv_two_s2 * k.array()).exp().matrix();
    const double value = w.dot(k * w);
    if (grad != nullptr) {
        const Matrix m = k * w.asDiagonal();
        const Vector r = m.rowwise().sum();
        *grad = (-2.0 / (bandwidth * bandwidth)) * w.asDiagonal() * (r.asDiagonal() * z - m * z);
    }
    return value;
}

std::vector<std::vector<std::uint32_t>> members_by_class(const AttributeLabels& labels) {
    std::vector<std::vector<std::uint32_t>> members(labels.n_classes());
    for (std::size_t u = 0; u < labels.labels.size(); ++u) members[labels.labels[u]].push_back(static_cast<std::uint32_t>(u));
    return members;
}

void require_nonempty_classes(const std::vector<std::vector<std::uint32_t>>& members) {
    if (members.size() < 2) throw DataError("need at least two attribute classes");
    for (std::size_t c = 0; c < members.size(); ++c) {
        if (members[c].empty()) throw DataError("attribute class " + std::to_string(c) + " has no users");
    }
}

// MMD between the users `a` and `b` of `emb`; gradient scattered (scaled) into `grad`.
double mmd_between(const Matrix& emb, std::span<const std::uint32_t> a, std::span<const std::uint32_t> b,
                   double bandwidth, double grad_scale, Matrix* grad) {
    const auto n = static_cast<Eigen::Index>(a.size());
    const auto m = static_cast<Eigen::Index>(b.size());
    Matrix z(n + m, emb.cols());
    Vector w(n + m);
    for (Eigen::Index r = 0; r < n; ++r) {
        z.row(r) = emb.row(a[static_cast<std::size_t>(r)]);
        w(r) = 1.0 / static_cast<double>(n);
    }
    for (Eigen::Index r = 0; r < m; ++r) {
        z.row(n + r) = emb.row(b[static_cast<std::size_t>(r)]);
        w(n + r) = -1.0 / static_cast<double>(m);
    }
    Matrix g;
    const double value = weighted_kernel_sum(z, w, bandwidth, grad != nullptr ? &g : nullptr);
    if (grad != nullptr) {
        for (Eigen::Index r = 0; r < n; ++r) grad->row(a[static_cast<std::size_t>(r)]) += grad_scale * g.row(r);
        for (Eigen::Index r = 0; r < m; ++r) grad->row(b[static_cast<std::size_t>(r)]) += grad_scale * g.row(n + r);
    }
    return value;
}

double bandwidth_or_median(const std::optional<double>& fixed, const Matrix& z) {
    if (fixed) return *fixed;
    const double med = median_pairwise_distance(z);
    return med > 0.0 ? med : 1.0;
}

Matrix rows_of(const Matrix& emb, std::span<const std::uint32_t> rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), emb.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = emb.row(rows[r]);
    return out;
}

// Retrain baseline: lambda * MMD over a per-class sample of each batch's users.
class MmdPenalty final : public BatchPenalty {
public:
    MmdPenalty(const AttributeLabels& labels, const UnlearnHyperparams& hp)
        : labels_(labels), hp_(hp), rng_(derive_seed(hp.seed, kPenaltyStream)), seen_(labels.labels.size(), 0) {}

    double apply(const Matrix& user_repr, std::span<const Triple> batch, Matrix& user_grad) override {
        std::vector<std::vector<std::uint32_t>> members(labels_.n_classes());
        for (const auto& t : batch) {
            if (seen_[t.user]) continue;
            seen_[t.user] = 1;
            members[labels_.labels[t.user]].push_back(t.user);
        }
        for (const auto& t : batch) seen_[t.user] = 0;

        std::vector<std::uint32_t> all;
        std::size_t present = 0;
        for (auto& m : members) {
            std::sort(m.begin(), m.end());
            const std::size_t cap = hp_.penalty_users_per_class;
            if (cap > 0 && m.size() > cap) {
                for (std::size_t k = 0; k < cap; ++k) {
                    std::swap(m[k], m[k + static_cast<std::size_t>(rng_.below(m.size() - k))]);
                }
                m.resize(cap);
            }
            if (!m.empty()) ++present;
            all.insert(all.end(), m.begin(), m.end());
        }
        if (present < 2) return 0.0;

        const double bw = bandwidth_or_median(hp_.mmd_bandwidth, rows_of(user_repr, all));
        std::size_t n_pairs = 0;
        for (std::size_t a = 0; a < members.size(); ++a) {
            for (std::size_t b = a + 1; b < members.size(); ++b) {
                if (!members[a].empty() && !members[b].empty()) ++n_pairs;
            }
        }
        const double scale = hp_.retrain_trade_off / static_cast<double>(n_pairs);
        double raw = 0.0;
        for (std::size_t a = 0; a < members.size(); ++a) {
            for (std::size_t b = a + 1; b < members.size(); ++b) {
                if (members[a].empty() || members[b].empty()) continue;
                raw += mmd_between(user_repr, members[a], members[b], bw, scale, &user_grad);
            }
        }
        raw /= static_cast<double>(n_pairs);
        dist_sum_ += raw * static_cast<double>(batch.size());
        rows_ += batch.size();
        return hp_.retrain_trade_off * raw;
    }

    void end_epoch(std::size_t /*epoch*/) override {
        epoch_dist_.push_back(rows_ > 0 ? dist_sum_ / static_cast<double>(rows_) : 0.0);
        dist_sum_ = 0.0;
        rows_ = 0;
    }

    const std::vector<double>& epoch_dist() const { return epoch_dist_; }

private:
    const AttributeLabels& labels_;
    UnlearnHyperparams hp_;
    Rng rng_;
    std::vector<char> seen_;
    double dist_sum_ = 0.0;
    std::size_t rows_ = 0;
    std::vector<double> epoch_dist_;
};

// Adv-InT baseline: one-hidden-layer attribute classifier on the user rows of
// each batch. The classifier minimizes cross-entropy; the embeddings receive
// the reversed gradient scaled by lambda.
class AdversaryPenalty final : public BatchPenalty {
public:
    AdversaryPenalty(const AttributeLabels& labels, std::size_t dim, const UnlearnHyperparams& hp)
        : labels_(labels),
          hp_(hp),
          w1_(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(hp.adv_hidden)),
          b1_(Matrix::Zero(1, static_cast<Eigen::Index>(hp.adv_hidden))),
          w2_(static_cast<Eigen::Index>(hp.adv_hidden), static_cast<Eigen::Index>(labels.n_classes())),
          b2_(Matrix::Zero(1, static_cast<Eigen::Index>(labels.n_classes()))),
          opt_w1_(OptimizerKind::adam, hp.adv_learning_rate, w1_.rows(), w1_.cols()),
          opt_b1_(OptimizerKind::adam, hp.adv_learning_rate, b1_.rows(), b1_.cols()),
          opt_w2_(OptimizerKind::adam, hp.adv_learning_rate, w2_.rows(), w2_.cols()),
          opt_b2_(OptimizerKind::adam, hp.adv_learning_rate, b2_.rows(), b2_.cols()) {
        Rng rng(derive_seed(hp.seed, kAdversaryStream));
        const double lim1 = std::sqrt(6.0 / static_cast<double>(w1_.rows()));
        const double lim2 = std::sqrt(6.0 / static_cast<double>(w2_.rows()));
        for (Eigen::Index k = 0; k < w1_.size(); ++k) w1_.data()[k] = (2.0 * rng.uniform() - 1.0) * lim1;
        for (Eigen::Index k = 0; k < w2_.size(); ++k) w2_.data()[k] = (2.0 * rng.uniform() - 1.0) * lim2;
    }

    double apply(const Matrix& user_repr, std::span<const Triple> batch, Matrix& user_grad) override {
        const auto rows = static_cast<Eigen::Index>(batch.size());
        Matrix x(rows, user_repr.cols());
        for (Eigen::Index r = 0; r < rows; ++r) x.row(r) = user_repr.row(batch[static_cast<std::size_t>(r)].user);

        Matrix h = x * w1_;
        h.rowwise() += b1_.row(0);
        const Matrix a = h.cwiseMax(0.0);
        Matrix logits = a * w2_;
        logits.rowwise() += b2_.row(0);

        double ce = 0.0;
        std::size_t correct = 0;
        Matrix dlogits(rows, logits.cols());
        for (Eigen::Index r = 0; r < rows; ++r) {
            const auto y = static_cast<Eigen::Index>(labels_.labels[batch[static_cast<std::size_t>(r)].user]);
            Eigen::Index best = 0;
            const double mx = logits.row(r).maxCoeff(&best);
            const Eigen::RowVectorXd e = (logits.row(r).array() - mx).exp().matrix();
            const double z = e.sum();
            ce -= std::log(e(y) / z);
            if (best == y) ++correct;
            dlogits.row(r) = e / z;
            dlogits(r, y) -= 1.0;
        }
        const double inv_rows = 1.0 / static_cast<double>(rows);
        ce *= inv_rows;
        dlogits *= inv_rows;

        const Matrix da = dlogits * w2_.transpose();
        const Matrix dh = (h.array() > 0.0).cast<double>().matrix().cwiseProduct(da);
        const Matrix dx = dh * w1_.transpose();
        for (Eigen::Index r = 0; r < rows; ++r) {
            user_grad.row(batch[static_cast<std::size_t>(r)].user) += -hp_.retrain_trade_off * dx.row(r);
        }

        if (!hp_.adv_frozen) {
            const Matrix gw2 = a.transpose() * dlogits;
            const Matrix gb2 = dlogits.colwise().sum();
            const Matrix gw1 = x.transpose() * dh;
            const Matrix gb1 = dh.colwise().sum();
            opt_w1_.step(w1_, gw1);
            opt_b1_.step(b1_, gb1);
            opt_w2_.step(w2_, gw2);
            opt_b2_.step(b2_, gb2);
        }

        ce_sum_ += ce * static_cast<double>(rows);
        correct_ += correct;
        rows_ += static_cast<std::size_t>(rows);
        return -hp_.retrain_trade_off * ce;
    }

    void end_epoch(std::size_t /*epoch*/) override {
        const auto n = static_cast<double>(std::max<std::size_t>(rows_, 1));
        epoch_ce_.push_back(ce_sum_ / n);
        epoch_acc_.push_back(static_cast<double>(correct_) / n);
        ce_sum_ = 0.0;
        correct_ = 0;
        rows_ = 0;
    }

    const std::vector<double>& epoch_ce() const { return epoch_ce_; }
    const std::vector<double>& epoch_accuracy() const { return epoch_acc_; }

private:
    const AttributeLabels& labels_;
    UnlearnHyperparams hp_;
    Matrix w1_, b1_, w2_, b2_;
    Optimizer opt_w1_, opt_b1_, opt_w2_, opt_b2_;
    double ce_sum_ = 0.0;
    std::size_t correct_ = 0;
    std::size_t rows_ = 0;
    std::vector<double> epoch_ce_;
    std::vector<double> epoch_acc_;
};

void check_labels(const AttributeLabels& labels, std::size_t n_users) {
    if (labels.labels.size() != n_users) {
        throw DataError("attribute labels cover " + std::to_string(labels.labels.size()) + " users, model has " +
                        std::to_string(n_users));
    }
    require_nonempty_classes(members_by_class(labels));
}

std::vector<LossRecord> in_training_trace(const TrainResult& tr, const std::vector<double>& dist) {
    std::vector<LossRecord> trace;
    for (std::size_t e = 0; e < tr.epoch_loss.size(); ++e) {
        trace.push_back({e, dist[e], tr.epoch_loss[e], tr.epoch_loss[e] + tr.epoch_penalty[e]});
    }
    return trace;
}

}  // namespace

UnlearnMethod parse_unlearn_method(std::string_view name) {
    if (name == "original") return UnlearnMethod::original;
    if (name == "u2u") return UnlearnMethod::u2u;
    if (name == "d2d") return UnlearnMethod::d2d;
    if (name == "retrain") return UnlearnMethod::retrain;
    if (name == "adv") return UnlearnMethod::adv;
    throw ConfigError("unknown method '" + std::string(name) + "' (expected original, u2u, d2d, retrain or adv)");
}

std::string_view to_string(UnlearnMethod method) {
    switch (method) {
        case UnlearnMethod::original: return "original";
        case UnlearnMethod::u2u: return "u2u";
        case UnlearnMethod::d2d: return "d2d";
        case UnlearnMethod::retrain: return "retrain";
        case UnlearnMethod::adv: return "adv";
    }
    return "original";
}

void UnlearnHyperparams::validate() const {
    if (!(au_trade_off >= 0) || !std::isfinite(au_trade_off)) throw ConfigError("au_trade_off must be >= 0");
    if (!(retrain_trade_off >= 0) || !std::isfinite(retrain_trade_off)) {
        throw ConfigError("retrain_trade_off must be >= 0");
    }
    if (!(learning_rate > 0) || !std::isfinite(learning_rate)) throw ConfigError("unlearning learning_rate must be > 0");
    if (mmd_bandwidth && !(*mmd_bandwidth > 0)) throw ConfigError("mmd_bandwidth must be > 0");
    if (adv_hidden == 0) throw ConfigError("adv_hidden must be >= 1");
    if (!(adv_learning_rate > 0)) throw ConfigError("adv_learning_rate must be > 0");
}

double mmd_rbf_sq_grad(const Matrix& x, const Matrix& y, double bandwidth, Matrix* grad_x, Matrix* grad_y) {
    if (x.rows() < 1 || y.rows() < 1) throw ConfigError("mmd_rbf_sq: both sets must be nonempty");
    if (x.cols() != y.cols()) throw ConfigError("mmd_rbf_sq: dimension mismatch");
    if (!(bandwidth > 0) || !std::isfinite(bandwidth)) throw ConfigError("mmd_rbf_sq: bandwidth must be > 0");
    const Eigen::Index n = x.rows();
    const Eigen::Index m = y.rows();
    Matrix z(n + m, x.cols());
    z.topRows(n) = x;
    z.bottomRows(m) = y;
    Vector w(n + m);
    w.head(n).setConstant(1.0 / static_cast<double>(n));
    w.tail(m).setConstant(-1.0 / static_cast<double>(m));
    const bool want = grad_x != nullptr || grad_y != nullptr;
    Matrix g;
    const double value = weighted_kernel_sum(z, w, bandwidth, want ? &g : nullptr);
    if (grad_x != nullptr) *grad_x = g.topRows(n);
    if (grad_y != nullptr) *grad_y = g.bottomRows(m);
    return value;
}

double mmd_rbf_sq(const Matrix& x, const Matrix& y, double bandwidth) {
    return std::max(0.0, mmd_rbf_sq_grad(x, y, bandwidth, nullptr, nullptr));
}

double median_pairwise_distance(const Matrix& z) {
    if (z.rows() < 2) return 0.0;
    const Matrix d = squared_distances(z);
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(z.rows() * (z.rows() - 1) / 2));
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < z.rows(); ++j) values.push_back(d(i, j));
    }
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    double med = values[mid];
    if (values.size() % 2 == 0) {
        const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
        med = 0.5 * (med + lower);
    }
    return std::sqrt(med);
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> cross_class_matching(const AttributeLabels& labels,
                                                                           std::uint64_t seed) {
    auto members = members_by_class(labels);
    require_nonempty_classes(members);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    std::uint64_t stream = 0;
    for (std::size_t a = 0; a < members.size(); ++a) {
        for (std::size_t b = a + 1; b < members.size(); ++b) {
            Rng rng(derive_seed(seed, stream++));
            auto left = members[a];
            auto right = members[b];
            rng.shuffle(std::span(left));
            rng.shuffle(std::span(right));
            const std::size_t n = std::min(left.size(), right.size());
            for (std::size_t k = 0; k < n; ++k) pairs.emplace_back(left[k], right[k]);
        }
    }
    return pairs;
}

double u2u_distinguishability(const Matrix& emb, std::span<const std::pair<std::uint32_t, std::uint32_t>> pairs,
                              Matrix* grad) {
    if (pairs.empty()) throw DataError("u2u: no user pairs");
    const double inv = 1.0 / static_cast<double>(pairs.size());
    if (grad != nullptr) *grad = Matrix::Zero(emb.rows(), emb.cols());
    double value = 0.0;
    for (const auto& [a, b] : pairs) {
        const Eigen::RowVectorXd diff = emb.row(a) - emb.row(b);
        value += diff.squaredNorm() * inv;
        if (grad != nullptr) {
            grad->row(a) += 2.0 * inv * diff;
            grad->row(b) -= 2.0 * inv * diff;
        }
    }
    return value;
}

double u2u_distinguishability(const Matrix& emb, const AttributeLabels& labels, std::uint64_t pairing_seed) {
    const auto pairs = cross_class_matching(labels, pairing_seed);
    return u2u_distinguishability(emb, pairs);
}

double d2d_distinguishability(const Matrix& emb, const AttributeLabels& labels, double bandwidth, Matrix* grad) {
    if (!(bandwidth > 0)) throw ConfigError("d2d: bandwidth must be > 0");
    const auto members = members_by_class(labels);
    require_nonempty_classes(members);
    const std::size_t n_pairs = members.size() * (members.size() - 1) / 2;
    const double scale = 1.0 / static_cast<double>(n_pairs);
    if (grad != nullptr) *grad = Matrix::Zero(emb.rows(), emb.cols());
    double value = 0.0;
    for (std::size_t a = 0; a < members.size(); ++a) {
        for (std::size_t b = a + 1; b < members.size(); ++b) {
            value += std::max(0.0, mmd_between(emb, members[a], members[b], bandwidth, scale, grad));
        }
    }
    return value * scale;
}

double regularization_loss(const Matrix& emb, const Matrix& original, Matrix* grad) {
    if (emb.rows() != original.rows() || emb.cols() != original.cols()) {
        throw ConfigError("regularization_loss: shape mismatch");
    }
    const Matrix diff = emb - original;
    if (grad != nullptr) *grad = 2.0 * diff;
    return diff.squaredNorm();
}

UnlearnResult run_unlearn(const EmbeddingModel& model, const AttributeLabels& labels, UnlearnMethod method,
                          const UnlearnHyperparams& hp, const EvalSplit* split, const TrainHyperparams* train_hp) {
    hp.validate();
    if (method == UnlearnMethod::retrain || method == UnlearnMethod::adv) {
        if (split == nullptr || train_hp == nullptr) {
            throw ConfigError(std::string(to_string(method)) + " retrains from scratch and needs the split and training hyperparameters");
        }
        return method == UnlearnMethod::retrain ? retrain_with_penalty(*split, labels, model.kind, *train_hp, hp)
                                                : adv_in_training(*split, labels, model.kind, *train_hp, hp);
    }

    const auto start = Clock::now();
    UnlearnResult result;
    result.model = model;
    if (method == UnlearnMethod::original) {
        result.wall_time_seconds = seconds_since(start);
        return result;
    }

    check_labels(labels, model.n_users());
    NormAdjacency adj;
    const bool propagated = model.kind == ModelKind::lightgcn;
    if (propagated) {
        if (split == nullptr) throw ConfigError("LightGCN unlearning needs the split to rebuild its adjacency");
        adj = build_norm_adjacency(split->train, IsolatedNodes::allow);
    }
    const Eigen::Index n_users = model.user_emb.rows();

    // User representations seen by scoring and attackers, and the chain rule
    // back to the user table (items held fixed).
    auto features = [&](const Matrix& users) -> Matrix {
        if (!propagated) return users;
        Matrix stacked(n_users + model.item_emb.rows(), users.cols());
        stacked.topRows(n_users) = users;
        stacked.bottomRows(model.item_emb.rows()) = model.item_emb;
        return propagate_layers(stacked, adj, model.lgcn_layers).topRows(n_users);
    };
    auto backprop = [&](const Matrix& grad_features) -> Matrix {
        if (!propagated) return grad_features;
        Matrix stacked = Matrix::Zero(n_users + model.item_emb.rows(), grad_features.cols());
        stacked.topRows(n_users) = grad_features;
        return propagate_layers(stacked, adj, model.lgcn_layers).topRows(n_users);
    };

    const Matrix& original = model.user_emb;
    Matrix& users = result.model.user_emb;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    if (method == UnlearnMethod::u2u) {
        pairs = cross_class_matching(labels, hp.seed);
    } else {
        result.bandwidth = bandwidth_or_median(hp.mmd_bandwidth, features(users));
    }

    Optimizer opt(hp.optimizer, hp.learning_rate, users.rows(), users.cols());
    Matrix grad_dist;
    Matrix grad_reg;
    for (std::size_t step = 0; step <= hp.steps; ++step) {
        const Matrix feats = features(users);
        const bool last = step == hp.steps;
        Matrix* gd = last ? nullptr : &grad_dist;
        const double dist = method == UnlearnMethod::u2u ? u2u_distinguishability(feats, pairs, gd)
                                                         : d2d_distinguishability(feats, labels, result.bandwidth, gd);
        const double reg = regularization_loss(users, original, last ? nullptr : &grad_reg);
        const double total = dist + hp.au_trade_off * reg;
        if (!std::isfinite(total)) throw NumericError("non-finite unlearning loss at step " + std::to_string(step));
        result.trace.push_back({step, dist, reg, total});
        if (last) break;
        const Matrix grad = backprop(grad_dist) + hp.au_trade_off * grad_reg;
        opt.step(users, grad);
    }
    result.wall_time_seconds = seconds_since(start);
    return result;
}

UnlearnResult retrain_with_penalty(const EvalSplit& split, const AttributeLabels& labels, ModelKind kind,
                                   const TrainHyperparams& train_hp, const UnlearnHyperparams& hp) {
    hp.validate();
    check_labels(labels, split.train.n_users);
    const auto start = Clock::now();
    MmdPenalty penalty(labels, hp);
    auto model = init_model(kind, split.train.n_users, split.train.n_items, train_hp);
    auto trained = train(std::move(model), split, train_hp, &penalty);
    UnlearnResult result;
    result.trace = in_training_trace(trained, penalty.epoch_dist());
    result.model = std::move(trained.model);
    result.wall_time_seconds = seconds_since(start);
    return result;
}

UnlearnResult adv_in_training(const EvalSplit& split, const AttributeLabels& labels, ModelKind kind,
                              const TrainHyperparams& train_hp, const UnlearnHyperparams& hp) {
    hp.validate();
    check_labels(labels, split.train.n_users);
    const auto start = Clock::now();
    AdversaryPenalty penalty(labels, train_hp.dim, hp);
    auto model = init_model(kind, split.train.n_users, split.train.n_items, train_hp);
    auto trained = train(std::move(model), split, train_hp, &penalty);
    UnlearnResult result;
    result.trace = in_training_trace(trained, penalty.epoch_ce());
    result.adversary_accuracy = penalty.epoch_accuracy();
    result.model = std::move(trained.model);
    result.wall_time_seconds = seconds_since(start);
    return result;
}

}  // namespace unlearnrec
