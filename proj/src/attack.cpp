#include "unlearnrec/attack.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "unlearnrec/errors.hpp"
#include "unlearnrec/rng.hpp"

namespace unlearnrec {

namespace {

constexpr std::uint64_t kMlpInitStream = 21;
constexpr std::uint64_t kMlpBatchStream = 22;

void check_training_rows(const Matrix& x, std::span<const std::uint32_t> y, std::size_t n_classes) {
    if (x.rows() == 0 || static_cast<std::size_t>(x.rows()) != y.size()) {
        throw DataError("attacker: feature rows and labels disagree or are empty");
    }
    std::vector<std::size_t> counts(n_classes, 0);
    for (auto c : y) {
        if (c >= n_classes) throw DataError("attacker: label out of range");
        ++counts[c];
    }
    if (std::count_if(counts.begin(), counts.end(), [](auto n) { return n > 0; }) < 2) {
        throw DataError("attacker: training rows contain fewer than two classes");
    }
}

Matrix softmax_rows(Matrix logits) {
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double mx = logits.row(r).maxCoeff();
        logits.row(r) = (logits.row(r).array() - mx).exp().matrix();
        logits.row(r) /= logits.row(r).sum();
    }
    return logits;
}

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

AttackerKind parse_attacker_kind(std::string_view name) {
    if (name == "mlp") return AttackerKind::mlp;
    if (name == "gbt" || name == "xgb") return AttackerKind::gbt;
    throw ConfigError("unknown attacker '" + std::string(name) + "' (expected mlp or gbt)");
}

std::string_view to_string(AttackerKind kind) { return kind == AttackerKind::mlp ? "mlp" : "gbt"; }

UserSplit split_users(const AttributeLabels& labels, double train_frac, std::uint64_t seed) {
    if (!(train_frac > 0.0 && train_frac < 1.0)) throw ConfigError("train_frac must lie strictly between 0 and 1");
    std::vector<std::vector<std::uint32_t>> members(labels.n_classes());
    for (std::size_t u = 0; u < labels.labels.size(); ++u) members[labels.labels[u]].push_back(static_cast<std::uint32_t>(u));
    UserSplit split;
    for (std::size_t c = 0; c < members.size(); ++c) {
        auto& m = members[c];
        if (m.size() < 2) {
            throw DataError("class '" + labels.class_names[c] + "' has " + std::to_string(m.size()) +
                            " users; stratified split needs at least 2");
        }
        Rng rng(derive_seed(seed, c));
        rng.shuffle(std::span(m));
        auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(m.size())));
        n_train = std::clamp<std::size_t>(n_train, 1, m.size() - 1);
        split.train.insert(split.train.end(), m.begin(), m.begin() + static_cast<std::ptrdiff_t>(n_train));
        split.test.insert(split.test.end(), m.begin() + static_cast<std::ptrdiff_t>(n_train), m.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

// ---------------------------------------------------------------------------
// MLP

Matrix MlpClassifier::standardized(const Matrix& x) const {
    Matrix z = x;
    z.rowwise() -= mean_;
    return z.array().rowwise() / scale_.array();
}

Matrix MlpClassifier::predict_proba(const Matrix& x) const {
    Matrix a = standardized(x);
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        Matrix h = a * weights_[l];
        h.rowwise() += biases_[l];
        a = l + 1 < weights_.size() ? Matrix(h.cwiseMax(0.0)) : h;
    }
    return softmax_rows(std::move(a));
}

MlpClassifier train_mlp_attacker(const Matrix& x, std::span<const std::uint32_t> y, std::size_t n_classes,
                                 const MlpHyperparams& hp) {
    check_training_rows(x, y, n_classes);
    if (hp.batch_size == 0) throw ConfigError("mlp batch_size must be >= 1");
    MlpClassifier clf;
    clf.n_classes_ = n_classes;
    const Eigen::Index d = x.cols();
    clf.mean_ = Eigen::RowVectorXd::Zero(d);
    clf.scale_ = Eigen::RowVectorXd::Ones(d);
    if (hp.standardize) {
        clf.mean_ = x.colwise().mean();
        for (Eigen::Index j = 0; j < d; ++j) {
            const double var = (x.col(j).array() - clf.mean_(j)).square().mean();
            clf.scale_(j) = var > 0 ? std::sqrt(var) : 1.0;
        }
    }
    const Matrix z = clf.standardized(x);

    std::vector<std::size_t> sizes = {static_cast<std::size_t>(d)};
    sizes.insert(sizes.end(), hp.hidden.begin(), hp.hidden.end());
    sizes.push_back(n_classes);
    Rng init(derive_seed(hp.seed, kMlpInitStream));
    std::vector<Optimizer> w_opt;
    std::vector<Optimizer> b_opt;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const auto fan_in = static_cast<Eigen::Index>(sizes[l]);
        const auto fan_out = static_cast<Eigen::Index>(sizes[l + 1]);
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_in, fan_out);
        for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = (2.0 * init.uniform() - 1.0) * limit;
        clf.weights_.push_back(std::move(w));
        clf.biases_.push_back(Eigen::RowVectorXd::Zero(fan_out));
        w_opt.emplace_back(OptimizerKind::adam, hp.learning_rate, fan_in, fan_out);
        b_opt.emplace_back(OptimizerKind::adam, hp.learning_rate, 1, fan_out);
    }

    const std::size_t n = y.size();
    const std::size_t layers = clf.weights_.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng batches(derive_seed(hp.seed, kMlpBatchStream));
    for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
        batches.shuffle(std::span(order));
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += hp.batch_size) {
            const std::size_t len = std::min(hp.batch_size, n - start);
            const auto rows = static_cast<Eigen::Index>(len);
            // Forward, keeping pre-activations for the backward pass.
            std::vector<Matrix> acts(layers + 1);
            std::vector<Matrix> pre(layers);
            acts[0].resize(rows, d);
            for (Eigen::Index r = 0; r < rows; ++r) acts[0].row(r) = z.row(static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(r)]));
            for (std::size_t l = 0; l < layers; ++l) {
                pre[l] = acts[l] * clf.weights_[l];
                pre[l].rowwise() += clf.biases_[l];
                acts[l + 1] = l + 1 < layers ? Matrix(pre[l].cwiseMax(0.0)) : pre[l];
            }
            Matrix delta = softmax_rows(acts[layers]);
            double loss = 0.0;
            for (Eigen::Index r = 0; r < rows; ++r) {
                const auto c = static_cast<Eigen::Index>(y[order[start + static_cast<std::size_t>(r)]]);
                loss -= std::log(std::max(delta(r, c), 1e-300));
                delta(r, c) -= 1.0;
            }
            delta /= static_cast<double>(len);
            loss /= static_cast<double>(len);
            if (!std::isfinite(loss)) throw NumericError("non-finite MLP attacker loss at epoch " + std::to_string(epoch));
            loss_sum += loss * static_cast<double>(len);

            for (std::size_t l = layers; l-- > 0;) {
                Matrix gw = acts[l].transpose() * delta;
                gw += hp.l2 * clf.weights_[l];
                const Matrix gb = delta.colwise().sum();
                if (l > 0) {
                    Matrix back = delta * clf.weights_[l].transpose();
                    delta = (pre[l - 1].array() > 0.0).cast<double>().matrix().cwiseProduct(back);
                }
                w_opt[l].step(clf.weights_[l], gw);
                Matrix bias = clf.biases_[l];
                b_opt[l].step(bias, gb);
                clf.biases_[l] = bias.row(0);
            }
        }
        clf.loss_trace_.push_back(loss_sum / static_cast<double>(n));
    }
    return clf;
}

// ---------------------------------------------------------------------------
// Gradient-boosted trees

namespace {

struct TreeBuilder {
    const Matrix& x;
    const std::vector<std::vector<std::uint32_t>>& sorted;  // per feature, row indices by value
    const std::vector<double>& grad;
    const std::vector<double>& hess;
    const GbtHyperparams& hp;
    std::vector<int> node_of;  // current node per row, -1 once settled in a leaf
    GbtClassifier::Tree tree;

    double leaf_value(double g, double h) const { return -g / (h + hp.lambda); }

    void build() {
        const auto n = static_cast<std::size_t>(x.rows());
        node_of.assign(n, 0);
        tree.assign(1, {});
        std::vector<int> frontier = {0};
        for (std::size_t depth = 0; depth <= hp.max_depth && !frontier.empty(); ++depth) {
            const std::size_t n_nodes = tree.size();
            std::vector<double> g_tot(n_nodes, 0.0);
            std::vector<double> h_tot(n_nodes, 0.0);
            for (std::size_t r = 0; r < n; ++r) {
                if (node_of[r] < 0) continue;
                g_tot[static_cast<std::size_t>(node_of[r])] += grad[r];
                h_tot[static_cast<std::size_t>(node_of[r])] += hess[r];
            }
            struct Best {
                double gain = 0.0;
                int feature = -1;
                double threshold = 0.0;
            };
            std::vector<Best> best(n_nodes);
            if (depth < hp.max_depth) {
                std::vector<double> g_left(n_nodes);
                std::vector<double> h_left(n_nodes);
                std::vector<double> last_value(n_nodes);
                std::vector<char> started(n_nodes);
                for (std::size_t f = 0; f < sorted.size(); ++f) {
                    std::fill(g_left.begin(), g_left.end(), 0.0);
                    std::fill(h_left.begin(), h_left.end(), 0.0);
                    std::fill(started.begin(), started.end(), 0);
                    for (auto r : sorted[f]) {
                        const int node = node_of[r];
                        if (node < 0) continue;
                        const auto k = static_cast<std::size_t>(node);
                        const double v = x(r, static_cast<Eigen::Index>(f));
                        if (started[k] && v > last_value[k]) {
                            const double gl = g_left[k];
                            const double hl = h_left[k];
                            const double gr = g_tot[k] - gl;
                            const double hr = h_tot[k] - hl;
                            if (hl >= hp.min_child_weight && hr >= hp.min_child_weight) {
                                const double gain = gl * gl / (hl + hp.lambda) + gr * gr / (hr + hp.lambda) -
                                                    g_tot[k] * g_tot[k] / (h_tot[k] + hp.lambda);
                                if (gain > best[k].gain + 1e-12) {
                                    best[k] = {gain, static_cast<int>(f), 0.5 * (last_value[k] + v)};
                                }
                            }
                        }
                        g_left[k] += grad[r];
                        h_left[k] += hess[r];
                        last_value[k] = v;
                        started[k] = 1;
                    }
                }
            }
            std::vector<int> next;
            for (int node : frontier) {
                const auto k = static_cast<std::size_t>(node);
                if (best[k].feature < 0) {
                    tree[k].value = hp.shrinkage * leaf_value(g_tot[k], h_tot[k]);
                    continue;
                }
                tree[k].feature = best[k].feature;
                tree[k].threshold = best[k].threshold;
                tree[k].left = static_cast<int>(tree.size());
                tree.push_back({});
                tree[k].right = static_cast<int>(tree.size());
                tree.push_back({});
                next.push_back(tree[k].left);
                next.push_back(tree[k].right);
            }
            for (std::size_t r = 0; r < n; ++r) {
                if (node_of[r] < 0) continue;
                const auto& nd = tree[static_cast<std::size_t>(node_of[r])];
                if (nd.feature < 0) {
                    node_of[r] = -1;
                } else {
                    node_of[r] = x(static_cast<Eigen::Index>(r), nd.feature) < nd.threshold ? nd.left : nd.right;
                }
            }
            frontier = std::move(next);
        }
    }
};

double eval_tree(const GbtClassifier::Tree& tree, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    std::size_t k = 0;
    while (tree[k].feature >= 0) {
        k = static_cast<std::size_t>(row(tree[k].feature) < tree[k].threshold ? tree[k].left : tree[k].right);
    }
    return tree[k].value;
}

}  // namespace

double GbtClassifier::margin(const Eigen::Ref<const Eigen::RowVectorXd>& row, std::size_t booster) const {
    double m = base_margin_[booster];
    for (const auto& tree : boosters_[booster]) m += eval_tree(tree, row);
    return m;
}

std::size_t GbtClassifier::n_trees() const {
    std::size_t n = 0;
    for (const auto& b : boosters_) n += b.size();
    return n;
}

Matrix GbtClassifier::predict_proba(const Matrix& x) const {
    Matrix proba(x.rows(), static_cast<Eigen::Index>(n_classes_));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const Eigen::RowVectorXd row = x.row(r);
        if (n_classes_ == 2) {
            const double p = sigmoid(margin(row, 0));
            proba(r, 0) = 1.0 - p;
            proba(r, 1) = p;
        } else {
            for (std::size_t c = 0; c < n_classes_; ++c) proba(r, static_cast<Eigen::Index>(c)) = sigmoid(margin(row, c));
            proba.row(r) /= proba.row(r).sum();
        }
    }
    return proba;
}

GbtClassifier train_gbt_attacker(const Matrix& x, std::span<const std::uint32_t> y, std::size_t n_classes,
                                 const GbtHyperparams& hp) {
    check_training_rows(x, y, n_classes);
    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<std::vector<std::uint32_t>> sorted(static_cast<std::size_t>(x.cols()));
    for (std::size_t f = 0; f < sorted.size(); ++f) {
        auto& idx = sorted[f];
        idx.resize(n);
        std::iota(idx.begin(), idx.end(), 0U);
        std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) {
            return x(a, static_cast<Eigen::Index>(f)) < x(b, static_cast<Eigen::Index>(f));
        });
    }

    GbtClassifier clf;
    clf.n_classes_ = n_classes;
    const std::size_t n_boosters = n_classes == 2 ? 1 : n_classes;
    for (std::size_t b = 0; b < n_boosters; ++b) {
        const std::uint32_t positive = n_classes == 2 ? 1U : static_cast<std::uint32_t>(b);
        std::vector<double> target(n);
        for (std::size_t r = 0; r < n; ++r) target[r] = y[r] == positive ? 1.0 : 0.0;
        const double prior = std::clamp(std::accumulate(target.begin(), target.end(), 0.0) / static_cast<double>(n),
                                        1e-6, 1.0 - 1e-6);
        const double base = std::log(prior / (1.0 - prior));
        clf.base_margin_.push_back(base);
        clf.boosters_.emplace_back();
        std::vector<double> margin(n, base);
        std::vector<double> grad(n);
        std::vector<double> hess(n);
        for (std::size_t round = 0; round < hp.rounds; ++round) {
            for (std::size_t r = 0; r < n; ++r) {
                const double p = sigmoid(margin[r]);
                grad[r] = p - target[r];
                hess[r] = std::max(p * (1.0 - p), 1e-16);
            }
            TreeBuilder builder{x, sorted, grad, hess, hp, {}, {}};
            builder.build();
            for (std::size_t r = 0; r < n; ++r) margin[r] += eval_tree(builder.tree, x.row(static_cast<Eigen::Index>(r)));
            clf.boosters_.back().push_back(std::move(builder.tree));
        }
    }
    return clf;
}

// ---------------------------------------------------------------------------
// Metrics

double ClassificationMetrics::require_auc() const {
    if (!auc) throw DataError("AUC undefined: test set does not contain every class");
    return *auc;
}

double auc_rank_statistic(std::span<const double> scores, std::span<const std::uint8_t> is_positive) {
    if (scores.size() != is_positive.size()) throw DataError("auc: score/label length mismatch");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
    double rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        // Average of 1-based ranks i+1 .. j, kept in half-units until here.
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (is_positive[order[k]]) {
                rank_sum += avg_rank;
                ++n_pos;
            }
        }
        i = j;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw DataError("AUC undefined: scores cover a single class");
    const double np = static_cast<double>(n_pos);
    return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

ClassificationMetrics classification_metrics(const Matrix& proba, std::span<const std::uint32_t> y) {
    const auto n = static_cast<std::size_t>(proba.rows());
    if (n == 0 || n != y.size()) throw DataError("metrics: empty test set or length mismatch");
    const auto n_classes = static_cast<std::size_t>(proba.cols());
    std::vector<std::size_t> tp(n_classes, 0);
    std::vector<std::size_t> predicted(n_classes, 0);
    std::vector<std::size_t> actual(n_classes, 0);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < n; ++r) {
        Eigen::Index pred = 0;
        proba.row(static_cast<Eigen::Index>(r)).maxCoeff(&pred);
        const auto p = static_cast<std::size_t>(pred);
        if (y[r] >= n_classes) throw DataError("metrics: label out of range");
        ++predicted[p];
        ++actual[y[r]];
        if (p == y[r]) {
            ++tp[p];
            ++correct;
        }
    }
    ClassificationMetrics m;
    m.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    for (std::size_t c = 0; c < n_classes; ++c) {
        m.class_precision.push_back(predicted[c] ? static_cast<double>(tp[c]) / static_cast<double>(predicted[c]) : 0.0);
        m.class_recall.push_back(actual[c] ? static_cast<double>(tp[c]) / static_cast<double>(actual[c]) : 0.0);
    }
    m.precision = std::accumulate(m.class_precision.begin(), m.class_precision.end(), 0.0) / static_cast<double>(n_classes);
    m.recall = std::accumulate(m.class_recall.begin(), m.class_recall.end(), 0.0) / static_cast<double>(n_classes);

    if (std::all_of(actual.begin(), actual.end(), [](auto a) { return a > 0; })) {
        const std::size_t first = n_classes == 2 ? 1 : 0;
        double auc_sum = 0.0;
        std::vector<double> scores(n);
        std::vector<std::uint8_t> positive(n);
        for (std::size_t c = first; c < n_classes; ++c) {
            for (std::size_t r = 0; r < n; ++r) {
                scores[r] = proba(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
                positive[r] = y[r] == c ? 1 : 0;
            }
            auc_sum += auc_rank_statistic(scores, positive);
        }
        m.auc = auc_sum / static_cast<double>(n_classes - first);
    }
    return m;
}

ClassificationMetrics evaluate_attack(const Classifier& clf, const Matrix& x, std::span<const std::uint32_t> y) {
    return classification_metrics(clf.predict_proba(x), y);
}

AttackReport run_attacker(AttackerKind kind, const Matrix& features, const AttributeLabels& labels,
                          const AttackSettings& settings) {
    if (settings.seeds.empty()) throw ConfigError("attack needs at least one seed");
    if (static_cast<std::size_t>(features.rows()) != labels.labels.size()) {
        throw DataError("attack: feature rows do not match labelled users");
    }
    AttackReport report;
    report.kind = kind;
    for (auto seed : settings.seeds) {
        const auto split = split_users(labels, settings.train_frac, seed);
        auto gather = [&](const std::vector<std::uint32_t>& users, Matrix& x, std::vector<std::uint32_t>& y) {
            x.resize(static_cast<Eigen::Index>(users.size()), features.cols());
            y.resize(users.size());
            for (std::size_t r = 0; r < users.size(); ++r) {
                x.row(static_cast<Eigen::Index>(r)) = features.row(users[r]);
                y[r] = labels.labels[users[r]];
            }
        };
        Matrix x_train;
        Matrix x_test;
        std::vector<std::uint32_t> y_train;
        std::vector<std::uint32_t> y_test;
        gather(split.train, x_train, y_train);
        gather(split.test, x_test, y_test);

        AttackFold fold;
        fold.seed = seed;
        if (kind == AttackerKind::mlp) {
            auto hp = settings.mlp;
            hp.seed = seed;
            fold.metrics = evaluate_attack(train_mlp_attacker(x_train, y_train, labels.n_classes(), hp), x_test, y_test);
        } else {
            fold.metrics = evaluate_attack(train_gbt_attacker(x_train, y_train, labels.n_classes(), settings.gbt), x_test, y_test);
        }
        report.n_train = split.train.size();
        report.n_test = split.test.size();
        report.accuracy += fold.metrics.accuracy;
        report.precision += fold.metrics.precision;
        report.recall += fold.metrics.recall;
        report.auc += fold.metrics.require_auc();
        report.folds.push_back(std::move(fold));
    }
    const auto k = static_cast<double>(settings.seeds.size());
    report.accuracy /= k;
    report.precision /= k;
    report.recall /= k;
    report.auc /= k;
    return report;
}

}  // namespace unlearnrec
