#pragma once

// Attribute-inference attackers trained on user embeddings.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "unlearnrec/dataio.hpp"
#include "unlearnrec/optim.hpp"

namespace unlearnrec {

enum class AttackerKind { mlp, gbt };

/// "mlp", or "gbt" (also "xgb").
AttackerKind parse_attacker_kind(std::string_view name);
std::string_view to_string(AttackerKind kind);

struct UserSplit {
    std::vector<std::uint32_t> train;
    std::vector<std::uint32_t> test;
};

/// Stratified shuffle split. Each class keeps round(train_frac * size) users
/// for training, clamped so both sides get at least one.
UserSplit split_users(const AttributeLabels& labels, double train_frac, std::uint64_t seed);

class Classifier {
public:
    virtual ~Classifier() = default;
    /// One row of class probabilities per input row.
    virtual Matrix predict_proba(const Matrix& x) const = 0;
    virtual std::size_t n_classes() const = 0;
};

struct MlpHyperparams {
    std::vector<std::size_t> hidden = {128, 64};
    double learning_rate = 1e-3;
    double l2 = 1e-4;
    std::size_t epochs = 100;
    std::size_t batch_size = 64;
    /// z-score features with training-set statistics before the first layer.
    bool standardize = true;
    std::uint64_t seed = 0;

    bool operator==(const MlpHyperparams&) const = default;
};

class MlpClassifier final : public Classifier {
public:
    Matrix predict_proba(const Matrix& x) const override;
    std::size_t n_classes() const override { return n_classes_; }

    /// Mean cross-entropy per epoch during training.
    const std::vector<double>& loss_trace() const { return loss_trace_; }

private:
    friend MlpClassifier train_mlp_attacker(const Matrix&, std::span<const std::uint32_t>, std::size_t,
                                            const MlpHyperparams&);
    Matrix standardized(const Matrix& x) const;

    std::size_t n_classes_ = 0;
    Eigen::RowVectorXd mean_;
    Eigen::RowVectorXd scale_;
    std::vector<Matrix> weights_;
    std::vector<Eigen::RowVectorXd> biases_;
    std::vector<double> loss_trace_;
};

/// Feed-forward net (ReLU hidden layers, softmax output) trained with Adam on
/// mini-batch cross-entropy. Throws DataError if fewer than two classes occur.
MlpClassifier train_mlp_attacker(const Matrix& x, std::span<const std::uint32_t> y, std::size_t n_classes,
                                 const MlpHyperparams& hp);

struct GbtHyperparams {
    std::size_t rounds = 100;
    std::size_t max_depth = 4;
    double shrinkage = 0.1;
    double lambda = 1.0;
    double min_child_weight = 1.0;

    bool operator==(const GbtHyperparams&) const = default;
};

class GbtClassifier final : public Classifier {
public:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        double value = 0.0;
        int left = -1;
        int right = -1;
    };
    using Tree = std::vector<Node>;

    Matrix predict_proba(const Matrix& x) const override;
    std::size_t n_classes() const override { return n_classes_; }
    /// Raw log-odds for one-vs-rest booster `cls` (the only booster when binary).
    double margin(const Eigen::Ref<const Eigen::RowVectorXd>& row, std::size_t booster) const;
    std::size_t n_trees() const;

private:
    friend GbtClassifier train_gbt_attacker(const Matrix&, std::span<const std::uint32_t>, std::size_t,
                                            const GbtHyperparams&);
    std::size_t n_classes_ = 0;
    std::vector<double> base_margin_;
    std::vector<std::vector<Tree>> boosters_;
};

/// Gradient boosting of depth-limited regression trees on logistic loss with
/// second-order leaf values (one-vs-rest when there are more than two classes).
GbtClassifier train_gbt_attacker(const Matrix& x, std::span<const std::uint32_t> y, std::size_t n_classes,
                                 const GbtHyperparams& hp);

struct ClassificationMetrics {
    double accuracy = 0.0;
    /// Macro averages; a class that is never predicted has precision 0 and a
    /// class with no true members has recall 0.
    double precision = 0.0;
    double recall = 0.0;
    /// Unset when the test set lacks a class.
    std::optional<double> auc;
    std::vector<double> class_precision;
    std::vector<double> class_recall;

    /// Throws DataError when the AUC is undefined.
    double require_auc() const;
    bool operator==(const ClassificationMetrics&) const = default;
};

/// Mann-Whitney AUC; tied positive/negative pairs count 1/2.
/// Throws DataError if either class is absent.
double auc_rank_statistic(std::span<const double> scores, std::span<const std::uint8_t> is_positive);

/// Accuracy at argmax, macro precision/recall, and AUC on the class-1
/// probability (macro one-vs-rest AUC with more than two classes).
ClassificationMetrics classification_metrics(const Matrix& proba, std::span<const std::uint32_t> y);

ClassificationMetrics evaluate_attack(const Classifier& clf, const Matrix& x, std::span<const std::uint32_t> y);

struct AttackSettings {
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
    double train_frac = 0.8;
    MlpHyperparams mlp;
    GbtHyperparams gbt;

    bool operator==(const AttackSettings&) const = default;
};

struct AttackFold {
    std::uint64_t seed = 0;
    ClassificationMetrics metrics;

    bool operator==(const AttackFold&) const = default;
};

struct AttackReport {
    AttackerKind kind = AttackerKind::mlp;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double auc = 0.0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::vector<AttackFold> folds;

    bool operator==(const AttackReport&) const = default;
};

/// Runs one attacker over every seed in `settings` (split seed and attacker
/// seed alike) and averages the fold metrics.
AttackReport run_attacker(AttackerKind kind, const Matrix& features, const AttributeLabels& labels,
                          const AttackSettings& settings);

}  // namespace unlearnrec
