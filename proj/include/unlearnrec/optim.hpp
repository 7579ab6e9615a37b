#pragma once

#include <cmath>
#include <cstddef>
#include <string_view>

#include <Eigen/Dense>

namespace unlearnrec {

/// Row-major so that one embedding is one contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class OptimizerKind { sgd, adam };

OptimizerKind parse_optimizer(std::string_view name);
std::string_view to_string(OptimizerKind kind);

/// First-order update rule for one parameter matrix. Adam keeps dense
/// moment estimates; rows with zero gradient still decay their moments.
class Optimizer {
public:
    Optimizer(OptimizerKind kind, double learning_rate, Eigen::Index rows, Eigen::Index cols)
        : kind_(kind), lr_(learning_rate) {
        if (kind_ == OptimizerKind::adam) {
            m_ = Matrix::Zero(rows, cols);
            v_ = Matrix::Zero(rows, cols);
        }
    }

    void step(Matrix& param, const Matrix& grad) {
        if (kind_ == OptimizerKind::sgd) {
            param.noalias() -= lr_ * grad;
            return;
        }
        ++t_;
        m_ = kBeta1 * m_ + (1.0 - kBeta1) * grad;
        v_ = kBeta2 * v_ + (1.0 - kBeta2) * grad.cwiseAbs2();
        const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
        const double step_size = lr_ / bc1;
        param.array() -= step_size * m_.array() / ((v_.array() / bc2).sqrt() + kEps);
    }

    OptimizerKind kind() const { return kind_; }

private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    OptimizerKind kind_;
    double lr_;
    std::size_t t_ = 0;
    Matrix m_;
    Matrix v_;
};

}  // namespace unlearnrec
