#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lrukit {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using DenseMatrix = RowMatrix;
using Vector = Eigen::VectorXd;

using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

/// Bad arguments, shapes or configuration. The CLI maps this to exit code 1.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// NaN, overflow or divergence during a computation. The CLI maps this to exit code 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Complex vector stored as two real arrays.
struct ComplexVec {
    std::vector<double> re;
    std::vector<double> im;

    ComplexVec() = default;
    explicit ComplexVec(std::size_t n, double re_fill = 0.0, double im_fill = 0.0)
        : re(n, re_fill), im(n, im_fill) {}
    ComplexVec(std::vector<double> re_, std::vector<double> im_);

    std::size_t size() const { return re.size(); }
    double abs(std::size_t i) const;
};

/// Complex matrix stored as real and imaginary parts.
struct ComplexMatrix {
    RowMatrix re;
    RowMatrix im;

    ComplexMatrix() = default;
    ComplexMatrix(Eigen::Index rows, Eigen::Index cols)
        : re(RowMatrix::Zero(rows, cols)), im(RowMatrix::Zero(rows, cols)) {}

    Eigen::Index rows() const { return re.rows(); }
    Eigen::Index cols() const { return re.cols(); }
};

/// Real tensor shaped (batch, length, features), row-major.
class SequenceBatch {
public:
    SequenceBatch() = default;
    SequenceBatch(std::size_t batch, std::size_t length, std::size_t features, double fill = 0.0);

    std::size_t batch() const { return batch_; }
    std::size_t length() const { return length_; }
    std::size_t features() const { return features_; }
    std::size_t size() const { return data_.size(); }

    double& at(std::size_t b, std::size_t k, std::size_t f) {
        return data_[(b * length_ + k) * features_ + f];
    }
    double at(std::size_t b, std::size_t k, std::size_t f) const {
        return data_[(b * length_ + k) * features_ + f];
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    /// (length x features) view of one sequence.
    MatrixMap sequence(std::size_t b);
    ConstMatrixMap sequence(std::size_t b) const;

    bool all_finite() const;

private:
    std::size_t batch_ = 0;
    std::size_t length_ = 0;
    std::size_t features_ = 0;
    std::vector<double> data_;
};

void require(bool condition, const std::string& message);

}  // namespace lrukit
