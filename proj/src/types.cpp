#include "lrukit/types.hpp"

#include <algorithm>
#include <cmath>

namespace lrukit {

ComplexVec::ComplexVec(std::vector<double> re_, std::vector<double> im_)
    : re(std::move(re_)), im(std::move(im_)) {
    require(re.size() == im.size(), "ComplexVec: real and imaginary parts differ in length");
}

double ComplexVec::abs(std::size_t i) const { return std::hypot(re[i], im[i]); }

SequenceBatch::SequenceBatch(std::size_t batch, std::size_t length, std::size_t features, double fill)
    : batch_(batch), length_(length), features_(features), data_(batch * length * features, fill) {}

MatrixMap SequenceBatch::sequence(std::size_t b) {
    return MatrixMap(data_.data() + b * length_ * features_, static_cast<Eigen::Index>(length_),
                     static_cast<Eigen::Index>(features_));
}

ConstMatrixMap SequenceBatch::sequence(std::size_t b) const {
    return ConstMatrixMap(data_.data() + b * length_ * features_, static_cast<Eigen::Index>(length_),
                          static_cast<Eigen::Index>(features_));
}

bool SequenceBatch::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void require(bool condition, const std::string& message) {
    if (!condition) throw InvalidInput(message);
}

}  // namespace lrukit
