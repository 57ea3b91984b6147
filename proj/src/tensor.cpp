#include "fervit/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "fervit/errors.hpp"

namespace fervit {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_numel(shape_))
        raise(Errc::shape_mismatch, "tensor data size does not match shape " + shape_str());
}

std::string Tensor::shape_str() const {
    std::ostringstream oss;
    oss << "(";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) oss << ",";
        oss << shape_[i];
    }
    oss << ")";
    return oss.str();
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor& Tensor::operator+=(const Tensor& other) {
    if (!same_shape(other))
        raise(Errc::shape_mismatch, "operator+= " + shape_str() + " vs " + other.shape_str());
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Tensor& Tensor::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        raise(Errc::shape_mismatch, "matmul " + a.shape_str() + " x " + b.shape_str());
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor c({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a.at(i, p);
            if (av == 0.0) continue;
            const double* brow = b.data() + p * n;
            double* crow = c.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

} // namespace fervit
