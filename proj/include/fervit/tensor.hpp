#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace fervit {

// Dense row-major double tensor. All learnable state and autodiff math run in
// double precision; images stay float until they enter the model.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, double fill);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<std::size_t> shape, double v) { return Tensor(std::move(shape), v); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
    double& at(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    std::string shape_str() const;

    void fill(double v);
    void zero() { fill(0.0); }

    Tensor& operator+=(const Tensor& other);
    Tensor& operator*=(double s);

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);

// C = A (m,k) * B (k,n)
Tensor matmul(const Tensor& a, const Tensor& b);

} // namespace fervit
