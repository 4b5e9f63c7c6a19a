#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace treid {

// Dense row-major matrix of doubles: the single numeric container for
// weights, activations and gradients. Tests and oracles run at 64-bit;
// the on-disk formats store 32-bit floats.
class Tensor2D {
public:
    Tensor2D() = default;
    Tensor2D(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Tensor2D(std::initializer_list<std::initializer_list<double>> init);

    static Tensor2D from_row(const std::vector<double>& values);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }
    const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    std::vector<double> row_copy(std::size_t r) const;
    void set_row(std::size_t r, const std::vector<double>& values);

    void fill(double value) { data_.assign(data_.size(), value); }
    bool all_finite() const;
    std::string shape_str() const;

    bool operator==(const Tensor2D& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Shape check helper: throws DimensionError naming `what` and both shapes.
void require_same_shape(const Tensor2D& a, const Tensor2D& b, const std::string& what);

// C = A * B
Tensor2D matmul(const Tensor2D& a, const Tensor2D& b);
// C = A * B^T
Tensor2D matmul_nt(const Tensor2D& a, const Tensor2D& b);
// C = A^T * B
Tensor2D matmul_tn(const Tensor2D& a, const Tensor2D& b);

void add_inplace(Tensor2D& a, const Tensor2D& b);
void scale_inplace(Tensor2D& a, double s);
// Adds `row` (1 x cols) to every row of `a`.
void add_row_broadcast(Tensor2D& a, const Tensor2D& row);
// 1 x cols tensor with the column sums of `a`.
Tensor2D column_sums(const Tensor2D& a);

Tensor2D vstack(const Tensor2D& top, const Tensor2D& bottom);
Tensor2D take_rows(const Tensor2D& a, std::size_t begin, std::size_t end);
Tensor2D take_cols(const Tensor2D& a, std::size_t begin, std::size_t end);
void put_cols(Tensor2D& dst, const Tensor2D& src, std::size_t begin);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double l2_norm(const std::vector<double>& v);
double frobenius_norm(const Tensor2D& a);

}  // namespace treid
