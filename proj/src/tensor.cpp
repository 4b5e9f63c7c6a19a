#include "treid/tensor.hpp"

#include <cmath>
#include <sstream>

#include "treid/errors.hpp"

namespace treid {

Tensor2D::Tensor2D(std::initializer_list<std::initializer_list<double>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& row : init) {
        if (row.size() != cols_) throw DimensionError("Tensor2D: ragged initializer");
        data_.insert(data_.end(), row.begin(), row.end());
    }
}

Tensor2D Tensor2D::from_row(const std::vector<double>& values) {
    Tensor2D t(1, values.size());
    t.data_ = values;
    return t;
}

std::vector<double> Tensor2D::row_copy(std::size_t r) const {
    return std::vector<double>(row_ptr(r), row_ptr(r) + cols_);
}

void Tensor2D::set_row(std::size_t r, const std::vector<double>& values) {
    if (values.size() != cols_) {
        throw DimensionError("set_row: got " + std::to_string(values.size()) +
                             " values for " + std::to_string(cols_) + " columns");
    }
    std::copy(values.begin(), values.end(), row_ptr(r));
}

bool Tensor2D::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Tensor2D::shape_str() const {
    std::ostringstream os;
    os << rows_ << "x" << cols_;
    return os.str();
}

void require_same_shape(const Tensor2D& a, const Tensor2D& b, const std::string& what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(what + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    }
}

Tensor2D matmul(const Tensor2D& a, const Tensor2D& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: inner dimensions disagree, " + a.shape_str() +
                             " * " + b.shape_str());
    }
    Tensor2D c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* crow = c.row_ptr(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            const double* brow = b.row_ptr(k);
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

Tensor2D matmul_nt(const Tensor2D& a, const Tensor2D& b) {
    if (a.cols() != b.cols()) {
        throw DimensionError("matmul_nt: inner dimensions disagree, " + a.shape_str() +
                             " * " + b.shape_str() + "^T");
    }
    Tensor2D c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row_ptr(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* brow = b.row_ptr(j);
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += arow[k] * brow[k];
            c(i, j) = s;
        }
    }
    return c;
}

Tensor2D matmul_tn(const Tensor2D& a, const Tensor2D& b) {
    if (a.rows() != b.rows()) {
        throw DimensionError("matmul_tn: inner dimensions disagree, " + a.shape_str() +
                             "^T * " + b.shape_str());
    }
    Tensor2D c(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const double* arow = a.row_ptr(k);
        const double* brow = b.row_ptr(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = arow[i];
            double* crow = c.row_ptr(i);
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aki * brow[j];
        }
    }
    return c;
}

void add_inplace(Tensor2D& a, const Tensor2D& b) {
    require_same_shape(a, b, "add");
    for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] += b.data()[i];
}

void scale_inplace(Tensor2D& a, double s) {
    for (double& v : a.data()) v *= s;
}

void add_row_broadcast(Tensor2D& a, const Tensor2D& row) {
    if (row.rows() != 1 || row.cols() != a.cols()) {
        throw DimensionError("add_row_broadcast: row " + row.shape_str() + " vs " + a.shape_str());
    }
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* arow = a.row_ptr(i);
        const double* r = row.row_ptr(0);
        for (std::size_t j = 0; j < a.cols(); ++j) arow[j] += r[j];
    }
}

Tensor2D column_sums(const Tensor2D& a) {
    Tensor2D s(1, a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row_ptr(i);
        for (std::size_t j = 0; j < a.cols(); ++j) s(0, j) += arow[j];
    }
    return s;
}

Tensor2D vstack(const Tensor2D& top, const Tensor2D& bottom) {
    if (top.cols() != bottom.cols()) {
        throw DimensionError("vstack: " + top.shape_str() + " vs " + bottom.shape_str());
    }
    Tensor2D out(top.rows() + bottom.rows(), top.cols());
    std::copy(top.data().begin(), top.data().end(), out.data().begin());
    std::copy(bottom.data().begin(), bottom.data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(top.size()));
    return out;
}

Tensor2D take_rows(const Tensor2D& a, std::size_t begin, std::size_t end) {
    Tensor2D out(end - begin, a.cols());
    std::copy(a.row_ptr(begin), a.row_ptr(begin) + (end - begin) * a.cols(),
              out.data().begin());
    return out;
}

Tensor2D take_cols(const Tensor2D& a, std::size_t begin, std::size_t end) {
    Tensor2D out(a.rows(), end - begin);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row_ptr(i);
        std::copy(arow + begin, arow + end, out.row_ptr(i));
    }
    return out;
}

void put_cols(Tensor2D& dst, const Tensor2D& src, std::size_t begin) {
    for (std::size_t i = 0; i < src.rows(); ++i) {
        std::copy(src.row_ptr(i), src.row_ptr(i) + src.cols(), dst.row_ptr(i) + begin);
    }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double l2_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double frobenius_norm(const Tensor2D& a) {
    double s = 0.0;
    for (double x : a.data()) s += x * x;
    return std::sqrt(s);
}

}  // namespace treid
