#include "risnoma/neural/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <Eigen/Core>
#include <fmt/format.h>

#include "risnoma/errors.hpp"

namespace risnoma::nn {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using Map = Eigen::Map<RowMajor>;

ConstMap view(const Tensor2& t) {
    return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

Map view(Tensor2& t) {
    return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

void require(bool ok, const char* op, const Tensor2& a, const Tensor2& b) {
    if (!ok) {
        throw ShapeError(fmt::format("{}: incompatible shapes {} and {}", op, a.shape_string(), b.shape_string()));
    }
}

}  // namespace

Tensor2::Tensor2(std::size_t rows, std::size_t cols, double fill) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor2::Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ShapeError(fmt::format("Tensor2: {} values for a {}x{} tensor", data_.size(), rows_, cols_));
    }
}

Tensor2 Tensor2::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) {
            throw ShapeError("Tensor2::from_rows: ragged rows");
        }
        data.insert(data.end(), row.begin(), row.end());
    }
    return {r, c, std::move(data)};
}

Tensor2 Tensor2::row(std::span<const double> values) {
    return {1, values.size(), std::vector<double>(values.begin(), values.end())};
}

void Tensor2::fill(double v) {
    std::fill(data_.begin(), data_.end(), v);
}

std::string Tensor2::shape_string() const {
    return fmt::format("{}x{}", rows_, cols_);
}

Tensor2& Tensor2::operator+=(const Tensor2& other) {
    require(same_shape(other), "operator+=", *this, other);
    for (std::size_t i = 0; i < data_.size(); ++i) {
        data_[i] += other.data_[i];
    }
    return *this;
}

Tensor2& Tensor2::operator-=(const Tensor2& other) {
    require(same_shape(other), "operator-=", *this, other);
    for (std::size_t i = 0; i < data_.size(); ++i) {
        data_[i] -= other.data_[i];
    }
    return *this;
}

Tensor2& Tensor2::operator*=(double s) {
    for (auto& v : data_) {
        v *= s;
    }
    return *this;
}

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
    require(a.cols() == b.rows(), "matmul", a, b);
    Tensor2 out(a.rows(), b.cols());
    view(out).noalias() = view(a) * view(b);
    return out;
}

Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b) {
    require(a.cols() == b.cols(), "matmul_nt", a, b);
    Tensor2 out(a.rows(), b.rows());
    view(out).noalias() = view(a) * view(b).transpose();
    return out;
}

Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b) {
    require(a.rows() == b.rows(), "matmul_tn", a, b);
    Tensor2 out(a.cols(), b.cols());
    view(out).noalias() = view(a).transpose() * view(b);
    return out;
}

void add_matmul_tn(Tensor2& out, const Tensor2& a, const Tensor2& b) {
    require(a.rows() == b.rows() && out.rows() == a.cols() && out.cols() == b.cols(), "add_matmul_tn", a, b);
    view(out).noalias() += view(a).transpose() * view(b);
}

void add_row_broadcast(Tensor2& x, const Tensor2& row) {
    require(row.rows() == 1 && row.cols() == x.cols(), "add_row_broadcast", x, row);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto dst = x.row_span(r);
        for (std::size_t c = 0; c < x.cols(); ++c) {
            dst[c] += row(0, c);
        }
    }
}

void add_column_sums(Tensor2& out, const Tensor2& x) {
    require(out.rows() == 1 && out.cols() == x.cols(), "add_column_sums", out, x);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto src = x.row_span(r);
        for (std::size_t c = 0; c < x.cols(); ++c) {
            out(0, c) += src[c];
        }
    }
}

Tensor2 hadamard(const Tensor2& a, const Tensor2& b) {
    require(a.same_shape(b), "hadamard", a, b);
    Tensor2 out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.data()[i] = a.data()[i] * b.data()[i];
    }
    return out;
}

Tensor2 slice_cols(const Tensor2& x, std::size_t first, std::size_t count) {
    if (first + count > x.cols()) {
        throw ShapeError(fmt::format("slice_cols: [{}, {}) out of {} columns", first, first + count, x.cols()));
    }
    Tensor2 out(x.rows(), count);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto src = x.row_span(r);
        std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(first), count, out.row_span(r).begin());
    }
    return out;
}

Tensor2 concat_cols(const Tensor2& a, const Tensor2& b) {
    require(a.rows() == b.rows(), "concat_cols", a, b);
    Tensor2 out(a.rows(), a.cols() + b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        auto dst = out.row_span(r);
        std::copy(a.row_span(r).begin(), a.row_span(r).end(), dst.begin());
        std::copy(b.row_span(r).begin(), b.row_span(r).end(), dst.begin() + static_cast<std::ptrdiff_t>(a.cols()));
    }
    return out;
}

void check_finite(const Tensor2& t, const char* where) {
    for (const double v : t.values()) {
        if (!std::isfinite(v)) {
            throw InvariantViolation(fmt::format("non-finite value in {}", where));
        }
    }
}

}  // namespace risnoma::nn
