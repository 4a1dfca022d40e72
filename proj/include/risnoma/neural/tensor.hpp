#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace risnoma::nn {

/// Dense row-major matrix of doubles. Rows index the batch wherever a tensor
/// carries activations.
class Tensor2 {
public:
    Tensor2() = default;
    Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0);
    Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Tensor2 from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor2 row(std::span<const double> values);

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }
    [[nodiscard]] std::size_t size() const { return data_.size(); }
    [[nodiscard]] bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    [[nodiscard]] std::span<double> values() { return data_; }
    [[nodiscard]] std::span<const double> values() const { return data_; }
    [[nodiscard]] std::span<const double> row_span(std::size_t r) const {
        return std::span<const double>(data_).subspan(r * cols_, cols_);
    }
    [[nodiscard]] std::span<double> row_span(std::size_t r) {
        return std::span<double>(data_).subspan(r * cols_, cols_);
    }
    double* data() { return data_.data(); }
    [[nodiscard]] const double* data() const { return data_.data(); }

    void fill(double v);
    [[nodiscard]] bool same_shape(const Tensor2& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    [[nodiscard]] std::string shape_string() const;

    Tensor2& operator+=(const Tensor2& other);
    Tensor2& operator-=(const Tensor2& other);
    Tensor2& operator*=(double s);

    bool operator==(const Tensor2& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// a * b
Tensor2 matmul(const Tensor2& a, const Tensor2& b);
/// a * b^T
Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b);
/// a^T * b
Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b);

/// out += a^T * b (gradient accumulation without a temporary).
void add_matmul_tn(Tensor2& out, const Tensor2& a, const Tensor2& b);

/// Adds the (1 x cols) row vector to every row.
void add_row_broadcast(Tensor2& x, const Tensor2& row);
/// Column sums as a (1 x cols) tensor, accumulated into `out`.
void add_column_sums(Tensor2& out, const Tensor2& x);

Tensor2 hadamard(const Tensor2& a, const Tensor2& b);

/// Columns [first, first + count) of x.
Tensor2 slice_cols(const Tensor2& x, std::size_t first, std::size_t count);
/// [a | b]
Tensor2 concat_cols(const Tensor2& a, const Tensor2& b);

/// Throws InvariantViolation naming `where` if any entry is NaN or infinite.
void check_finite(const Tensor2& t, const char* where);

}  // namespace risnoma::nn
