#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hfit {

/// Dense row-major matrix of doubles; rows are samples.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows)
        , cols_(cols)
        , data_(rows * cols, fill)
    {
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept
    {
        return { data_.data() + i * cols_, cols_ };
    }
    [[nodiscard]] std::span<double> row(std::size_t i) noexcept { return { data_.data() + i * cols_, cols_ }; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    void append_row(std::span<const double> values)
    {
        if (rows_ == 0 && cols_ == 0) {
            cols_ = values.size();
        }
        data_.insert(data_.end(), values.begin(), values.end());
        ++rows_;
    }

    [[nodiscard]] const std::vector<double>& data() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

} // namespace hfit
