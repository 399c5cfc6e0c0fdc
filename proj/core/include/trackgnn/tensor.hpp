#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace trackgnn {

// Dense row-major matrix. Equality is element-exact, which for Fx elements
// means raw-bit equality.
template <typename T>
class Mat {
public:
    Mat() = default;
    Mat(int rows, int cols, T init = T{})
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, init) {
        if (rows < 0 || cols < 0) throw std::invalid_argument("Mat: negative shape");
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    T& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    const T& operator()(int r, int c) const {
        return data_[static_cast<std::size_t>(r) * cols_ + c];
    }

    std::span<T> row(int r) { return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)}; }
    std::span<const T> row(int r) const {
        return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
    }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    friend bool operator==(const Mat&, const Mat&) = default;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> data_;
};

}  // namespace trackgnn
