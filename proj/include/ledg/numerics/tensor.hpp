#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ledg/numerics/error.hpp"

namespace ledg {

/// Dense row-major tensor of doubles. Every kernel in this library works on
/// rank-2 tensors; scalars are 1x1.
class Tensor {
public:
    Tensor() = default;

    Tensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (count(shape_) != data_.size())
            throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_string(shape_));
    }

    static Tensor zeros(std::size_t rows, std::size_t cols) {
        return Tensor({rows, cols}, std::vector<double>(rows * cols, 0.0));
    }

    static Tensor filled(std::size_t rows, std::size_t cols, double value) {
        return Tensor({rows, cols}, std::vector<double>(rows * cols, value));
    }

    static Tensor scalar(double value) { return Tensor({1, 1}, {value}); }

    static Tensor identity(std::size_t n) {
        Tensor t = zeros(n, n);
        for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
        return t;
    }

    /// Builds a matrix from nested initializer lists, e.g. `Tensor::matrix({{1, 2}, {3, 4}})`.
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows) {
        const std::size_t r = rows.size();
        const std::size_t c = r ? rows.begin()->size() : 0;
        std::vector<double> data;
        data.reserve(r * c);
        for (const auto& row : rows) {
            if (row.size() != c) throw ShapeError("ragged matrix literal");
            data.insert(data.end(), row.begin(), row.end());
        }
        return Tensor({r, c}, std::move(data));
    }

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }

    std::size_t rows() const {
        require_matrix();
        return shape_[0];
    }
    std::size_t cols() const {
        require_matrix();
        return shape_[1];
    }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    /// Value of a 1x1 tensor.
    double item() const {
        if (data_.size() != 1) throw ContractError("item() on tensor of shape " + shape_string(shape_));
        return data_[0];
    }

    bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }

    /// Bitwise equality, so +0.0 and -0.0 differ and NaN payloads compare.
    bool bit_equal(const Tensor& other) const noexcept {
        if (shape_ != other.shape_) return false;
        return std::equal(data_.begin(), data_.end(), other.data_.begin(), [](double a, double b) {
            return std::memcmp(&a, &b, sizeof(double)) == 0;
        });
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;

    std::string shape_str() const { return shape_string(shape_); }

    static std::string shape_string(const std::vector<std::size_t>& shape) {
        std::ostringstream os;
        os << '[';
        for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
        os << ']';
        return os.str();
    }

private:
    static std::size_t count(const std::vector<std::size_t>& shape) {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
    }

    void require_matrix() const {
        if (shape_.size() != 2) throw ShapeError("expected rank-2 tensor, got " + shape_string(shape_));
    }

    std::vector<std::size_t> shape_{0, 0};
    std::vector<double> data_;
};

namespace kernels {

inline void check_same(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

template <class F>
Tensor map(const Tensor& a, F f) {
    Tensor out = a;
    for (double& v : out.data()) v = f(v);
    return out;
}

template <class F>
Tensor zip(const Tensor& a, const Tensor& b, const char* op, F f) {
    check_same(a, b, op);
    Tensor out = a;
    auto o = out.data();
    auto y = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = f(o[i], y[i]);
    return out;
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: inner dimensions differ, " + a.shape_str() + " x " + b.shape_str());
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out = Tensor::zeros(m, n);
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* po = out.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        double* orow = po + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double s = pa[i * k + p];
            if (s == 0.0) continue;
            const double* brow = pb + p * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += s * brow[j];
        }
    }
    return out;
}

inline Tensor transpose(const Tensor& a) {
    const std::size_t r = a.rows(), c = a.cols();
    Tensor out = Tensor::zeros(c, r);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out(j, i) = a(i, j);
    return out;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
    return zip(a, b, "add", [](double x, double y) { return x + y; });
}
inline Tensor sub(const Tensor& a, const Tensor& b) {
    return zip(a, b, "sub", [](double x, double y) { return x - y; });
}
inline Tensor hadamard(const Tensor& a, const Tensor& b) {
    return zip(a, b, "hadamard", [](double x, double y) { return x * y; });
}
inline Tensor scale(const Tensor& a, double c) {
    return map(a, [c](double x) { return c * x; });
}
inline Tensor one_minus(const Tensor& a) {
    return map(a, [](double x) { return 1.0 - x; });
}

/// Logistic function clamped to the open interval (0, 1).
inline double sigmoid_scalar(double x) {
    constexpr double lo = std::numeric_limits<double>::min();
    constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2;
    double y;
    if (x >= 0) {
        y = 1.0 / (1.0 + std::exp(-x));
    } else {
        const double e = std::exp(x);
        y = e / (1.0 + e);
    }
    return std::clamp(y, lo, hi);
}

inline Tensor sigmoid(const Tensor& a) { return map(a, sigmoid_scalar); }
inline Tensor relu(const Tensor& a) {
    return map(a, [](double x) { return x > 0 ? x : 0.0; });
}
inline Tensor leaky_relu(const Tensor& a, double slope) {
    return map(a, [slope](double x) { return x > 0 ? x : slope * x; });
}
inline Tensor log(const Tensor& a) {
    return map(a, [](double x) { return std::log(x); });
}
inline Tensor reciprocal(const Tensor& a) {
    return map(a, [](double x) { return 1.0 / x; });
}
inline Tensor clamp_min(const Tensor& a, double floor) {
    return map(a, [floor](double x) { return x < floor ? floor : x; });
}
inline Tensor smooth_l1(const Tensor& a) {
    return map(a, [](double x) { return std::abs(x) < 1.0 ? 0.5 * x * x : std::abs(x) - 0.5; });
}
inline Tensor clip_unit(const Tensor& a) {
    return map(a, [](double x) { return std::clamp(x, -1.0, 1.0); });
}

/// Row-wise softmax with max subtraction. With a mask, entries where the mask
/// is zero get probability exactly 0 and the row is normalized over the rest.
inline Tensor softmax_rows(const Tensor& a, const Tensor* mask = nullptr) {
    const std::size_t r = a.rows(), c = a.cols();
    if (c == 0) throw ShapeError("softmax_rows: zero columns");
    if (mask) check_same(a, *mask, "softmax_rows mask");
    Tensor out = Tensor::zeros(r, c);
    for (std::size_t i = 0; i < r; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < c; ++j)
            if (!mask || (*mask)(i, j) != 0.0) mx = std::max(mx, a(i, j));
        if (mx == -std::numeric_limits<double>::infinity())
            throw ContractError("softmax_rows: row " + std::to_string(i) + " is fully masked");
        double total = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            if (mask && (*mask)(i, j) == 0.0) continue;
            out(i, j) = std::exp(a(i, j) - mx);
            total += out(i, j);
        }
        for (std::size_t j = 0; j < c; ++j) out(i, j) /= total;
    }
    return out;
}

inline Tensor sum_all(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    return Tensor::scalar(s);
}

inline Tensor broadcast_scalar(const Tensor& s, std::size_t rows, std::size_t cols) {
    return Tensor::filled(rows, cols, s.item());
}

/// Column sums, n x d -> 1 x d.
inline Tensor sum_rows(const Tensor& a) {
    const std::size_t r = a.rows(), c = a.cols();
    Tensor out = Tensor::zeros(1, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out(0, j) += a(i, j);
    return out;
}

/// Repeats a 1 x d row n times.
inline Tensor broadcast_rows(const Tensor& row, std::size_t n) {
    if (row.rows() != 1) throw ShapeError("broadcast_rows: expected one row, got " + row.shape_str());
    const std::size_t c = row.cols();
    Tensor out = Tensor::zeros(n, c);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) out(i, j) = row(0, j);
    return out;
}

/// Row sums, n x c -> n x 1.
inline Tensor row_sum(const Tensor& a) {
    const std::size_t r = a.rows(), c = a.cols();
    Tensor out = Tensor::zeros(r, 1);
    for (std::size_t i = 0; i < r; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += a(i, j);
        out(i, 0) = s;
    }
    return out;
}

/// Repeats an n x 1 column c times.
inline Tensor broadcast_cols(const Tensor& col, std::size_t c) {
    if (col.cols() != 1) throw ShapeError("broadcast_cols: expected one column, got " + col.shape_str());
    const std::size_t r = col.rows();
    Tensor out = Tensor::zeros(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out(i, j) = col(i, 0);
    return out;
}

inline Tensor mean_pool(const Tensor& a) {
    if (a.rows() == 0) throw ContractError("mean_pool: empty graph (zero rows)");
    return scale(sum_rows(a), 1.0 / static_cast<double>(a.rows()));
}

inline Tensor add_row_vector(const Tensor& a, const Tensor& row) {
    if (row.rows() != 1 || row.cols() != a.cols())
        throw ShapeError("add_row_vector: " + a.shape_str() + " + " + row.shape_str());
    Tensor out = a;
    const std::size_t r = a.rows(), c = a.cols();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out(i, j) += row(0, j);
    return out;
}

inline Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index) {
    const std::size_t c = a.cols();
    Tensor out = Tensor::zeros(index.size(), c);
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] >= a.rows()) throw ShapeError("gather_rows: row index out of range");
        for (std::size_t j = 0; j < c; ++j) out(i, j) = a(index[i], j);
    }
    return out;
}

/// Adjoint of gather_rows: out[index[i]] += a[i].
inline Tensor scatter_rows(const Tensor& a, std::span<const std::size_t> index, std::size_t n) {
    if (a.rows() != index.size()) throw ShapeError("scatter_rows: index length differs from rows");
    const std::size_t c = a.cols();
    Tensor out = Tensor::zeros(n, c);
    for (std::size_t i = 0; i < index.size(); ++i)
        for (std::size_t j = 0; j < c; ++j) out(index[i], j) += a(i, j);
    return out;
}

inline Tensor concat_cols(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows()) throw ShapeError("concat_cols: " + a.shape_str() + " | " + b.shape_str());
    const std::size_t r = a.rows(), ca = a.cols(), cb = b.cols();
    Tensor out = Tensor::zeros(r, ca + cb);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < ca; ++j) out(i, j) = a(i, j);
        for (std::size_t j = 0; j < cb; ++j) out(i, ca + j) = b(i, j);
    }
    return out;
}

inline Tensor slice_cols(const Tensor& a, std::size_t offset, std::size_t width) {
    if (offset + width > a.cols()) throw ShapeError("slice_cols: range exceeds " + a.shape_str());
    const std::size_t r = a.rows();
    Tensor out = Tensor::zeros(r, width);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < width; ++j) out(i, j) = a(i, offset + j);
    return out;
}

/// Adjoint of slice_cols: places `a` at column `offset` of a zero matrix with `total` columns.
inline Tensor pad_cols(const Tensor& a, std::size_t offset, std::size_t total) {
    if (offset + a.cols() > total) throw ShapeError("pad_cols: range exceeds target width");
    const std::size_t r = a.rows(), w = a.cols();
    Tensor out = Tensor::zeros(r, total);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < w; ++j) out(i, offset + j) = a(i, j);
    return out;
}

/// Picks a[i, column[i]] into an n x 1 column.
inline Tensor pick_entries(const Tensor& a, std::span<const std::size_t> column) {
    if (a.rows() != column.size()) throw ShapeError("pick_entries: one column index per row required");
    Tensor out = Tensor::zeros(a.rows(), 1);
    for (std::size_t i = 0; i < column.size(); ++i) {
        if (column[i] >= a.cols()) throw ShapeError("pick_entries: column index out of range");
        out(i, 0) = a(i, column[i]);
    }
    return out;
}

/// Adjoint of pick_entries.
inline Tensor scatter_entries(const Tensor& a, std::span<const std::size_t> column, std::size_t cols) {
    if (a.cols() != 1 || a.rows() != column.size())
        throw ShapeError("scatter_entries: expected n x 1 input matching the index");
    Tensor out = Tensor::zeros(a.rows(), cols);
    for (std::size_t i = 0; i < column.size(); ++i) out(i, column[i]) = a(i, 0);
    return out;
}

}  // namespace kernels

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    kernels::check_same(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double l2_norm(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

}  // namespace ledg
