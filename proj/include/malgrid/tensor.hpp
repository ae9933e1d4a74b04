#ifndef MALGRID_TENSOR_HPP
#define MALGRID_TENSOR_HPP

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace malgrid {

// Dense row-major n-dimensional array. The one value type shared by
// images, activations, weights and gradients. No broadcasting, no views:
// every shape mismatch is an error.
template <typename T>
class TensorT {
public:
    TensorT() = default;

    TensorT(std::vector<int> shape, std::vector<T> values)
        : shape_(std::move(shape)), data_(std::move(values)) {
        validate_shape(shape_);
        const std::size_t want = element_count(shape_);
        if (data_.size() != want) {
            std::ostringstream os;
            os << "tensor length mismatch: shape " << shape_string(shape_)
               << " wants " << want << " values, got " << data_.size();
            throw std::invalid_argument(os.str());
        }
        for (const T& v : data_) {
            if (!std::isfinite(static_cast<double>(v)))
                throw std::invalid_argument("tensor values must be finite");
        }
    }

    static TensorT zeros(std::vector<int> shape) {
        validate_shape(shape);
        TensorT t;
        t.data_.assign(element_count(shape), T(0));
        t.shape_ = std::move(shape);
        return t;
    }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    T& at(int i) { return data_[flat({i})]; }
    T& at(int i, int j) { return data_[flat({i, j})]; }
    T& at(int i, int j, int k) { return data_[flat({i, j, k})]; }
    T& at(int i, int j, int k, int l) { return data_[flat({i, j, k, l})]; }
    const T& at(int i) const { return data_[flat({i})]; }
    const T& at(int i, int j) const { return data_[flat({i, j})]; }
    const T& at(int i, int j, int k) const { return data_[flat({i, j, k})]; }
    const T& at(int i, int j, int k, int l) const { return data_[flat({i, j, k, l})]; }

    bool same_shape(const TensorT& other) const { return shape_ == other.shape_; }

    static std::string shape_string(const std::vector<int>& s) {
        std::string out = "[";
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i) out += ",";
            out += std::to_string(s[i]);
        }
        return out + "]";
    }

    static std::size_t element_count(const std::vector<int>& shape) {
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        return n;
    }

private:
    static void validate_shape(const std::vector<int>& shape) {
        if (shape.empty()) throw std::invalid_argument("tensor shape must be non-empty");
        for (int d : shape) {
            if (d < 1) throw std::invalid_argument("tensor dimensions must be >= 1");
        }
    }

    std::size_t flat(std::initializer_list<int> idx) const {
        std::size_t off = 0;
        std::size_t axis = 0;
        for (int i : idx) {
            off = off * static_cast<std::size_t>(shape_[axis]) + static_cast<std::size_t>(i);
            ++axis;
        }
        return off;
    }

    std::vector<int> shape_;
    std::vector<T> data_;
};

using Tensor = TensorT<float>;

template <typename T>
TensorT<T> tensor_from(std::vector<int> shape, std::vector<T> values) {
    return TensorT<T>(std::move(shape), std::move(values));
}

inline Tensor tensor_from(std::vector<int> shape, std::vector<float> values) {
    return Tensor(std::move(shape), std::move(values));
}

// Same data, new shape. Element counts must agree; no reordering.
template <typename T>
TensorT<T> reshape(const TensorT<T>& t, std::vector<int> new_shape) {
    const std::size_t want = TensorT<T>::element_count(new_shape);
    if (new_shape.empty() || want != t.size()) {
        std::ostringstream os;
        os << "reshape element count mismatch: "
           << TensorT<T>::shape_string(t.shape()) << " (" << t.size() << " elements) -> "
           << TensorT<T>::shape_string(new_shape) << " (" << want << " elements)";
        throw std::invalid_argument(os.str());
    }
    return TensorT<T>(std::move(new_shape), std::vector<T>(t.data(), t.data() + t.size()));
}

// Plain rank-2 matrix product, c[i,j] = sum_k a[i,k] * b[k,j].
template <typename T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        std::ostringstream os;
        os << "matmul shape mismatch: " << TensorT<T>::shape_string(a.shape())
           << " x " << TensorT<T>::shape_string(b.shape());
        throw std::invalid_argument(os.str());
    }
    const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    TensorT<T> c = TensorT<T>::zeros({m, n});
    for (int i = 0; i < m; ++i) {
        for (int kk = 0; kk < k; ++kk) {
            const T v = a[static_cast<std::size_t>(i) * k + kk];
            const T* brow = b.data() + static_cast<std::size_t>(kk) * n;
            T* crow = c.data() + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) crow[j] += v * brow[j];
        }
    }
    return c;
}

// Per-row index of the maximum element; ties go to the lowest index.
template <typename T>
std::vector<int> argmax_last_axis(const TensorT<T>& t) {
    if (t.rank() != 2)
        throw std::invalid_argument("argmax_last_axis expects a rank-2 tensor, got " +
                                    TensorT<T>::shape_string(t.shape()));
    const int rows = t.dim(0), cols = t.dim(1);
    std::vector<int> out(static_cast<std::size_t>(rows));
    for (int i = 0; i < rows; ++i) {
        const T* row = t.data() + static_cast<std::size_t>(i) * cols;
        int best = 0;
        for (int j = 1; j < cols; ++j) {
            if (row[j] > row[best]) best = j;
        }
        out[static_cast<std::size_t>(i)] = best;
    }
    return out;
}

}  // namespace malgrid

#endif
