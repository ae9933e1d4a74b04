#ifndef MALGRID_KERNELS_HPP
#define MALGRID_KERNELS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

// Layer compute kernels in two flavors: kernels::serial is the plain
// reference, kernels::parallel adds OpenMP worksharing over independent
// output elements. Both call the same per-element routines and accumulate
// in the same order, so their results are bitwise identical for any
// thread count. Layouts are HWC for activations, [ky][kx][cin][cout] for
// convolution weights, [nin][nout] for dense weights.

namespace malgrid::kernels {

namespace detail {

// out_row[f] = bias[f] + sum_{dy,dx,c} in[y+dy, x+dx, c] * kern[dy,dx,c,f]
template <typename T>
inline void conv_fwd_cell(const T* __restrict in, int w, int cin,
                          const T* __restrict kern, int cout,
                          const T* __restrict bias, int y, int x,
                          T* __restrict out_row) {
    for (int f = 0; f < cout; ++f) out_row[f] = bias[f];
    for (int dy = 0; dy < 3; ++dy) {
        for (int dx = 0; dx < 3; ++dx) {
            const T* row = in + (static_cast<std::size_t>(y + dy) * w + (x + dx)) * cin;
            const T* kr = kern + static_cast<std::size_t>(dy * 3 + dx) * cin * cout;
            for (int c = 0; c < cin; ++c) {
                const T v = row[c];
                const T* kc = kr + static_cast<std::size_t>(c) * cout;
                for (int f = 0; f < cout; ++f) out_row[f] += v * kc[f];
            }
        }
    }
}

// din_row[c] = sum_{dy,dx,f} kern[dy,dx,c,f] * dout[iy-dy, ix-dx, f],
// reading the kernel through its [ky][kx][cout][cin] transpose.
template <typename T>
inline void conv_din_cell(const T* __restrict kern_t, const T* __restrict dout,
                          int oh, int ow, int cin, int cout, int iy, int ix,
                          T* __restrict din_row) {
    for (int c = 0; c < cin; ++c) din_row[c] = T(0);
    for (int dy = 0; dy < 3; ++dy) {
        const int oy = iy - dy;
        if (oy < 0 || oy >= oh) continue;
        for (int dx = 0; dx < 3; ++dx) {
            const int ox = ix - dx;
            if (ox < 0 || ox >= ow) continue;
            const T* drow = dout + (static_cast<std::size_t>(oy) * ow + ox) * cout;
            const T* kt = kern_t + static_cast<std::size_t>(dy * 3 + dx) * cout * cin;
            for (int f = 0; f < cout; ++f) {
                const T d = drow[f];
                const T* kc = kt + static_cast<std::size_t>(f) * cin;
                for (int c = 0; c < cin; ++c) din_row[c] += d * kc[c];
            }
        }
    }
}

// dk_row[f] = sum_{y,x} in[y+dy, x+dx, c] * dout[y, x, f]
template <typename T>
inline void conv_dk_row(const T* __restrict in, int w, int cin,
                        const T* __restrict dout, int oh, int ow, int cout,
                        int dy, int dx, int c, T* __restrict dk_row) {
    for (int f = 0; f < cout; ++f) dk_row[f] = T(0);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            const T v = in[(static_cast<std::size_t>(y + dy) * w + (x + dx)) * cin + c];
            const T* drow = dout + (static_cast<std::size_t>(y) * ow + x) * cout;
            for (int f = 0; f < cout; ++f) dk_row[f] += v * drow[f];
        }
    }
}

template <typename T>
inline T conv_dbias_one(const T* __restrict dout, int oh, int ow, int cout, int f) {
    T acc = T(0);
    for (int i = 0; i < oh * ow; ++i) acc += dout[static_cast<std::size_t>(i) * cout + f];
    return acc;
}

template <typename T>
inline void pool_fwd_cell(const T* __restrict in, int w, int c, int oy, int ox,
                          T* __restrict out_row, std::int32_t* __restrict arg_row) {
    for (int ch = 0; ch < c; ++ch) {
        // Ties go to the first element in row-major window order.
        std::size_t best = (static_cast<std::size_t>(2 * oy) * w + 2 * ox) * c + ch;
        T best_v = in[best];
        for (int py = 0; py < 2; ++py) {
            for (int px = 0; px < 2; ++px) {
                const std::size_t idx =
                    (static_cast<std::size_t>(2 * oy + py) * w + (2 * ox + px)) * c + ch;
                if (in[idx] > best_v) {
                    best_v = in[idx];
                    best = idx;
                }
            }
        }
        out_row[ch] = best_v;
        arg_row[ch] = static_cast<std::int32_t>(best);
    }
}

// out[j] = bias[j] + sum_i in[i] * w[i,j] for j in [j0, j1); the i loop
// is outermost so each out[j] accumulates in ascending-i order no matter
// how the j range is carved up.
template <typename T>
inline void dense_fwd_block(const T* __restrict in, int nin, const T* __restrict w,
                            int nout, const T* __restrict bias, T* __restrict out,
                            int j0, int j1) {
    for (int j = j0; j < j1; ++j) out[j] = bias[j];
    for (int i = 0; i < nin; ++i) {
        const T v = in[i];
        const T* row = w + static_cast<std::size_t>(i) * nout;
        for (int j = j0; j < j1; ++j) out[j] += v * row[j];
    }
}

// din[i] = sum_j w[i,j] * dout[j], summed as four contiguous block sums
// combined pairwise (fixed order, shorter dependency chains).
template <typename T>
inline T dense_din_one(const T* __restrict w, int nout, const T* __restrict dout, int i) {
    const T* row = w + static_cast<std::size_t>(i) * nout;
    const int q = nout / 4;
    T s0 = T(0), s1 = T(0), s2 = T(0), s3 = T(0);
    for (int j = 0; j < q; ++j) s0 += row[j] * dout[j];
    for (int j = q; j < 2 * q; ++j) s1 += row[j] * dout[j];
    for (int j = 2 * q; j < 3 * q; ++j) s2 += row[j] * dout[j];
    for (int j = 3 * q; j < nout; ++j) s3 += row[j] * dout[j];
    return (s0 + s1) + (s2 + s3);
}

template <typename T>
inline std::vector<T> transpose_kernel(const T* kern, int cin, int cout) {
    std::vector<T> kern_t(static_cast<std::size_t>(9) * cin * cout);
    for (int k = 0; k < 9; ++k) {
        const T* src = kern + static_cast<std::size_t>(k) * cin * cout;
        T* dst = kern_t.data() + static_cast<std::size_t>(k) * cout * cin;
        for (int c = 0; c < cin; ++c)
            for (int f = 0; f < cout; ++f)
                dst[static_cast<std::size_t>(f) * cin + c] = src[static_cast<std::size_t>(c) * cout + f];
    }
    return kern_t;
}

}  // namespace detail

namespace serial {

template <typename T>
void conv2d_forward(const T* in, int h, int w, int cin, const T* kern, int cout,
                    const T* bias, T* out) {
    const int oh = h - 2, ow = w - 2;
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x)
            detail::conv_fwd_cell(in, w, cin, kern, cout, bias, y, x,
                                  out + (static_cast<std::size_t>(y) * ow + x) * cout);
}

template <typename T>
void conv2d_backward_input(const T* kern, int cin, int cout, const T* dout, int oh,
                           int ow, T* din, int h, int w) {
    const std::vector<T> kern_t = detail::transpose_kernel(kern, cin, cout);
    for (int iy = 0; iy < h; ++iy)
        for (int ix = 0; ix < w; ++ix)
            detail::conv_din_cell(kern_t.data(), dout, oh, ow, cin, cout, iy, ix,
                                  din + (static_cast<std::size_t>(iy) * w + ix) * cin);
}

template <typename T>
void conv2d_backward_params(const T* in, int h, int w, int cin, const T* dout,
                            int cout, T* dk, T* dbias) {
    const int oh = h - 2, ow = w - 2;
    for (int k = 0; k < 9 * cin; ++k) {
        const int dy = k / (3 * cin), dx = (k / cin) % 3, c = k % cin;
        detail::conv_dk_row(in, w, cin, dout, oh, ow, cout, dy, dx, c,
                            dk + static_cast<std::size_t>(k) * cout);
    }
    for (int f = 0; f < cout; ++f) dbias[f] = detail::conv_dbias_one(dout, oh, ow, cout, f);
}

template <typename T>
void maxpool2_forward(const T* in, int h, int w, int c, T* out, std::int32_t* argmax) {
    const int oh = h / 2, ow = w / 2;
    for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
            const std::size_t o = (static_cast<std::size_t>(oy) * ow + ox) * c;
            detail::pool_fwd_cell(in, w, c, oy, ox, out + o, argmax + o);
        }
}

template <typename T>
void maxpool2_backward(const std::int32_t* argmax, std::size_t n_out, const T* dout,
                       T* din, std::size_t n_in) {
    std::fill(din, din + n_in, T(0));
    for (std::size_t i = 0; i < n_out; ++i) din[argmax[i]] += dout[i];
}

template <typename T>
void dense_forward(const T* in, int nin, const T* w, int nout, const T* bias, T* out) {
    detail::dense_fwd_block(in, nin, w, nout, bias, out, 0, nout);
}

template <typename T>
void dense_backward(const T* in, int nin, const T* w, int nout, const T* dout,
                    T* din, T* dw, T* dbias) {
    if (din) {
        for (int i = 0; i < nin; ++i) din[i] = detail::dense_din_one(w, nout, dout, i);
    }
    for (int i = 0; i < nin; ++i) {
        const T v = in[i];
        T* dwr = dw + static_cast<std::size_t>(i) * nout;
        for (int j = 0; j < nout; ++j) dwr[j] = v * dout[j];
    }
    for (int j = 0; j < nout; ++j) dbias[j] = dout[j];
}

template <typename T>
void relu_forward(const T* in, std::size_t n, T* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > T(0) ? in[i] : T(0);
}

template <typename T>
void relu_backward(const T* in, const T* dout, std::size_t n, T* din) {
    for (std::size_t i = 0; i < n; ++i) din[i] = in[i] > T(0) ? dout[i] : T(0);
}

}  // namespace serial

namespace parallel {

template <typename T>
void conv2d_forward(const T* in, int h, int w, int cin, const T* kern, int cout,
                    const T* bias, T* out) {
    const int oh = h - 2, ow = w - 2;
#pragma omp parallel for collapse(2) schedule(static)
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x)
            detail::conv_fwd_cell(in, w, cin, kern, cout, bias, y, x,
                                  out + (static_cast<std::size_t>(y) * ow + x) * cout);
}

template <typename T>
void conv2d_backward_input(const T* kern, int cin, int cout, const T* dout, int oh,
                           int ow, T* din, int h, int w) {
    const std::vector<T> kern_t = detail::transpose_kernel(kern, cin, cout);
    const T* kt = kern_t.data();
#pragma omp parallel for collapse(2) schedule(static)
    for (int iy = 0; iy < h; ++iy)
        for (int ix = 0; ix < w; ++ix)
            detail::conv_din_cell(kt, dout, oh, ow, cin, cout, iy, ix,
                                  din + (static_cast<std::size_t>(iy) * w + ix) * cin);
}

template <typename T>
void conv2d_backward_params(const T* in, int h, int w, int cin, const T* dout,
                            int cout, T* dk, T* dbias) {
    const int oh = h - 2, ow = w - 2;
#pragma omp parallel for schedule(static)
    for (int k = 0; k < 9 * cin; ++k) {
        const int dy = k / (3 * cin), dx = (k / cin) % 3, c = k % cin;
        detail::conv_dk_row(in, w, cin, dout, oh, ow, cout, dy, dx, c,
                            dk + static_cast<std::size_t>(k) * cout);
    }
#pragma omp parallel for schedule(static)
    for (int f = 0; f < cout; ++f) dbias[f] = detail::conv_dbias_one(dout, oh, ow, cout, f);
}

template <typename T>
void maxpool2_forward(const T* in, int h, int w, int c, T* out, std::int32_t* argmax) {
    const int oh = h / 2, ow = w / 2;
#pragma omp parallel for collapse(2) schedule(static)
    for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
            const std::size_t o = (static_cast<std::size_t>(oy) * ow + ox) * c;
            detail::pool_fwd_cell(in, w, c, oy, ox, out + o, argmax + o);
        }
}

template <typename T>
void maxpool2_backward(const std::int32_t* argmax, std::size_t n_out, const T* dout,
                       T* din, std::size_t n_in) {
    std::fill(din, din + n_in, T(0));
    // Pool windows are disjoint, so argmax targets never collide.
    const std::int64_t n = static_cast<std::int64_t>(n_out);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i)
        din[argmax[static_cast<std::size_t>(i)]] += dout[static_cast<std::size_t>(i)];
}

template <typename T>
void dense_forward(const T* in, int nin, const T* w, int nout, const T* bias, T* out) {
    // Partitioning the j range is safe: out[j] accumulates in ascending-i
    // order inside any block, so the split points do not affect results.
#ifdef _OPENMP
#pragma omp parallel
    {
        const int nt = omp_get_num_threads();
        const int tid = omp_get_thread_num();
        const int per = (nout + nt - 1) / nt;
        const int j0 = std::min(nout, tid * per);
        const int j1 = std::min(nout, j0 + per);
        if (j0 < j1) detail::dense_fwd_block(in, nin, w, nout, bias, out, j0, j1);
    }
#else
    detail::dense_fwd_block(in, nin, w, nout, bias, out, 0, nout);
#endif
}

template <typename T>
void dense_backward(const T* in, int nin, const T* w, int nout, const T* dout,
                    T* din, T* dw, T* dbias) {
    if (din) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < nin; ++i) din[i] = detail::dense_din_one(w, nout, dout, i);
    }
#pragma omp parallel for schedule(static)
    for (int i = 0; i < nin; ++i) {
        const T v = in[i];
        T* dwr = dw + static_cast<std::size_t>(i) * nout;
        for (int j = 0; j < nout; ++j) dwr[j] = v * dout[j];
    }
#pragma omp parallel for schedule(static)
    for (int j = 0; j < nout; ++j) dbias[j] = dout[j];
}

template <typename T>
void relu_forward(const T* in, std::size_t n, T* out) {
    const std::int64_t nn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < nn; ++i)
        out[i] = in[i] > T(0) ? in[i] : T(0);
}

template <typename T>
void relu_backward(const T* in, const T* dout, std::size_t n, T* din) {
    const std::int64_t nn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < nn; ++i)
        din[i] = in[i] > T(0) ? dout[i] : T(0);
}

}  // namespace parallel

// Numerically stable softmax; probabilities are non-negative and sum to
// one up to rounding. Vectors here are tiny (one entry per class), so
// there is no parallel flavor.
template <typename T>
void softmax(const T* logits, int n, T* probs) {
    T m = logits[0];
    for (int i = 1; i < n; ++i) m = std::max(m, logits[i]);
    T sum = T(0);
    for (int i = 0; i < n; ++i) {
        probs[i] = std::exp(logits[i] - m);
        sum += probs[i];
    }
    for (int i = 0; i < n; ++i) probs[i] /= sum;
}

}  // namespace malgrid::kernels

#endif
