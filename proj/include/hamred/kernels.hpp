#pragma once

#include <cmath>
#include <cstdint>

#include "hamred/errors.hpp"

namespace hamred {

enum class ActKind { None, Elu, Tanh, Swish };

inline const char* act_name(ActKind k) {
    switch (k) {
        case ActKind::None: return "none";
        case ActKind::Elu: return "elu";
        case ActKind::Tanh: return "tanh";
        case ActKind::Swish: return "swish";
    }
    return "?";
}

template <typename T>
inline T act_eval(ActKind k, T x) {
    switch (k) {
        case ActKind::None: return x;
        case ActKind::Elu: return x > T(0) ? x : std::expm1(x);
        case ActKind::Tanh: return std::tanh(x);
        case ActKind::Swish: return x / (T(1) + std::exp(-x));
    }
    return x;
}

template <typename T>
inline T act_deriv(ActKind k, T x) {
    switch (k) {
        case ActKind::None: return T(1);
        case ActKind::Elu: return x > T(0) ? T(1) : std::exp(x);
        case ActKind::Tanh: {
            T t = std::tanh(x);
            return T(1) - t * t;
        }
        case ActKind::Swish: {
            T s = T(1) / (T(1) + std::exp(-x));
            return s * (T(1) + x * (T(1) - s));
        }
    }
    return T(1);
}

template <typename T>
inline T act_second(ActKind k, T x) {
    switch (k) {
        case ActKind::None: return T(0);
        case ActKind::Elu: return x > T(0) ? T(0) : std::exp(x);
        case ActKind::Tanh: {
            T t = std::tanh(x);
            return T(-2) * t * (T(1) - t * t);
        }
        case ActKind::Swish: {
            T s = T(1) / (T(1) + std::exp(-x));
            return s * (T(1) - s) * (T(2) + x * (T(1) - T(2) * s));
        }
    }
    return T(0);
}

// ---------------------------------------------------------------------------
// Dense matrix kernels on row-major buffers. All accumulate into `c`.
// ---------------------------------------------------------------------------

// c(m,n) += a(m,k) * b(k,n)
template <typename T>
inline void gemm_ab(T* c, const T* a, const T* b, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        T* ci = c + static_cast<int64_t>(i) * n;
        const T* ai = a + static_cast<int64_t>(i) * k;
        for (int l = 0; l < k; ++l) {
            const T av = ai[l];
            const T* bl = b + static_cast<int64_t>(l) * n;
            for (int j = 0; j < n; ++j) ci[j] += av * bl[j];
        }
    }
}

// c(m,k) += a(m,n) * b(k,n)^T   [row dots of a against rows of b]
template <typename T>
inline void gemm_abT(T* c, const T* a, const T* b, int m, int n, int k) {
    for (int i = 0; i < m; ++i) {
        const T* ai = a + static_cast<int64_t>(i) * n;
        T* ci = c + static_cast<int64_t>(i) * k;
        for (int l = 0; l < k; ++l) {
            const T* bl = b + static_cast<int64_t>(l) * n;
            T acc = T(0);
            for (int j = 0; j < n; ++j) acc += ai[j] * bl[j];
            ci[l] += acc;
        }
    }
}

// c(k,n) += a(m,k)^T * b(m,n)
template <typename T>
inline void gemm_aTb(T* c, const T* a, const T* b, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const T* ai = a + static_cast<int64_t>(i) * k;
        const T* bi = b + static_cast<int64_t>(i) * n;
        for (int l = 0; l < k; ++l) {
            const T av = ai[l];
            T* cl = c + static_cast<int64_t>(l) * n;
            for (int j = 0; j < n; ++j) cl[j] += av * bi[j];
        }
    }
}

// ---------------------------------------------------------------------------
// Periodic 1d cross-correlation, layout (B, C, L) row-major.
// Odd kernels are centered: output j reads input j*stride + t - 1.
// Even kernels are left-aligned: output j reads input j*stride + t.
// ---------------------------------------------------------------------------

inline int conv1d_out_len(int len, int stride) {
    if (len % stride != 0)
        throw DimensionError("conv1d_periodic: length " + std::to_string(len) +
                             " not divisible by stride " + std::to_string(stride));
    return len / stride;
}

template <typename T>
inline void conv1d_periodic_fwd(T* y, const T* x, const T* k, int batch, int cin, int len,
                                int cout, int w, int stride) {
    const int lo = len / stride;
    const int off = (w % 2 == 1) ? w / 2 : 0;
    for (int b = 0; b < batch; ++b) {
        for (int co = 0; co < cout; ++co) {
            T* yr = y + (static_cast<int64_t>(b) * cout + co) * lo;
            for (int ci = 0; ci < cin; ++ci) {
                const T* xr = x + (static_cast<int64_t>(b) * cin + ci) * len;
                for (int t = 0; t < w; ++t) {
                    const T kv = k[(static_cast<int64_t>(co) * cin + ci) * w + t];
                    const int shift = t - off;
                    // wrap-free j range: 0 <= j*stride + shift <= len-1
                    int jlo = shift < 0 ? (-shift + stride - 1) / stride : 0;
                    int jhi = (len - 1 - shift) / stride;
                    if (jhi > lo - 1) jhi = lo - 1;
                    for (int j = 0; j < jlo; ++j) yr[j] += kv * xr[j * stride + shift + len];
                    for (int j = jlo; j <= jhi; ++j) yr[j] += kv * xr[j * stride + shift];
                    for (int j = jhi + 1; j < lo; ++j) yr[j] += kv * xr[j * stride + shift - len];
                }
            }
        }
    }
}

template <typename T>
inline void conv1d_periodic_bwd_x(T* dx, const T* dy, const T* k, int batch, int cin, int len,
                                  int cout, int w, int stride) {
    const int lo = len / stride;
    const int off = (w % 2 == 1) ? w / 2 : 0;
    for (int b = 0; b < batch; ++b) {
        for (int co = 0; co < cout; ++co) {
            const T* dyr = dy + (static_cast<int64_t>(b) * cout + co) * lo;
            for (int ci = 0; ci < cin; ++ci) {
                T* dxr = dx + (static_cast<int64_t>(b) * cin + ci) * len;
                for (int t = 0; t < w; ++t) {
                    const T kv = k[(static_cast<int64_t>(co) * cin + ci) * w + t];
                    const int shift = t - off;
                    int jlo = shift < 0 ? (-shift + stride - 1) / stride : 0;
                    int jhi = (len - 1 - shift) / stride;
                    if (jhi > lo - 1) jhi = lo - 1;
                    for (int j = 0; j < jlo; ++j) dxr[j * stride + shift + len] += kv * dyr[j];
                    for (int j = jlo; j <= jhi; ++j) dxr[j * stride + shift] += kv * dyr[j];
                    for (int j = jhi + 1; j < lo; ++j) dxr[j * stride + shift - len] += kv * dyr[j];
                }
            }
        }
    }
}

template <typename T>
inline void conv1d_periodic_bwd_k(T* dk, const T* dy, const T* x, int batch, int cin, int len,
                                  int cout, int w, int stride) {
    const int lo = len / stride;
    const int off = (w % 2 == 1) ? w / 2 : 0;
    for (int b = 0; b < batch; ++b) {
        for (int co = 0; co < cout; ++co) {
            const T* dyr = dy + (static_cast<int64_t>(b) * cout + co) * lo;
            for (int ci = 0; ci < cin; ++ci) {
                const T* xr = x + (static_cast<int64_t>(b) * cin + ci) * len;
                for (int t = 0; t < w; ++t) {
                    const int shift = t - off;
                    int jlo = shift < 0 ? (-shift + stride - 1) / stride : 0;
                    int jhi = (len - 1 - shift) / stride;
                    if (jhi > lo - 1) jhi = lo - 1;
                    T acc = T(0);
                    for (int j = 0; j < jlo; ++j) acc += dyr[j] * xr[j * stride + shift + len];
                    for (int j = jlo; j <= jhi; ++j) acc += dyr[j] * xr[j * stride + shift];
                    for (int j = jhi + 1; j < lo; ++j) acc += dyr[j] * xr[j * stride + shift - len];
                    dk[(static_cast<int64_t>(co) * cin + ci) * w + t] += acc;
                }
            }
        }
    }
}

}  // namespace hamred
