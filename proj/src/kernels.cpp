#include "pqadv/kernels.hpp"

#include <algorithm>
#include <cstring>

namespace pqadv::kernels {

namespace {

// Valid output range [t_lo, t_hi) for one kernel tap: positions t where
// t*stride + dk - pad lands inside [0, lin).
inline void tap_bounds(int lout, int stride, int dk, int pad, int lin, int& t_lo, int& t_hi) {
  // t*stride + dk - pad >= 0  and  < lin
  const int off = dk - pad;
  t_lo = off >= 0 ? 0 : (-off + stride - 1) / stride;
  const int upper = lin - off;  // t*stride < upper
  t_hi = upper <= 0 ? 0 : std::min(lout, (upper + stride - 1) / stride);
  t_lo = std::min(t_lo, t_hi);
}

inline void conv_forward_slot(const double* in_n, const double* w, const double* b,
                              int cin, int lin, int k, int stride, int pad, int o,
                              double* out_row, int lout) {
  const double bias = b ? b[o] : 0.0;
  for (int t = 0; t < lout; ++t) out_row[t] = bias;
  for (int i = 0; i < cin; ++i) {
    const double* in_row = in_n + static_cast<int64_t>(i) * lin;
    const double* w_row = w + (static_cast<int64_t>(o) * cin + i) * k;
    for (int dk = 0; dk < k; ++dk) {
      const double wv = w_row[dk];
      int t_lo, t_hi;
      tap_bounds(lout, stride, dk, pad, lin, t_lo, t_hi);
      const int off = dk - pad;
      if (stride == 1) {
        const double* src = in_row + off;
        for (int t = t_lo; t < t_hi; ++t) out_row[t] += wv * src[t];
      } else {
        for (int t = t_lo; t < t_hi; ++t) out_row[t] += wv * in_row[t * stride + off];
      }
    }
  }
}

inline void conv_backward_input_slot(const double* gout_n, const double* w, int cout,
                                     int lout, int k, int stride, int pad, int i, int cin,
                                     double* gin_row, int lin) {
  std::memset(gin_row, 0, sizeof(double) * static_cast<size_t>(lin));
  for (int o = 0; o < cout; ++o) {
    const double* g_row = gout_n + static_cast<int64_t>(o) * lout;
    const double* w_row = w + (static_cast<int64_t>(o) * cin + i) * k;
    for (int dk = 0; dk < k; ++dk) {
      const double wv = w_row[dk];
      int t_lo, t_hi;
      tap_bounds(lout, stride, dk, pad, lin, t_lo, t_hi);
      const int off = dk - pad;
      if (stride == 1) {
        double* dst = gin_row + off;
        for (int t = t_lo; t < t_hi; ++t) dst[t] += wv * g_row[t];
      } else {
        for (int t = t_lo; t < t_hi; ++t) gin_row[t * stride + off] += wv * g_row[t];
      }
    }
  }
}

inline double conv_weight_grad_slot(const double* in, const double* gout, int n, int cin,
                                    int lin, int cout, int lout, int k, int stride, int pad,
                                    int o, int i, int dk) {
  int t_lo, t_hi;
  tap_bounds(lout, stride, dk, pad, lin, t_lo, t_hi);
  const int off = dk - pad;
  double acc = 0.0;
  for (int nn = 0; nn < n; ++nn) {
    const double* g_row = gout + (static_cast<int64_t>(nn) * cout + o) * lout;
    const double* in_row = in + (static_cast<int64_t>(nn) * cin + i) * lin;
    if (stride == 1) {
      const double* src = in_row + off;
#pragma omp simd reduction(+ : acc)
      for (int t = t_lo; t < t_hi; ++t) acc += g_row[t] * src[t];
    } else {
#pragma omp simd reduction(+ : acc)
      for (int t = t_lo; t < t_hi; ++t) acc += g_row[t] * in_row[t * stride + off];
    }
  }
  return acc;
}

}  // namespace

void conv1d_forward(const double* in, int n, int cin, int lin, const double* w,
                    const double* b, int cout, int k, int stride, int pad, double* out,
                    int lout) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int nn = 0; nn < n; ++nn)
    for (int o = 0; o < cout; ++o)
      conv_forward_slot(in + static_cast<int64_t>(nn) * cin * lin, w, b, cin, lin, k, stride,
                        pad, o, out + (static_cast<int64_t>(nn) * cout + o) * lout, lout);
}

void conv1d_backward_input(const double* gout, int n, int cout, int lout, const double* w,
                           int cin, int k, int stride, int pad, double* gin, int lin) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int nn = 0; nn < n; ++nn)
    for (int i = 0; i < cin; ++i)
      conv_backward_input_slot(gout + static_cast<int64_t>(nn) * cout * lout, w, cout, lout,
                               k, stride, pad, i, cin,
                               gin + (static_cast<int64_t>(nn) * cin + i) * lin, lin);
}

void conv1d_backward_params(const double* in, int n, int cin, int lin, const double* gout,
                            int cout, int lout, int k, int stride, int pad, double* gw,
                            double* gb) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int o = 0; o < cout; ++o)
    for (int i = 0; i < cin; ++i)
      for (int dk = 0; dk < k; ++dk)
        gw[(static_cast<int64_t>(o) * cin + i) * k + dk] = conv_weight_grad_slot(
            in, gout, n, cin, lin, cout, lout, k, stride, pad, o, i, dk);

#pragma omp parallel for schedule(static)
  for (int o = 0; o < cout; ++o) {
    double acc = 0.0;
    for (int nn = 0; nn < n; ++nn) {
      const double* g_row = gout + (static_cast<int64_t>(nn) * cout + o) * lout;
#pragma omp simd reduction(+ : acc)
      for (int t = 0; t < lout; ++t) acc += g_row[t];
    }
    gb[o] = acc;
  }
}

void dense_forward(const double* in, int n, int fin, const double* w, const double* b,
                   int fout, double* out) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int nn = 0; nn < n; ++nn)
    for (int o = 0; o < fout; ++o) {
      const double* x = in + static_cast<int64_t>(nn) * fin;
      const double* w_row = w + static_cast<int64_t>(o) * fin;
      double acc = b ? b[o] : 0.0;
#pragma omp simd reduction(+ : acc)
      for (int i = 0; i < fin; ++i) acc += w_row[i] * x[i];
      out[static_cast<int64_t>(nn) * fout + o] = acc;
    }
}

void dense_backward_input(const double* gout, int n, int fout, const double* w, int fin,
                          double* gin) {
#pragma omp parallel for schedule(static)
  for (int nn = 0; nn < n; ++nn) {
    double* g_in = gin + static_cast<int64_t>(nn) * fin;
    const double* g_out = gout + static_cast<int64_t>(nn) * fout;
    std::memset(g_in, 0, sizeof(double) * static_cast<size_t>(fin));
    for (int o = 0; o < fout; ++o) {
      const double g = g_out[o];
      const double* w_row = w + static_cast<int64_t>(o) * fin;
      for (int i = 0; i < fin; ++i) g_in[i] += g * w_row[i];
    }
  }
}

void dense_backward_params(const double* in, int n, int fin, const double* gout, int fout,
                           double* gw, double* gb) {
#pragma omp parallel for schedule(static)
  for (int o = 0; o < fout; ++o) {
    double* gw_row = gw + static_cast<int64_t>(o) * fin;
    std::memset(gw_row, 0, sizeof(double) * static_cast<size_t>(fin));
    double gb_acc = 0.0;
    for (int nn = 0; nn < n; ++nn) {
      const double g = gout[static_cast<int64_t>(nn) * fout + o];
      const double* x = in + static_cast<int64_t>(nn) * fin;
      for (int i = 0; i < fin; ++i) gw_row[i] += g * x[i];
      gb_acc += g;
    }
    gb[o] = gb_acc;
  }
}

void pairwise_sq_dists(const double* x, int n, int d, double* out) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const double* xi = x + static_cast<int64_t>(i) * d;
    double* row = out + static_cast<int64_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* xj = x + static_cast<int64_t>(j) * d;
      double acc = 0.0;
#pragma omp simd reduction(+ : acc)
      for (int k = 0; k < d; ++k) {
        const double diff = xi[k] - xj[k];
        acc += diff * diff;
      }
      row[j] = acc;
    }
    row[i] = 0.0;
  }
}

namespace serial {

void conv1d_forward(const double* in, int n, int cin, int lin, const double* w,
                    const double* b, int cout, int k, int stride, int pad, double* out,
                    int lout) {
  for (int nn = 0; nn < n; ++nn)
    for (int o = 0; o < cout; ++o)
      conv_forward_slot(in + static_cast<int64_t>(nn) * cin * lin, w, b, cin, lin, k, stride,
                        pad, o, out + (static_cast<int64_t>(nn) * cout + o) * lout, lout);
}

void conv1d_backward_input(const double* gout, int n, int cout, int lout, const double* w,
                           int cin, int k, int stride, int pad, double* gin, int lin) {
  for (int nn = 0; nn < n; ++nn)
    for (int i = 0; i < cin; ++i)
      conv_backward_input_slot(gout + static_cast<int64_t>(nn) * cout * lout, w, cout, lout,
                               k, stride, pad, i, cin,
                               gin + (static_cast<int64_t>(nn) * cin + i) * lin, lin);
}

void conv1d_backward_params(const double* in, int n, int cin, int lin, const double* gout,
                            int cout, int lout, int k, int stride, int pad, double* gw,
                            double* gb) {
  for (int o = 0; o < cout; ++o)
    for (int i = 0; i < cin; ++i)
      for (int dk = 0; dk < k; ++dk)
        gw[(static_cast<int64_t>(o) * cin + i) * k + dk] = conv_weight_grad_slot(
            in, gout, n, cin, lin, cout, lout, k, stride, pad, o, i, dk);
  for (int o = 0; o < cout; ++o) {
    double acc = 0.0;
    for (int nn = 0; nn < n; ++nn) {
      const double* g_row = gout + (static_cast<int64_t>(nn) * cout + o) * lout;
#pragma omp simd reduction(+ : acc)
      for (int t = 0; t < lout; ++t) acc += g_row[t];
    }
    gb[o] = acc;
  }
}

void dense_forward(const double* in, int n, int fin, const double* w, const double* b,
                   int fout, double* out) {
  for (int nn = 0; nn < n; ++nn)
    for (int o = 0; o < fout; ++o) {
      const double* x = in + static_cast<int64_t>(nn) * fin;
      const double* w_row = w + static_cast<int64_t>(o) * fin;
      double acc = b ? b[o] : 0.0;
#pragma omp simd reduction(+ : acc)
      for (int i = 0; i < fin; ++i) acc += w_row[i] * x[i];
      out[static_cast<int64_t>(nn) * fout + o] = acc;
    }
}

void dense_backward_input(const double* gout, int n, int fout, const double* w, int fin,
                          double* gin) {
  for (int nn = 0; nn < n; ++nn) {
    double* g_in = gin + static_cast<int64_t>(nn) * fin;
    const double* g_out = gout + static_cast<int64_t>(nn) * fout;
    std::memset(g_in, 0, sizeof(double) * static_cast<size_t>(fin));
    for (int o = 0; o < fout; ++o) {
      const double g = g_out[o];
      const double* w_row = w + static_cast<int64_t>(o) * fin;
      for (int i = 0; i < fin; ++i) g_in[i] += g * w_row[i];
    }
  }
}

void dense_backward_params(const double* in, int n, int fin, const double* gout, int fout,
                           double* gw, double* gb) {
  for (int o = 0; o < fout; ++o) {
    double* gw_row = gw + static_cast<int64_t>(o) * fin;
    std::memset(gw_row, 0, sizeof(double) * static_cast<size_t>(fin));
    double gb_acc = 0.0;
    for (int nn = 0; nn < n; ++nn) {
      const double g = gout[static_cast<int64_t>(nn) * fout + o];
      const double* x = in + static_cast<int64_t>(nn) * fin;
      for (int i = 0; i < fin; ++i) gw_row[i] += g * x[i];
      gb_acc += g;
    }
    gb[o] = gb_acc;
  }
}

void pairwise_sq_dists(const double* x, int n, int d, double* out) {
  for (int i = 0; i < n; ++i) {
    const double* xi = x + static_cast<int64_t>(i) * d;
    double* row = out + static_cast<int64_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* xj = x + static_cast<int64_t>(j) * d;
      double acc = 0.0;
#pragma omp simd reduction(+ : acc)
      for (int k = 0; k < d; ++k) {
        const double diff = xi[k] - xj[k];
        acc += diff * diff;
      }
      row[j] = acc;
    }
    row[i] = 0.0;
  }
}

}  // namespace serial

}  // namespace pqadv::kernels
