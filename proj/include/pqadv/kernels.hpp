#pragma once

#include <cstdint>

namespace pqadv::kernels {

// Hot loops behind the network and the metric suite. Every kernel is
// parallelized over independent output slots only (one writer per slot,
// fixed-order inner reductions), so results are bitwise identical to the
// serial references below for any thread count or schedule. The unit tests
// assert exact equality between the two paths; bench/kernel_bench.cpp times
// them against each other.
//
// Layouts: activations are (n, c, l) row-major; conv weights (cout, cin, k);
// dense weights (fout, fin).

void conv1d_forward(const double* in, int n, int cin, int lin, const double* w,
                    const double* b, int cout, int k, int stride, int pad, double* out,
                    int lout);

void conv1d_backward_input(const double* gout, int n, int cout, int lout, const double* w,
                           int cin, int k, int stride, int pad, double* gin, int lin);

void conv1d_backward_params(const double* in, int n, int cin, int lin, const double* gout,
                            int cout, int lout, int k, int stride, int pad, double* gw,
                            double* gb);

void dense_forward(const double* in, int n, int fin, const double* w, const double* b,
                   int fout, double* out);

void dense_backward_input(const double* gout, int n, int fout, const double* w, int fin,
                          double* gin);

void dense_backward_params(const double* in, int n, int fin, const double* gout, int fout,
                           double* gw, double* gb);

/// Squared Euclidean distances between rows of x; out is n*n, diagonal 0.
void pairwise_sq_dists(const double* x, int n, int d, double* out);

namespace serial {

void conv1d_forward(const double* in, int n, int cin, int lin, const double* w,
                    const double* b, int cout, int k, int stride, int pad, double* out,
                    int lout);
void conv1d_backward_input(const double* gout, int n, int cout, int lout, const double* w,
                           int cin, int k, int stride, int pad, double* gin, int lin);
void conv1d_backward_params(const double* in, int n, int cin, int lin, const double* gout,
                            int cout, int lout, int k, int stride, int pad, double* gw,
                            double* gb);
void dense_forward(const double* in, int n, int fin, const double* w, const double* b,
                   int fout, double* out);
void dense_backward_input(const double* gout, int n, int fout, const double* w, int fin,
                          double* gin);
void dense_backward_params(const double* in, int n, int fin, const double* gout, int fout,
                           double* gw, double* gb);
void pairwise_sq_dists(const double* x, int n, int d, double* out);

}  // namespace serial

}  // namespace pqadv::kernels
