#include "pqadv/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "pqadv/error.hpp"
#include "pqadv/kernels.hpp"

namespace pqadv {

namespace {

inline double f32(double x) { return static_cast<double>(static_cast<float>(x)); }

inline int64_t numel(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

}  // namespace

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Conv1d: return "conv1d";
    case LayerKind::BatchNorm: return "batchnorm";
    case LayerKind::Relu: return "relu";
    case LayerKind::MaxPool1d: return "maxpool1d";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
  }
  return "?";
}

LayerKind layer_kind_from_name(const std::string& name) {
  if (name == "conv1d") return LayerKind::Conv1d;
  if (name == "batchnorm") return LayerKind::BatchNorm;
  if (name == "relu") return LayerKind::Relu;
  if (name == "maxpool1d") return LayerKind::MaxPool1d;
  if (name == "flatten") return LayerKind::Flatten;
  if (name == "dense") return LayerKind::Dense;
  fail(Errc::ManifestMismatch, "unknown layer kind '" + name + "'");
}

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)) {
  v.assign(static_cast<size_t>(numel(shape)), 0.0);
}

int NetworkModel::num_param_tensors() const {
  int n = 0;
  for (const auto& l : layers) n += static_cast<int>(l.params.size());
  return n;
}

std::vector<LayerSpec> default_architecture() {
  std::vector<LayerSpec> s;
  auto block = [&](int ch, int k, int pool_k, int pool_s) {
    s.push_back({LayerKind::Conv1d, ch, k, 1, 0});
    s.push_back({LayerKind::BatchNorm});
    s.push_back({LayerKind::Relu});
    s.push_back({LayerKind::MaxPool1d, 0, pool_k, pool_s, 0});
  };
  // kernel widths sized so the last conv sees a few fundamental cycles;
  // narrower kernels cannot separate the slow flicker envelopes
  block(16, 15, 4, 4);
  block(32, 9, 4, 4);
  block(64, 7, 2, 2);
  s.push_back({LayerKind::Flatten});
  s.push_back({LayerKind::Dense, 0, 0, 1, 128});
  s.push_back({LayerKind::Relu});
  s.push_back({LayerKind::Dense, 0, 0, 1, kNumClasses});
  return s;
}

std::vector<LayerSpec> architecture_minus_block() {
  auto s = default_architecture();
  s.erase(s.begin() + 8, s.begin() + 12);  // drop the third conv block
  return s;
}

std::vector<LayerSpec> architecture_plus_block() {
  auto s = default_architecture();
  const std::vector<LayerSpec> extra = {
      {LayerKind::Conv1d, 64, 3, 1, 0},
      {LayerKind::BatchNorm},
      {LayerKind::Relu},
      {LayerKind::MaxPool1d, 0, 2, 2, 0},
  };
  s.insert(s.begin() + 12, extra.begin(), extra.end());
  return s;
}

NetworkModel build_model(const std::vector<LayerSpec>& specs, int input_len, int n_classes,
                         uint64_t init_seed, const std::string& arch_id) {
  require(!specs.empty(), Errc::ShapeMismatch, "empty layer list");
  NetworkModel m;
  m.input_len = input_len;
  m.n_classes = n_classes;
  m.init_seed = init_seed;
  m.arch_id = arch_id;

  Rng rng = Rng::stream(init_seed, "init");
  int c = 1, l = input_len;
  for (const LayerSpec& spec : specs) {
    LayerState st;
    st.spec = spec;
    st.in_c = c;
    st.in_l = l;
    switch (spec.kind) {
      case LayerKind::Conv1d: {
        require(spec.out_channels > 0 && spec.kernel_size > 0 && spec.stride > 0,
                Errc::ShapeMismatch, "bad conv spec");
        const int k = spec.kernel_size, s = spec.stride;
        int lout, pad;
        if (s == 1) {
          require(k % 2 == 1, Errc::ShapeMismatch, "stride-1 conv needs odd kernel");
          lout = l;
          pad = (k - 1) / 2;
        } else {
          lout = (l + s - 1) / s;
          pad = std::max(0, ((lout - 1) * s + k - l)) / 2;
        }
        st.out_c = spec.out_channels;
        st.out_l = lout;
        st.pad = pad;
        Tensor w({spec.out_channels, c, k});
        Tensor b({spec.out_channels});
        const double bound = 1.0 / std::sqrt(static_cast<double>(c) * k);
        for (auto& x : w.v) x = f32(rng.uniform(-bound, bound));
        for (auto& x : b.v) x = f32(rng.uniform(-bound, bound));
        st.params = {std::move(w), std::move(b)};
        break;
      }
      case LayerKind::BatchNorm: {
        st.out_c = c;
        st.out_l = l;
        Tensor gamma({c}), beta({c}), rmean({c}), rvar({c});
        std::fill(gamma.v.begin(), gamma.v.end(), 1.0);
        std::fill(rvar.v.begin(), rvar.v.end(), 1.0);
        st.params = {std::move(gamma), std::move(beta)};
        st.stats = {std::move(rmean), std::move(rvar)};
        break;
      }
      case LayerKind::Relu:
        st.out_c = c;
        st.out_l = l;
        break;
      case LayerKind::MaxPool1d: {
        require(spec.kernel_size > 0 && spec.stride > 0 && l >= spec.kernel_size,
                Errc::ShapeMismatch, "bad pool spec");
        st.out_c = c;
        st.out_l = (l - spec.kernel_size) / spec.stride + 1;
        break;
      }
      case LayerKind::Flatten:
        st.out_c = c * l;
        st.out_l = 1;
        break;
      case LayerKind::Dense: {
        require(l == 1, Errc::ShapeMismatch, "dense layer requires flattened input");
        require(spec.out_features > 0, Errc::ShapeMismatch, "bad dense spec");
        st.out_c = spec.out_features;
        st.out_l = 1;
        Tensor w({spec.out_features, c});
        Tensor b({spec.out_features});
        const double bound = 1.0 / std::sqrt(static_cast<double>(c));
        for (auto& x : w.v) x = f32(rng.uniform(-bound, bound));
        for (auto& x : b.v) x = f32(rng.uniform(-bound, bound));
        st.params = {std::move(w), std::move(b)};
        break;
      }
    }
    c = st.out_c;
    l = st.out_l;
    m.layers.push_back(std::move(st));
  }
  require(c == n_classes && l == 1, Errc::ShapeMismatch,
          "network must end in " + std::to_string(n_classes) + " logits");
  return m;
}

GradSet make_grad_set(const NetworkModel& m) {
  GradSet g;
  g.g.resize(m.layers.size());
  for (size_t i = 0; i < m.layers.size(); ++i)
    for (const Tensor& t : m.layers[i].params) g.g[i].push_back(Tensor(t.shape));
  return g;
}

namespace {

void bn_forward_train(LayerState& st, const Act& in, Act& out, LayerCacheEntry* cache) {
  const int n = in.n, c = in.c, l = in.l;
  const int64_t m = static_cast<int64_t>(n) * l;
  std::vector<double> mean(c), invstd(c), var(c);

#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < c; ++ch) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double* row = in.v.data() + (static_cast<int64_t>(i) * c + ch) * l;
#pragma omp simd reduction(+ : s)
      for (int t = 0; t < l; ++t) s += row[t];
    }
    const double mu = s / static_cast<double>(m);
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double* row = in.v.data() + (static_cast<int64_t>(i) * c + ch) * l;
#pragma omp simd reduction(+ : sq)
      for (int t = 0; t < l; ++t) {
        const double d = row[t] - mu;
        sq += d * d;
      }
    }
    mean[ch] = mu;
    var[ch] = sq / static_cast<double>(m);
    invstd[ch] = 1.0 / std::sqrt(var[ch] + st.bn_eps);
  }

  for (int ch = 0; ch < c; ++ch) {
    st.stats[0].v[ch] = (1.0 - st.bn_momentum) * st.stats[0].v[ch] + st.bn_momentum * mean[ch];
    st.stats[1].v[ch] = (1.0 - st.bn_momentum) * st.stats[1].v[ch] + st.bn_momentum * var[ch];
  }

  if (cache) {
    cache->mean = mean;
    cache->invstd = invstd;
    cache->xhat = Act(n, c, l);
  }
  const double* gamma = st.params[0].v.data();
  const double* beta = st.params[1].v.data();
#pragma omp parallel for collapse(2) schedule(static)
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch) {
      const double* row = in.v.data() + (static_cast<int64_t>(i) * c + ch) * l;
      double* orow = out.v.data() + (static_cast<int64_t>(i) * c + ch) * l;
      double* xh = cache ? cache->xhat.v.data() + (static_cast<int64_t>(i) * c + ch) * l
                         : nullptr;
      for (int t = 0; t < l; ++t) {
        const double h = (row[t] - mean[ch]) * invstd[ch];
        if (xh) xh[t] = h;
        orow[t] = gamma[ch] * h + beta[ch];
      }
    }
}

void bn_forward_eval(const LayerState& st, const Act& in, Act& out, LayerCacheEntry* cache) {
  const int n = in.n, c = in.c, l = in.l;
  std::vector<double> invstd(c);
  for (int ch = 0; ch < c; ++ch) invstd[ch] = 1.0 / std::sqrt(st.stats[1].v[ch] + st.bn_eps);
  if (cache) {
    cache->mean.assign(st.stats[0].v.begin(), st.stats[0].v.end());
    cache->invstd = invstd;
    cache->xhat = Act(n, c, l);
  }
  const double* gamma = st.params[0].v.data();
  const double* beta = st.params[1].v.data();
  const double* rmean = st.stats[0].v.data();
#pragma omp parallel for collapse(2) schedule(static)
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch) {
      const double* row = in.v.data() + (static_cast<int64_t>(i) * c + ch) * l;
      double* orow = out.v.data() + (static_cast<int64_t>(i) * c + ch) * l;
      double* xh = cache ? cache->xhat.v.data() + (static_cast<int64_t>(i) * c + ch) * l
                         : nullptr;
      for (int t = 0; t < l; ++t) {
        const double h = (row[t] - rmean[ch]) * invstd[ch];
        if (xh) xh[t] = h;
        orow[t] = gamma[ch] * h + beta[ch];
      }
    }
}

// Backward through batch statistics (train-mode cache):
// dx = invstd/m * (m*dxhat - sum(dxhat) - xhat * sum(dxhat*xhat))
void bn_backward(const LayerState& st, const LayerCacheEntry& cache, Mode mode,
                 const Act& gout, Act& gin, std::vector<Tensor>* pg) {
  const int n = gout.n, c = gout.c, l = gout.l;
  const int64_t m = static_cast<int64_t>(n) * l;
  const double* gamma = st.params[0].v.data();

  std::vector<double> sum_dy(c, 0.0), sum_dy_xhat(c, 0.0);
  const bool need_sums = (pg != nullptr) || (mode == Mode::Train);
  if (need_sums) {
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < c; ++ch) {
      double s = 0.0, sx = 0.0;
      for (int i = 0; i < n; ++i) {
        const int64_t base = (static_cast<int64_t>(i) * c + ch) * l;
#pragma omp simd reduction(+ : s, sx)
        for (int t = 0; t < l; ++t) {
          const double g = gout.v[base + t];
          s += g;
          sx += g * cache.xhat.v[base + t];
        }
      }
      sum_dy[ch] = s;
      sum_dy_xhat[ch] = sx;
    }
  }
  if (pg) {
    (*pg)[0].v.assign(sum_dy_xhat.begin(), sum_dy_xhat.end());  // dgamma
    (*pg)[1].v.assign(sum_dy.begin(), sum_dy.end());            // dbeta
  }

#pragma omp parallel for collapse(2) schedule(static)
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch) {
      const int64_t base = (static_cast<int64_t>(i) * c + ch) * l;
      const double g_is = gamma[ch] * cache.invstd[ch];
      if (mode == Mode::Train) {
        const double k1 = sum_dy[ch] / static_cast<double>(m);
        const double k2 = sum_dy_xhat[ch] / static_cast<double>(m);
        for (int t = 0; t < l; ++t)
          gin.v[base + t] =
              g_is * (gout.v[base + t] - k1 - cache.xhat.v[base + t] * k2);
      } else {
        for (int t = 0; t < l; ++t) gin.v[base + t] = g_is * gout.v[base + t];
      }
    }
}

void maxpool_forward(const LayerState& st, const Act& in, Act& out, LayerCacheEntry* cache) {
  const int n = in.n, c = in.c, lin = in.l, lout = st.out_l;
  const int k = st.spec.kernel_size, s = st.spec.stride;
  if (cache) cache->argmax.assign(static_cast<size_t>(n) * c * lout, 0);
#pragma omp parallel for collapse(2) schedule(static)
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch) {
      const double* row = in.v.data() + (static_cast<int64_t>(i) * c + ch) * lin;
      double* orow = out.v.data() + (static_cast<int64_t>(i) * c + ch) * lout;
      int* am = cache ? cache->argmax.data() + (static_cast<int64_t>(i) * c + ch) * lout
                      : nullptr;
      for (int t = 0; t < lout; ++t) {
        int best = t * s;
        double bv = row[best];
        for (int j = 1; j < k; ++j) {
          const int idx = t * s + j;
          if (row[idx] > bv) {  // ties route to the earliest index
            bv = row[idx];
            best = idx;
          }
        }
        orow[t] = bv;
        if (am) am[t] = best;
      }
    }
}

void maxpool_backward(const LayerState& st, const LayerCacheEntry& cache, const Act& gout,
                      Act& gin) {
  const int n = gout.n, c = gout.c, lout = gout.l, lin = st.in_l;
  std::fill(gin.v.begin(), gin.v.end(), 0.0);
#pragma omp parallel for collapse(2) schedule(static)
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch) {
      const double* grow = gout.v.data() + (static_cast<int64_t>(i) * c + ch) * lout;
      double* irow = gin.v.data() + (static_cast<int64_t>(i) * c + ch) * lin;
      const int* am = cache.argmax.data() + (static_cast<int64_t>(i) * c + ch) * lout;
      for (int t = 0; t < lout; ++t) irow[am[t]] += grow[t];
    }
}

Act run_forward(const NetworkModel& m_const, NetworkModel* m_mut, const Act& in, Mode mode,
                ForwardCache* cache) {
  const NetworkModel& m = m_const;
  require(in.c == 1 && in.l == m.input_len, Errc::ShapeMismatch,
          "input must be 1 x " + std::to_string(m.input_len));
  if (cache) {
    cache->mode = mode;
    cache->layer.assign(m.layers.size(), {});
  }
  Act cur = in;
  for (size_t li = 0; li < m.layers.size(); ++li) {
    const LayerState& st = m.layers[li];
    LayerCacheEntry* ce = cache ? &cache->layer[li] : nullptr;
    Act out(cur.n, st.out_c, st.out_l);
    switch (st.spec.kind) {
      case LayerKind::Conv1d:
        kernels::conv1d_forward(cur.v.data(), cur.n, st.in_c, st.in_l, st.params[0].v.data(),
                                st.params[1].v.data(), st.out_c, st.spec.kernel_size,
                                st.spec.stride, st.pad, out.v.data(), st.out_l);
        break;
      case LayerKind::BatchNorm:
        if (mode == Mode::Train)
          bn_forward_train(m_mut->layers[li], cur, out, ce);
        else
          bn_forward_eval(st, cur, out, ce);
        break;
      case LayerKind::Relu: {
        const int64_t sz = static_cast<int64_t>(cur.v.size());
        if (ce) ce->relu_mask.resize(sz);
#pragma omp parallel for schedule(static)
        for (int64_t j = 0; j < sz; ++j) {
          const bool pos = cur.v[j] > 0.0;
          out.v[j] = pos ? cur.v[j] : 0.0;
          if (ce) ce->relu_mask[j] = pos ? 1 : 0;
        }
        break;
      }
      case LayerKind::MaxPool1d:
        maxpool_forward(st, cur, out, ce);
        break;
      case LayerKind::Flatten:
        out.v = cur.v;  // same memory layout
        break;
      case LayerKind::Dense:
        kernels::dense_forward(cur.v.data(), cur.n, st.in_c, st.params[0].v.data(),
                               st.params[1].v.data(), st.out_c, out.v.data());
        break;
    }
    // only conv/dense backward reads the raw layer input
    const bool keep_in =
        st.spec.kind == LayerKind::Conv1d || st.spec.kind == LayerKind::Dense;
    if (ce && keep_in) ce->in = std::move(cur);
    cur = std::move(out);
  }
  return cur;
}

}  // namespace

Act nn_forward_train(NetworkModel& m, const Act& in, ForwardCache* cache) {
  return run_forward(m, &m, in, Mode::Train, cache);
}

Act nn_forward_eval(const NetworkModel& m, const Act& in, ForwardCache* cache) {
  return run_forward(m, nullptr, in, Mode::Eval, cache);
}

Act nn_backward(const NetworkModel& m, const ForwardCache& cache, const Act& grad_out,
                GradSet* pg) {
  require(cache.layer.size() == m.layers.size(), Errc::ShapeMismatch, "stale forward cache");
  Act g = grad_out;
  for (int li = static_cast<int>(m.layers.size()) - 1; li >= 0; --li) {
    const LayerState& st = m.layers[li];
    const LayerCacheEntry& ce = cache.layer[li];
    std::vector<Tensor>* lpg = pg ? &pg->g[li] : nullptr;
    Act gin(g.n, st.in_c, st.in_l);
    switch (st.spec.kind) {
      case LayerKind::Conv1d:
        kernels::conv1d_backward_input(g.v.data(), g.n, st.out_c, st.out_l,
                                       st.params[0].v.data(), st.in_c, st.spec.kernel_size,
                                       st.spec.stride, st.pad, gin.v.data(), st.in_l);
        if (lpg)
          kernels::conv1d_backward_params(ce.in.v.data(), g.n, st.in_c, st.in_l, g.v.data(),
                                          st.out_c, st.out_l, st.spec.kernel_size,
                                          st.spec.stride, st.pad, (*lpg)[0].v.data(),
                                          (*lpg)[1].v.data());
        break;
      case LayerKind::BatchNorm:
        bn_backward(st, ce, cache.mode, g, gin, lpg);
        break;
      case LayerKind::Relu: {
        const int64_t sz = static_cast<int64_t>(g.v.size());
#pragma omp parallel for schedule(static)
        for (int64_t j = 0; j < sz; ++j) gin.v[j] = ce.relu_mask[j] ? g.v[j] : 0.0;
        break;
      }
      case LayerKind::MaxPool1d:
        maxpool_backward(st, ce, g, gin);
        break;
      case LayerKind::Flatten:
        gin.v = g.v;
        break;
      case LayerKind::Dense:
        kernels::dense_backward_input(g.v.data(), g.n, st.out_c, st.params[0].v.data(),
                                      st.in_c, gin.v.data());
        if (lpg)
          kernels::dense_backward_params(ce.in.v.data(), g.n, st.in_c, g.v.data(), st.out_c,
                                         (*lpg)[0].v.data(), (*lpg)[1].v.data());
        break;
    }
    g = std::move(gin);
  }
  return g;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  double mx = logits[0];
  for (double x : logits) mx = std::max(mx, x);
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& x : p) x /= sum;
  return p;
}

double cross_entropy_loss(const Act& logits, const std::vector<int>& labels, Act* grad) {
  const int n = logits.n, k = logits.c;
  require(static_cast<int>(labels.size()) == n, Errc::ShapeMismatch,
          "labels/batch size mismatch");
  for (int lab : labels)
    require(lab >= 1 && lab <= k, Errc::ShapeMismatch, "label out of range");
  if (grad) *grad = Act(n, k, 1);

  std::vector<double> per_sample(n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const double* z = logits.sample(i);
    double mx = z[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, z[j]);
    double sum = 0.0;
    for (int j = 0; j < k; ++j) sum += std::exp(z[j] - mx);
    const double lse = mx + std::log(sum);
    per_sample[i] = lse - z[labels[i] - 1];
    if (grad) {
      double* gr = grad->sample(i);
      for (int j = 0; j < k; ++j) gr[j] = std::exp(z[j] - lse) / n;
      gr[labels[i] - 1] -= 1.0 / n;
    }
  }
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += per_sample[i];
  return total / n;
}

Act pack_batch(const std::vector<const std::vector<double>*>& xs) {
  require(!xs.empty(), Errc::EmptySet, "empty batch");
  Act a(static_cast<int>(xs.size()), 1, static_cast<int>(xs[0]->size()));
  for (size_t i = 0; i < xs.size(); ++i) {
    require(xs[i]->size() == xs[0]->size(), Errc::ShapeMismatch, "ragged batch");
    std::copy(xs[i]->begin(), xs[i]->end(), a.sample(static_cast<int>(i)));
  }
  return a;
}

Act pack_batch(const std::vector<std::vector<double>>& xs) {
  std::vector<const std::vector<double>*> ptrs;
  ptrs.reserve(xs.size());
  for (const auto& x : xs) ptrs.push_back(&x);
  return pack_batch(ptrs);
}

std::vector<double> logits_eval(const NetworkModel& m, std::span<const double> x) {
  require(static_cast<int>(x.size()) == m.input_len, Errc::ShapeMismatch, "bad input length");
  Act in(1, 1, m.input_len);
  std::copy(x.begin(), x.end(), in.v.begin());
  Act out = nn_forward_eval(m, in);
  return out.v;
}

std::vector<std::vector<double>> logits_eval_batch(const NetworkModel& m,
                                                   const std::vector<std::vector<double>>& xs) {
  std::vector<std::vector<double>> res(xs.size());
  constexpr int kChunk = 256;
  for (size_t start = 0; start < xs.size(); start += kChunk) {
    const size_t end = std::min(xs.size(), start + kChunk);
    std::vector<const std::vector<double>*> ptrs;
    for (size_t i = start; i < end; ++i) ptrs.push_back(&xs[i]);
    Act out = nn_forward_eval(m, pack_batch(ptrs));
    for (size_t i = start; i < end; ++i) {
      const double* row = out.sample(static_cast<int>(i - start));
      res[i].assign(row, row + m.n_classes);
    }
  }
  return res;
}

int argmax_class(std::span<const double> logits) {
  int best = 0;
  for (size_t i = 1; i < logits.size(); ++i)
    if (logits[i] > logits[best]) best = static_cast<int>(i);
  return best + 1;
}

int predict(const NetworkModel& m, std::span<const double> x) {
  return argmax_class(logits_eval(m, x));
}

std::vector<int> predict_batch(const NetworkModel& m,
                               const std::vector<std::vector<double>>& xs) {
  auto lg = logits_eval_batch(m, xs);
  std::vector<int> out(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) out[i] = argmax_class(lg[i]);
  return out;
}

LossGrad loss_and_gradients(NetworkModel& m, const Act& batch, const std::vector<int>& labels) {
  ForwardCache cache;
  Act logits = nn_forward_train(m, batch, &cache);
  LossGrad lg;
  lg.grads = make_grad_set(m);
  Act dlogits;
  lg.loss = cross_entropy_loss(logits, labels, &dlogits);
  nn_backward(m, cache, dlogits, &lg.grads);
  return lg;
}

namespace {

// Duplicate a single-sample eval cache across `copies` rows so one batched
// backward pass yields several directional gradients at once. Input-gradient
// only: the caches that feed parameter gradients (conv/dense inputs, BN xhat)
// are deliberately not replicated.
ForwardCache replicate_cache(const ForwardCache& src, int copies) {
  require(src.mode == Mode::Eval, Errc::ShapeMismatch,
          "cache replication is an eval-mode construct");
  ForwardCache out;
  out.mode = src.mode;
  out.layer.resize(src.layer.size());
  for (size_t li = 0; li < src.layer.size(); ++li) {
    const LayerCacheEntry& s = src.layer[li];
    LayerCacheEntry& d = out.layer[li];
    d.mean = s.mean;
    d.invstd = s.invstd;
    if (!s.relu_mask.empty()) {
      d.relu_mask.resize(s.relu_mask.size() * copies);
      for (int i = 0; i < copies; ++i)
        std::copy(s.relu_mask.begin(), s.relu_mask.end(),
                  d.relu_mask.begin() + static_cast<int64_t>(i) * s.relu_mask.size());
    }
    if (!s.argmax.empty()) {
      d.argmax.resize(s.argmax.size() * copies);
      for (int i = 0; i < copies; ++i)
        std::copy(s.argmax.begin(), s.argmax.end(),
                  d.argmax.begin() + static_cast<int64_t>(i) * s.argmax.size());
    }
  }
  return out;
}

Act single_input(const NetworkModel& m, std::span<const double> x) {
  require(static_cast<int>(x.size()) == m.input_len, Errc::ShapeMismatch, "bad input length");
  Act in(1, 1, m.input_len);
  std::copy(x.begin(), x.end(), in.v.begin());
  return in;
}

}  // namespace

std::vector<double> input_gradient(const NetworkModel& m, std::span<const double> x,
                                   int class_id) {
  require(class_id >= 1 && class_id <= m.n_classes, Errc::ShapeMismatch, "bad class id");
  ForwardCache cache;
  nn_forward_eval(m, single_input(m, x), &cache);
  Act seed(1, m.n_classes, 1);
  seed.v[class_id - 1] = 1.0;
  Act g = nn_backward(m, cache, seed, nullptr);
  return g.v;
}

LogitsJacobian logits_and_jacobian(const NetworkModel& m, std::span<const double> x) {
  ForwardCache cache;
  Act out = nn_forward_eval(m, single_input(m, x), &cache);
  const int k = m.n_classes;
  ForwardCache rep = replicate_cache(cache, k);
  Act seed(k, k, 1);
  for (int j = 0; j < k; ++j) seed.sample(j)[j] = 1.0;
  Act g = nn_backward(m, rep, seed, nullptr);
  LogitsJacobian res;
  res.logits = std::move(out.v);
  res.jac.resize(k);
  for (int j = 0; j < k; ++j) {
    const double* row = g.sample(j);
    res.jac[j].assign(row, row + m.input_len);
  }
  return res;
}

std::vector<std::vector<double>> logit_jacobian(const NetworkModel& m,
                                                std::span<const double> x) {
  return logits_and_jacobian(m, x).jac;
}

std::vector<double> loss_input_gradient(const NetworkModel& m, std::span<const double> x,
                                        int label) {
  require(label >= 1 && label <= m.n_classes, Errc::ShapeMismatch, "bad label");
  ForwardCache cache;
  Act logits = nn_forward_eval(m, single_input(m, x), &cache);
  std::vector<double> p = softmax(std::span<const double>(logits.v.data(), logits.v.size()));
  Act seed(1, m.n_classes, 1);
  for (int j = 0; j < m.n_classes; ++j) seed.v[j] = p[j];
  seed.v[label - 1] -= 1.0;
  Act g = nn_backward(m, cache, seed, nullptr);
  return g.v;
}

AdamState make_adam_state(const NetworkModel& m) {
  AdamState st;
  st.m.resize(m.layers.size());
  st.v.resize(m.layers.size());
  for (size_t i = 0; i < m.layers.size(); ++i)
    for (const Tensor& t : m.layers[i].params) {
      st.m[i].push_back(Tensor(t.shape));
      st.v[i].push_back(Tensor(t.shape));
    }
  return st;
}

void adam_step(NetworkModel& m, const GradSet& g, AdamState& st, const AdamConfig& cfg) {
  st.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
  for (size_t li = 0; li < m.layers.size(); ++li) {
    for (size_t pi = 0; pi < m.layers[li].params.size(); ++pi) {
      std::vector<double>& theta = m.layers[li].params[pi].v;
      const std::vector<double>& grad = g.g[li][pi].v;
      std::vector<double>& mm = st.m[li][pi].v;
      std::vector<double>& vv = st.v[li][pi].v;
      const int64_t sz = static_cast<int64_t>(theta.size());
#pragma omp parallel for schedule(static)
      for (int64_t j = 0; j < sz; ++j) {
        mm[j] = cfg.beta1 * mm[j] + (1.0 - cfg.beta1) * grad[j];
        vv[j] = cfg.beta2 * vv[j] + (1.0 - cfg.beta2) * grad[j] * grad[j];
        const double mhat = mm[j] / bc1;
        const double vhat = vv[j] / bc2;
        theta[j] = f32(theta[j] - cfg.alpha * mhat / (std::sqrt(vhat) + cfg.eps));
      }
    }
  }
}

namespace {

double accuracy(const NetworkModel& m, const std::vector<SignalVector>& set) {
  if (set.empty()) return 0.0;
  std::vector<std::vector<double>> xs;
  xs.reserve(set.size());
  for (const auto& s : set) xs.push_back(s.values);
  auto preds = predict_batch(m, xs);
  int64_t hit = 0;
  for (size_t i = 0; i < set.size(); ++i)
    if (preds[i] == set[i].label) ++hit;
  return static_cast<double>(hit) / static_cast<double>(set.size());
}

}  // namespace

TrainResult train(NetworkModel& m, const Dataset& data, const AdamConfig& cfg, uint64_t seed) {
  require(!data.train.empty(), Errc::EmptySet, "empty training set");
  AdamState adam = make_adam_state(m);
  const Rng shuffle_base = Rng::stream(seed, "shuffle");

  TrainResult res;
  const int n = static_cast<int>(data.train.size());
  std::vector<int> order(n);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng = shuffle_base.split(static_cast<uint64_t>(epoch));
    rng.shuffle(order);

    double loss_sum = 0.0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int end = std::min(n, start + cfg.batch_size);
      std::vector<const std::vector<double>*> xs;
      std::vector<int> labels;
      xs.reserve(end - start);
      for (int i = start; i < end; ++i) {
        xs.push_back(&data.train[order[i]].values);
        labels.push_back(data.train[order[i]].label);
      }
      LossGrad lg = loss_and_gradients(m, pack_batch(xs), labels);
      adam_step(m, lg.grads, adam, cfg);
      loss_sum += lg.loss * (end - start);
    }

    TrainTraceRow row;
    row.epoch = epoch;
    row.train_loss = loss_sum / n;
    row.train_acc = accuracy(m, data.train);
    row.test_acc = accuracy(m, data.test);
    res.trace.push_back(row);
  }
  return res;
}

std::vector<std::vector<double>> last_hidden_features(
    const NetworkModel& m, const std::vector<std::vector<double>>& xs) {
  // find the layer feeding the final dense
  int last_dense = -1;
  for (size_t i = 0; i < m.layers.size(); ++i)
    if (m.layers[i].spec.kind == LayerKind::Dense) last_dense = static_cast<int>(i);
  require(last_dense > 0, Errc::ShapeMismatch, "model has no dense head");

  const int feat_dim = m.layers[last_dense].in_c;
  std::vector<std::vector<double>> out(xs.size());
  constexpr int kChunk = 256;
  for (size_t start = 0; start < xs.size(); start += kChunk) {
    const size_t end = std::min(xs.size(), start + kChunk);
    std::vector<const std::vector<double>*> ptrs;
    for (size_t i = start; i < end; ++i) ptrs.push_back(&xs[i]);
    ForwardCache cache;
    nn_forward_eval(m, pack_batch(ptrs), &cache);
    // the cached input of the last dense layer is the post-activation feature
    const Act& feats = cache.layer[last_dense].in;
    for (size_t i = start; i < end; ++i) {
      const double* row = feats.sample(static_cast<int>(i - start));
      out[i].assign(row, row + feat_dim);
    }
  }
  return out;
}

}  // namespace pqadv
