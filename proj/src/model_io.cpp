#include "pqadv/model_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "pqadv/error.hpp"

namespace pqadv {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'P', 'Q', 'A', 'D', 'V', 'M', 'L', '1'};

json spec_to_json(const LayerSpec& s) {
  json j;
  j["kind"] = layer_kind_name(s.kind);
  switch (s.kind) {
    case LayerKind::Conv1d:
      j["out_channels"] = s.out_channels;
      j["kernel_size"] = s.kernel_size;
      j["stride"] = s.stride;
      break;
    case LayerKind::MaxPool1d:
      j["kernel_size"] = s.kernel_size;
      j["stride"] = s.stride;
      break;
    case LayerKind::Dense:
      j["out_features"] = s.out_features;
      break;
    default:
      break;
  }
  return j;
}

LayerSpec spec_from_json(const json& j) {
  LayerSpec s;
  s.kind = layer_kind_from_name(j.at("kind").get<std::string>());
  s.out_channels = j.value("out_channels", 0);
  s.kernel_size = j.value("kernel_size", 0);
  s.stride = j.value("stride", 1);
  s.out_features = j.value("out_features", 0);
  return s;
}

const char* param_name(LayerKind kind, size_t pi) {
  if (kind == LayerKind::BatchNorm) return pi == 0 ? "gamma" : "beta";
  return pi == 0 ? "w" : "b";
}

}  // namespace

void save_model(const NetworkModel& m, const std::string& path, const json& extra) {
  json manifest;
  manifest["format"] = 1;
  manifest["arch_id"] = m.arch_id;
  manifest["input_len"] = m.input_len;
  manifest["n_classes"] = m.n_classes;
  manifest["init_seed"] = m.init_seed;

  json layers = json::array();
  json tensors = json::array();
  json bn = json::array();
  int64_t offset = 0;
  std::vector<float> blob;
  for (size_t li = 0; li < m.layers.size(); ++li) {
    const LayerState& st = m.layers[li];
    layers.push_back(spec_to_json(st.spec));
    for (size_t pi = 0; pi < st.params.size(); ++pi) {
      const Tensor& t = st.params[pi];
      json tj;
      tj["layer"] = li;
      tj["name"] = std::string("l") + std::to_string(li) + "." +
                   param_name(st.spec.kind, pi);
      tj["shape"] = t.shape;
      tj["offset"] = offset;
      tj["length"] = t.size() * static_cast<int64_t>(sizeof(float));
      tensors.push_back(tj);
      for (double x : t.v) blob.push_back(static_cast<float>(x));
      offset += t.size() * static_cast<int64_t>(sizeof(float));
    }
    if (st.spec.kind == LayerKind::BatchNorm) {
      json bj;
      bj["layer"] = li;
      bj["momentum"] = st.bn_momentum;
      bj["eps"] = st.bn_eps;
      bj["running_mean"] = st.stats[0].v;
      bj["running_var"] = st.stats[1].v;
      bn.push_back(bj);
    }
  }
  manifest["layers"] = layers;
  manifest["tensors"] = tensors;
  manifest["bn_state"] = bn;
  if (!extra.empty()) manifest["train"] = extra;

  const std::string mtext = manifest.dump();
  const uint64_t msize = mtext.size();

  std::ofstream out(path, std::ios::binary);
  require(out.good(), Errc::IoFailure, "cannot open " + path + " for writing");
  out.write(kMagic, 8);
  char szbuf[8];
  for (int i = 0; i < 8; ++i) szbuf[i] = static_cast<char>((msize >> (8 * i)) & 0xff);
  out.write(szbuf, 8);
  out.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
  out.write(reinterpret_cast<const char*>(blob.data()),
            static_cast<std::streamsize>(blob.size() * sizeof(float)));
  out.flush();
  require(out.good(), Errc::IoFailure, "write failed: " + path);
}

NetworkModel load_model(const std::string& path, json* manifest_out) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::IoFailure, "cannot open " + path);

  char magic[8];
  in.read(magic, 8);
  require(in.gcount() == 8 && std::memcmp(magic, kMagic, 8) == 0, Errc::ManifestMismatch,
          "not a model file: " + path);
  char szbuf[8];
  in.read(szbuf, 8);
  require(in.gcount() == 8, Errc::ManifestMismatch, "truncated header: " + path);
  uint64_t msize = 0;
  for (int i = 0; i < 8; ++i)
    msize |= static_cast<uint64_t>(static_cast<unsigned char>(szbuf[i])) << (8 * i);
  require(msize < (1ull << 31), Errc::ManifestMismatch, "implausible manifest size");

  std::string mtext(msize, '\0');
  in.read(mtext.data(), static_cast<std::streamsize>(msize));
  require(static_cast<uint64_t>(in.gcount()) == msize, Errc::ManifestMismatch,
          "truncated manifest: " + path);

  json manifest;
  try {
    manifest = json::parse(mtext);
  } catch (const json::exception& e) {
    fail(Errc::ManifestMismatch, std::string("bad manifest JSON: ") + e.what());
  }
  if (manifest_out) *manifest_out = manifest;

  std::vector<LayerSpec> specs;
  for (const json& lj : manifest.at("layers")) specs.push_back(spec_from_json(lj));

  NetworkModel m;
  try {
    m = build_model(specs, manifest.at("input_len").get<int>(),
                    manifest.at("n_classes").get<int>(),
                    manifest.value("init_seed", uint64_t{0}),
                    manifest.value("arch_id", std::string{}));
  } catch (const Error& e) {
    fail(Errc::ManifestMismatch, std::string("inconsistent specs: ") + e.what());
  }

  // overwrite initialized parameters with the stored blob
  std::vector<const json*> tensor_entries;
  for (const json& tj : manifest.at("tensors")) tensor_entries.push_back(&tj);
  size_t te = 0;
  int64_t blob_len = 0;
  for (const json* tj : tensor_entries)
    blob_len = std::max(blob_len, tj->at("offset").get<int64_t>() + tj->at("length").get<int64_t>());

  std::vector<float> blob(static_cast<size_t>(blob_len) / sizeof(float));
  in.read(reinterpret_cast<char*>(blob.data()), blob_len);
  require(in.gcount() == blob_len, Errc::ManifestMismatch, "truncated weight blob: " + path);

  for (size_t li = 0; li < m.layers.size(); ++li) {
    LayerState& st = m.layers[li];
    for (size_t pi = 0; pi < st.params.size(); ++pi) {
      require(te < tensor_entries.size(), Errc::ManifestMismatch, "missing tensor entries");
      const json& tj = *tensor_entries[te++];
      Tensor& t = st.params[pi];
      require(tj.at("layer").get<size_t>() == li, Errc::ManifestMismatch,
              "tensor order mismatch");
      require(tj.at("shape").get<std::vector<int>>() == t.shape, Errc::ManifestMismatch,
              "tensor shape mismatch at layer " + std::to_string(li));
      const int64_t off = tj.at("offset").get<int64_t>();
      const int64_t len = tj.at("length").get<int64_t>();
      require(len == t.size() * static_cast<int64_t>(sizeof(float)), Errc::ManifestMismatch,
              "tensor length mismatch at layer " + std::to_string(li));
      require(off % sizeof(float) == 0, Errc::ManifestMismatch, "misaligned tensor offset");
      const float* src = blob.data() + off / sizeof(float);
      for (int64_t j = 0; j < t.size(); ++j) t.v[j] = static_cast<double>(src[j]);
    }
  }
  require(te == tensor_entries.size(), Errc::ManifestMismatch, "extra tensor entries");

  for (const json& bj : manifest.at("bn_state")) {
    const size_t li = bj.at("layer").get<size_t>();
    require(li < m.layers.size() && m.layers[li].spec.kind == LayerKind::BatchNorm,
            Errc::ManifestMismatch, "bn_state points at a non-BN layer");
    LayerState& st = m.layers[li];
    auto rm = bj.at("running_mean").get<std::vector<double>>();
    auto rv = bj.at("running_var").get<std::vector<double>>();
    require(rm.size() == st.stats[0].v.size() && rv.size() == st.stats[1].v.size(),
            Errc::ManifestMismatch, "bn_state size mismatch");
    st.stats[0].v = std::move(rm);
    st.stats[1].v = std::move(rv);
    st.bn_momentum = bj.value("momentum", 0.1);
    st.bn_eps = bj.value("eps", 1e-5);
  }
  return m;
}

std::string model_manifest_hash(const std::string& path) {
  json manifest;
  load_model(path, &manifest);
  const std::string text = manifest.dump();
  uint64_t h = Rng::fnv1a(text);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace pqadv
