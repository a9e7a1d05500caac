// SPDX-License-Identifier: Apache-2.0
#include "graphlog/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "graphlog/errors.hpp"

namespace graphlog {

namespace {

constexpr char kMagic[4] = {'G', 'L', 'O', 'G'};
constexpr uint32_t kVersion = 1;
constexpr uint32_t kFlagForest = 1u << 0;
constexpr uint32_t kFlagOptim = 1u << 1;
constexpr uint32_t kFlagHead = 1u << 2;

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw DataError("checkpoint: cannot open '" + path + "' for writing");
  }
  void u32(uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out_.write(reinterpret_cast<char*>(b), 4);
  }
  void u64(uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out_.write(reinterpret_cast<char*>(b), 8);
  }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void bytes(const void* p, size_t n) { out_.write(static_cast<const char*>(p), n); }
  void f64_array(const std::vector<double>& v) {
    for (double x : v) f64(x);
  }
  void tensor(const TensorPtr& t) {
    for (size_t i = 0; i < t->size(); ++i) f64(t->value(i));
  }
  void close() {
    out_.flush();
    if (!out_) throw DataError("checkpoint: write failed");
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw DataError("checkpoint: cannot open '" + path + "'");
  }
  uint32_t u32() {
    unsigned char b[4];
    read(b, 4);
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  uint64_t u64() {
    unsigned char b[8];
    read(b, 8);
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  double f64() {
    const uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::vector<double> f64_array(size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }
  void read(void* p, size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) {
      throw DataError("checkpoint: truncated file '" + path_ + "'");
    }
  }

 private:
  std::ifstream in_;
  std::string path_;
};

TensorPtr read_tensor(Reader& r, size_t rows, size_t cols, DType dt, bool requires_grad) {
  auto t = Tensor::zeros(rows, cols, dt, requires_grad);
  for (size_t i = 0; i < rows * cols; ++i) t->set_value(i, r.f64());
  return t;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  Writer w(path);
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  uint32_t flags = 0;
  if (ckpt.forest) flags |= kFlagForest;
  if (ckpt.has_optim) flags |= kFlagOptim;
  if (ckpt.head) flags |= kFlagHead;
  w.u32(flags);

  const GinParams& g = ckpt.gin;
  w.u32(g.layers);
  w.u32(g.hidden_dim);
  w.u32(static_cast<uint32_t>(g.node_vocab.size()));
  for (int32_t v : g.node_vocab) w.u32(static_cast<uint32_t>(v));
  w.u32(static_cast<uint32_t>(g.edge_vocab.size()));
  for (int32_t v : g.edge_vocab) w.u32(static_cast<uint32_t>(v));

  const std::string cfg = ckpt.config.to_ini();
  w.u64(cfg.size());
  w.bytes(cfg.data(), cfg.size());

  w.u32(ckpt.phase);
  w.u32(ckpt.epoch);
  w.u32(ckpt.step_in_epoch);
  w.u64(ckpt.global_step);

  for (const auto& t : g.node_tables) w.tensor(t);
  for (const auto& t : g.edge_tables) w.tensor(t);
  for (const auto& m : g.mlps) {
    w.tensor(m.w1);
    w.tensor(m.b1);
    w.tensor(m.w2);
    w.tensor(m.b2);
  }

  if (ckpt.head) {
    w.u32(static_cast<uint32_t>(ckpt.head->w->cols()));
    w.tensor(ckpt.head->w);
    w.tensor(ckpt.head->b);
  }

  if (ckpt.forest) {
    const PrototypeForest& f = *ckpt.forest;
    w.u32(f.depth);
    for (uint32_t l = 0; l < f.depth; ++l) w.u32(f.layer_size(l));
    for (uint32_t l = 1; l < f.depth; ++l) {
      for (uint32_t p : f.parent[l]) w.u32(p);
    }
    w.u64(f.bottom_assignment.size());
    for (uint32_t a : f.bottom_assignment) w.u32(a);
    for (uint32_t l = 0; l < f.depth; ++l) w.tensor(f.layers[l]);
  }

  if (ckpt.has_optim) {
    w.u64(ckpt.adam_step);
    w.u64(ckpt.adam_m.size());
    for (size_t i = 0; i < ckpt.adam_m.size(); ++i) {
      w.u64(ckpt.adam_m[i].size());
      w.f64_array(ckpt.adam_m[i]);
      w.f64_array(ckpt.adam_v[i]);
    }
  }
  w.close();
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[4];
  r.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError("checkpoint: bad magic in '" + path + "'");
  }
  const uint32_t version = r.u32();
  if (version != kVersion) {
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  }
  const uint32_t flags = r.u32();

  Checkpoint c;
  GinParams& g = c.gin;
  g.layers = r.u32();
  g.hidden_dim = r.u32();
  const uint32_t node_slots = r.u32();
  for (uint32_t s = 0; s < node_slots; ++s) g.node_vocab.push_back(static_cast<int32_t>(r.u32()));
  const uint32_t edge_slots = r.u32();
  for (uint32_t s = 0; s < edge_slots; ++s) g.edge_vocab.push_back(static_cast<int32_t>(r.u32()));

  const uint64_t cfg_len = r.u64();
  std::string cfg_text(cfg_len, '\0');
  r.read(cfg_text.data(), cfg_len);
  c.config = parse_config(cfg_text);
  const DType dt = c.config.train.dtype;

  c.phase = r.u32();
  c.epoch = r.u32();
  c.step_in_epoch = r.u32();
  c.global_step = r.u64();

  const size_t d = g.hidden_dim;
  for (uint32_t s = 0; s < node_slots; ++s) {
    g.node_tables.push_back(read_tensor(r, static_cast<size_t>(g.node_vocab[s]) + 1, d, dt, true));
  }
  for (uint32_t s = 0; s < edge_slots; ++s) {
    g.edge_tables.push_back(read_tensor(r, static_cast<size_t>(g.edge_vocab[s]) + 1, d, dt, true));
  }
  for (uint32_t l = 0; l < g.layers; ++l) {
    GinParams::Mlp m;
    m.w1 = read_tensor(r, d, d, dt, true);
    m.b1 = read_tensor(r, 1, d, dt, true);
    m.w2 = read_tensor(r, d, d, dt, true);
    m.b2 = read_tensor(r, 1, d, dt, true);
    g.mlps.push_back(std::move(m));
  }

  if (flags & kFlagHead) {
    const uint32_t tasks = r.u32();
    LinearHead head;
    head.w = read_tensor(r, d, tasks, dt, true);
    head.b = read_tensor(r, 1, tasks, dt, true);
    c.head = std::move(head);
  }

  if (flags & kFlagForest) {
    PrototypeForest f;
    f.depth = r.u32();
    std::vector<uint32_t> sizes(f.depth);
    for (auto& s : sizes) s = r.u32();
    f.parent.resize(f.depth);
    f.children.resize(f.depth);
    for (uint32_t l = 1; l < f.depth; ++l) {
      f.parent[l].resize(sizes[l]);
      for (auto& p : f.parent[l]) p = r.u32();
    }
    const uint64_t nassign = r.u64();
    f.bottom_assignment.resize(nassign);
    for (auto& a : f.bottom_assignment) a = r.u32();
    for (uint32_t l = 0; l < f.depth; ++l) {
      f.layers.push_back(read_tensor(r, sizes[l], d, dt, true));
    }
    for (uint32_t l = 0; l + 1 < f.depth; ++l) {
      f.children[l].assign(sizes[l], {});
      for (uint32_t i = 0; i < sizes[l + 1]; ++i) {
        f.children[l][f.parent[l + 1][i]].push_back(i);
      }
    }
    f.validate();
    c.forest = std::move(f);
  }

  if (flags & kFlagOptim) {
    c.has_optim = true;
    c.adam_step = r.u64();
    const uint64_t nparams = r.u64();
    for (uint64_t i = 0; i < nparams; ++i) {
      const uint64_t len = r.u64();
      c.adam_m.push_back(r.f64_array(len));
      c.adam_v.push_back(r.f64_array(len));
    }
  }
  return c;
}

}  // namespace graphlog
