#include "gridcast/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "gridcast/errors.hpp"

namespace gridcast {

namespace {

constexpr char kMagic[8] = {'G', 'C', 'K', 'P', 'T', '0', '0', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_i64(std::ostream& os, std::int64_t v) {
  auto u = static_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  put_i64(os, static_cast<std::int64_t>(u));
}

void put_string(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw DataError("checkpoint: truncated file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::int64_t get_i64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw DataError("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return static_cast<std::int64_t>(v);
}

double get_f64(std::istream& is) {
  auto u = static_cast<std::uint64_t>(get_i64(is));
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

std::string get_string(std::istream& is) {
  std::uint32_t len = get_u32(is);
  if (len > (1u << 20)) throw DataError("checkpoint: implausible string length");
  std::string s(len, '\0');
  is.read(s.data(), len);
  if (!is) throw DataError("checkpoint: truncated file");
  return s;
}

}  // namespace

bool Checkpoint::has_meta(const std::string& key) const {
  for (const auto& [k, v] : meta) {
    if (k == key) return true;
  }
  return false;
}

std::int64_t Checkpoint::meta_value(const std::string& key) const {
  for (const auto& [k, v] : meta) {
    if (k == key) return v;
  }
  throw DataError("checkpoint: missing metadata key '" + key + "'");
}

void Checkpoint::set_meta(const std::string& key, std::int64_t value) {
  for (auto& [k, v] : meta) {
    if (k == key) {
      v = value;
      return;
    }
  }
  meta.emplace_back(key, value);
}

const NamedTensor* Checkpoint::find_tensor(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("checkpoint: cannot open '" + path + "' for writing");

  os.write(kMagic, sizeof(kMagic));
  put_u32(os, static_cast<std::uint32_t>(ckpt.meta.size()));
  for (const auto& [k, v] : ckpt.meta) {
    put_string(os, k);
    put_i64(os, v);
  }
  put_u32(os, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    put_string(os, t.name);
    put_u32(os, static_cast<std::uint32_t>(t.dims.size()));
    std::size_t count = 1;
    for (std::int64_t d : t.dims) {
      put_i64(os, d);
      count *= static_cast<std::size_t>(d);
    }
    if (count != t.values.size()) {
      throw DataError("checkpoint: tensor '" + t.name +
                      "' values do not match dims");
    }
    for (double v : t.values) put_f64(os, v);
  }
  os.flush();
  if (!os) throw DataError("checkpoint: write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("checkpoint: cannot open '" + path + "'");

  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("checkpoint: bad magic in '" + path +
                    "' (not a gridcast checkpoint, or unsupported version)");
  }

  Checkpoint ckpt;
  std::uint32_t n_meta = get_u32(is);
  ckpt.meta.reserve(n_meta);
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string key = get_string(is);
    std::int64_t value = get_i64(is);
    ckpt.meta.emplace_back(std::move(key), value);
  }

  std::uint32_t n_tensors = get_u32(is);
  ckpt.tensors.reserve(n_tensors);
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    NamedTensor t;
    t.name = get_string(is);
    std::uint32_t ndim = get_u32(is);
    if (ndim > 8) throw DataError("checkpoint: implausible tensor rank");
    std::size_t count = 1;
    t.dims.resize(ndim);
    for (std::uint32_t d = 0; d < ndim; ++d) {
      t.dims[d] = get_i64(is);
      if (t.dims[d] <= 0) throw DataError("checkpoint: non-positive dim");
      count *= static_cast<std::size_t>(t.dims[d]);
    }
    t.values.resize(count);
    for (std::size_t k = 0; k < count; ++k) t.values[k] = get_f64(is);
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

namespace {

std::vector<std::int64_t> kernel_dims(const ConvKernel& k) {
  return {k.out_channels, k.in_channels, k.kh, k.kw};
}

std::vector<std::int64_t> grid_dims(const Grid3& g) {
  return {g.channels, g.height, g.width};
}

}  // namespace

Checkpoint pack_network(const NetworkSpec& spec, const NetworkParams& params) {
  validate_network(spec, params);
  Checkpoint ckpt;
  ckpt.set_meta("layer1_filters", spec.layer1_filters);
  ckpt.set_meta("layer2_filters", spec.layer2_filters);
  ckpt.set_meta("kernel_h", spec.kernel_h);
  ckpt.set_meta("kernel_w", spec.kernel_w);
  ckpt.set_meta("activation", spec.cell_activation == Activation::Relu ? 1 : 0);
  ckpt.set_meta("peepholes", spec.peepholes ? 1 : 0);
  ckpt.set_meta("input_channels", spec.input_channels);
  ckpt.set_meta("grid_h", spec.grid_h);
  ckpt.set_meta("grid_w", spec.grid_w);

  const NetworkParams& p = params;
  auto add_cell = [&ckpt](const std::string& prefix, const CellParams& c) {
    auto add_kernel = [&](const std::string& name, const ConvKernel& k) {
      ckpt.tensors.push_back({prefix + "/" + name, kernel_dims(k), k.data});
    };
    auto add_grid = [&](const std::string& name, const Grid3& g) {
      ckpt.tensors.push_back({prefix + "/" + name, grid_dims(g), g.data});
    };
    auto add_vec = [&](const std::string& name, const std::vector<double>& v) {
      ckpt.tensors.push_back(
          {prefix + "/" + name,
           {static_cast<std::int64_t>(v.size())},
           v});
    };
    add_kernel("w_xi", c.w_xi);
    add_kernel("w_xf", c.w_xf);
    add_kernel("w_xc", c.w_xc);
    add_kernel("w_xo", c.w_xo);
    add_kernel("w_hi", c.w_hi);
    add_kernel("w_hf", c.w_hf);
    add_kernel("w_hc", c.w_hc);
    add_kernel("w_ho", c.w_ho);
    add_grid("w_ci", c.w_ci);
    add_grid("w_cf", c.w_cf);
    add_grid("w_co", c.w_co);
    add_vec("b_i", c.b_i);
    add_vec("b_f", c.b_f);
    add_vec("b_c", c.b_c);
    add_vec("b_o", c.b_o);
  };
  add_cell("layer1", p.layer1);
  add_cell("layer2", p.layer2);
  ckpt.tensors.push_back(
      {"head/weight", kernel_dims(p.head_weight), p.head_weight.data});
  ckpt.tensors.push_back(
      {"head/bias", {static_cast<std::int64_t>(p.head_bias.size())},
       p.head_bias});
  return ckpt;
}

std::pair<NetworkSpec, NetworkParams> unpack_network(const Checkpoint& ckpt) {
  NetworkSpec spec;
  spec.layer1_filters = static_cast<int>(ckpt.meta_value("layer1_filters"));
  spec.layer2_filters = static_cast<int>(ckpt.meta_value("layer2_filters"));
  spec.kernel_h = static_cast<int>(ckpt.meta_value("kernel_h"));
  spec.kernel_w = static_cast<int>(ckpt.meta_value("kernel_w"));
  spec.cell_activation =
      ckpt.meta_value("activation") == 1 ? Activation::Relu : Activation::Tanh;
  spec.peepholes = ckpt.meta_value("peepholes") == 1;
  spec.input_channels = static_cast<int>(ckpt.meta_value("input_channels"));
  spec.grid_h = static_cast<int>(ckpt.meta_value("grid_h"));
  spec.grid_w = static_cast<int>(ckpt.meta_value("grid_w"));
  spec.validate();

  NetworkParams params;
  params.layer1 = CellParams(spec.layer1_filters, spec.input_channels,
                             spec.kernel_h, spec.kernel_w, spec.grid_h,
                             spec.grid_w);
  params.layer2 = CellParams(spec.layer2_filters, spec.layer1_filters,
                             spec.kernel_h, spec.kernel_w, spec.grid_h,
                             spec.grid_w);
  params.head_weight = ConvKernel(1, spec.layer2_filters, 1, 1);
  params.head_bias.assign(1, 0.0);

  for (TensorRef& ref : tensor_refs(params)) {
    const NamedTensor* t = ckpt.find_tensor(ref.name);
    if (t == nullptr) {
      throw DataError("checkpoint: missing tensor '" + ref.name + "'");
    }
    if (t->values.size() != ref.values->size()) {
      throw DataError("checkpoint: tensor '" + ref.name +
                      "' has wrong element count");
    }
    *ref.values = t->values;
  }
  validate_network(spec, params);
  return {spec, params};
}

}  // namespace gridcast
