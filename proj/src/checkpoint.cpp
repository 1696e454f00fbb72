#include "sgr/checkpoint.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>

#include "sgr/errors.hpp"

namespace sgr {
namespace {

constexpr std::array<char, 8> kMagic = {'S', 'G', 'R', 'C', 'K', 'P', 'T', '\0'};

template <typename U>
void put_le(std::ostream& out, U v) {
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename U>
U get_le(std::istream& in) {
  std::array<unsigned char, sizeof(U)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw FormatError("checkpoint truncated");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[i]) << (8 * i);
  return v;
}

void put_u32(std::ostream& out, std::uint64_t v) {
  if (v > 0xFFFFFFFFull) throw FormatError("value does not fit in u32");
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(v));
}

void put_f64(std::ostream& out, double v) { put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in, std::size_t limit = 1u << 26) {
  const auto n = get_le<std::uint32_t>(in);
  if (n > limit) throw FormatError("checkpoint string length " + std::to_string(n) + " is implausible");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw FormatError("checkpoint truncated");
  return s;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  const auto& c = ckpt.config;
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint64_t>(c.hop));
  put_u32(out, static_cast<std::uint64_t>(c.iters));
  put_u32(out, static_cast<std::uint64_t>(c.dim));
  put_u32(out, static_cast<std::uint64_t>(c.score_hidden));
  put_u32(out, static_cast<std::uint64_t>(ckpt.num_relations));
  put_u32(out, static_cast<std::uint64_t>(c.f1));
  put_u32(out, static_cast<std::uint64_t>(c.f2));
  put_u32(out, static_cast<std::uint64_t>(c.attention));
  put_u32(out, c.edge_update ? 1 : 0);
  put_u32(out, c.relation_in_edge_update ? 1 : 0);
  put_f64(out, c.edge_dropout);
  put_u32(out, ckpt.relation_names.size());
  for (const auto& name : ckpt.relation_names) put_string(out, name);
  put_string(out, ckpt.config_echo);
  put_u32(out, ckpt.params.size());
  for (const auto& p : ckpt.params) {
    put_string(out, p.name);
    put_le<std::uint64_t>(out, p.value.rows);
    put_le<std::uint64_t>(out, p.value.cols);
    for (const double v : p.value.data) put_f64(out, v);
  }
  if (!out) throw IoError("checkpoint write failed");
}

void save_checkpoint(const std::filesystem::path& file, const Model& model,
                     const std::vector<std::string>& relation_names,
                     const std::string& config_echo) {
  Checkpoint ckpt{model.config(), model.num_relations(), relation_names, config_echo, model.params()};
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + file.string());
  write_checkpoint(out, ckpt);
}

Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw FormatError("not a checkpoint (bad magic)");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  auto& c = ckpt.config;
  c.hop = static_cast<int>(get_le<std::uint32_t>(in));
  c.iters = static_cast<int>(get_le<std::uint32_t>(in));
  c.dim = static_cast<int>(get_le<std::uint32_t>(in));
  c.score_hidden = static_cast<int>(get_le<std::uint32_t>(in));
  ckpt.num_relations = static_cast<int>(get_le<std::uint32_t>(in));
  const auto f1 = get_le<std::uint32_t>(in);
  const auto f2 = get_le<std::uint32_t>(in);
  const auto attention = get_le<std::uint32_t>(in);
  if (f1 > 3 || f2 > 3 || attention > 2) throw FormatError("checkpoint has unknown enum value");
  c.f1 = static_cast<Activation>(f1);
  c.f2 = static_cast<Activation>(f2);
  c.attention = static_cast<AttentionMode>(attention);
  c.edge_update = get_le<std::uint32_t>(in) != 0;
  c.relation_in_edge_update = get_le<std::uint32_t>(in) != 0;
  c.edge_dropout = get_f64(in);
  const auto n_names = get_le<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_names; ++i) ckpt.relation_names.push_back(get_string(in));
  ckpt.config_echo = get_string(in);
  const auto n_params = get_le<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_params; ++i) {
    auto name = get_string(in, 4096);
    const auto rows = get_le<std::uint64_t>(in);
    const auto cols = get_le<std::uint64_t>(in);
    if (rows * cols > (1ull << 32)) throw FormatError("parameter '" + name + "' is implausibly large");
    const auto idx = ckpt.params.add(std::move(name), rows, cols);
    for (double& v : ckpt.params[idx].value.data) v = get_f64(in);
  }
  return ckpt;
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + file.string());
  return read_checkpoint(in);
}

Model model_from_checkpoint(const Checkpoint& ckpt) {
  return Model(ckpt.config, ckpt.num_relations, ckpt.params);
}

}  // namespace sgr
