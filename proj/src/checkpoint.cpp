#include "revib/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "revib/errors.hpp"

namespace revib::nn {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

constexpr char kMagic[8] = {'R', 'E', 'V', 'I', 'B', 'C', 'K', 'P'};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::filesystem::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw ParseError("truncated checkpoint " + path.string(), 0);
  }
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamStore& ps) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kCheckpointVersion);
  put<std::uint64_t>(os, ps.seed());
  put<std::uint32_t>(os, static_cast<std::uint32_t>(ps.size()));
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const std::string& name = ps.name(i);
    const Tensor& t = ps[i].value();
    put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put<std::uint64_t>(os, d);
    os.write(reinterpret_cast<const char*>(t.data().data()),
             static_cast<std::streamsize>(t.numel() * sizeof(double)));
  }
  if (!os) throw Error("failed writing " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint " + path.string());
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw ParseError(path.string() + " is not a checkpoint file", 0);
  }
  Checkpoint ck;
  ck.version = get<std::uint32_t>(is, path);
  if (ck.version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(ck.version), 0);
  }
  ck.seed = get<std::uint64_t>(is, path);
  const auto count = get<std::uint32_t>(is, path);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = get<std::uint32_t>(is, path);
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw ParseError("truncated checkpoint name", 0);
    const auto rank = get<std::uint32_t>(is, path);
    Shape shape;
    for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(get<std::uint64_t>(is, path));
    Tensor t(shape);
    if (!is.read(reinterpret_cast<char*>(t.data().data()),
                 static_cast<std::streamsize>(t.numel() * sizeof(double)))) {
      throw ParseError("truncated tensor data for " + name, 0);
    }
    ck.tensors.emplace_back(std::move(name), std::move(t));
  }
  return ck;
}

void load_checkpoint(const std::filesystem::path& path, ParamStore& ps) {
  const Checkpoint ck = read_checkpoint(path);
  if (ck.tensors.size() != ps.size()) {
    throw ShapeError("checkpoint holds " + std::to_string(ck.tensors.size()) +
                     " tensors, model expects " + std::to_string(ps.size()));
  }
  for (const auto& [name, t] : ck.tensors) {
    Var& p = ps[ps.id_of(name)];
    if (p.shape() != t.shape()) {
      throw ShapeError("checkpoint tensor " + name + " has shape " + shape_str(t.shape()) +
                       ", model expects " + shape_str(p.shape()));
    }
    p.mutable_value() = t;
  }
}

}  // namespace revib::nn
