#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ragmt/error.hpp"
#include "ragmt/retrieval.hpp"

namespace ragmt {
namespace {

constexpr char kMagic[8] = {'R', 'A', 'G', 'M', 'T', 'I', 'D', 'X'};

template <class T>
void put_le(std::ostream& out, T value) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
  }
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw FormatError("index snapshot truncated");
  }
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(v);
}

void put_string(std::ostream& out, const std::string& s) {
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto len = get_le<std::uint32_t>(in);
  if (len > (1u << 20)) throw FormatError("index snapshot string too long");
  std::string s(len, '\0');
  if (len > 0 && !in.read(s.data(), len)) throw FormatError("index snapshot truncated");
  return s;
}

}  // namespace

VectorIndex::VectorIndex(std::size_t dim, std::string encoder_id)
    : dim_(dim), encoder_id_(std::move(encoder_id)) {
  if (dim_ == 0) throw InvalidArgument("index dim must be >= 1");
}

void VectorIndex::add(std::string pair_id, const Embedding& embedding) {
  if (embedding.encoder_id != encoder_id_) {
    throw DimensionMismatch("embedding from encoder '" + embedding.encoder_id +
                            "' added to index for '" + encoder_id_ + "'");
  }
  if (embedding.dim() != dim_) {
    throw DimensionMismatch("embedding of dim " + std::to_string(embedding.dim()) +
                            " added to index of dim " + std::to_string(dim_));
  }
  for (double v : embedding.vector) {
    if (!std::isfinite(v)) throw InvalidArgument("non-finite embedding component for " + pair_id);
  }
  if (!id_set_.insert(pair_id).second) {
    throw InvalidArgument("duplicate pair id in index: " + pair_id);
  }
  ids_.push_back(std::move(pair_id));
  for (double v : embedding.vector) data_.push_back(static_cast<float>(v));
}

std::span<const float> VectorIndex::vector(std::size_t i) const {
  if (i >= ids_.size()) throw std::out_of_range("index entry out of range");
  return std::span<const float>(data_.data() + i * dim_, dim_);
}

void VectorIndex::save(std::ostream& out) const {
  out.write(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(dim_));
  put_string(out, encoder_id_);
  put_le<std::uint64_t>(out, ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    put_string(out, ids_[i]);
    for (float f : vector(i)) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
  }
}

void VectorIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write index snapshot " + path.string());
  save(out);
  if (!out) throw Error("failed writing index snapshot " + path.string());
}

std::string VectorIndex::serialize() const {
  std::ostringstream os(std::ios::binary);
  save(os);
  return os.str();
}

VectorIndex VectorIndex::load(std::istream& in) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not an index snapshot (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(in);
  if (version != kFormatVersion) {
    throw FormatError("unsupported index snapshot version " + std::to_string(version));
  }
  const auto dim = get_le<std::uint32_t>(in);
  VectorIndex index(dim, get_string(in));
  const auto count = get_le<std::uint64_t>(in);
  for (std::uint64_t n = 0; n < count; ++n) {
    std::string id = get_string(in);
    Embedding e{std::vector<double>(dim), index.encoder_id_};
    for (auto& v : e.vector) v = std::bit_cast<float>(get_le<std::uint32_t>(in));
    index.add(std::move(id), e);
  }
  return index;
}

VectorIndex VectorIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open index snapshot " + path.string());
  return load(in);
}

}  // namespace ragmt
