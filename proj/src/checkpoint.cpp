#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "safer/errors.hpp"
#include "safer/model.hpp"

namespace safer {

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'F', 'R', '2', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

template <class UInt>
void put_le(std::ostream& os, UInt value) {
  std::array<char, sizeof(UInt)> bytes;
  for (std::size_t b = 0; b < sizeof(UInt); ++b) bytes[b] = static_cast<char>((value >> (8 * b)) & 0xff);
  os.write(bytes.data(), bytes.size());
}

template <class UInt>
UInt get_le(std::istream& is) {
  std::array<unsigned char, sizeof(UInt)> bytes{};
  is.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!is) throw DataError("checkpoint is truncated");
  UInt value = 0;
  for (std::size_t b = 0; b < sizeof(UInt); ++b) value |= static_cast<UInt>(bytes[b]) << (8 * b);
  return value;
}

void put_double(std::ostream& os, double x) { put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(x)); }
double get_double(std::istream& is) { return std::bit_cast<double>(get_le<std::uint64_t>(is)); }

}  // namespace

void save_checkpoint(const ModelState& state, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write checkpoint " + path.string());
  os.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(os, kFormatVersion);
  put_le<std::uint64_t>(os, state.num_users());
  put_le<std::uint64_t>(os, state.num_items());
  put_le<std::uint64_t>(os, state.dim());
  for (const Matrix* m : {&state.users(), &state.items()}) {
    for (Eigen::Index r = 0; r < m->rows(); ++r)
      for (Eigen::Index c = 0; c < m->cols(); ++c) put_double(os, (*m)(r, c));
  }
  put_double(os, state.xi);
  for (Eigen::Index i = 0; i < state.dual.size(); ++i) put_double(os, state.dual[i]);
  if (!os) throw DataError("failed writing checkpoint " + path.string());
}

ModelState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint " + path.string());
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw DataError(path.string() + " is not a model checkpoint");
  const auto version = get_le<std::uint32_t>(is);
  if (version != kFormatVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
  const auto nu = get_le<std::uint64_t>(is);
  const auto ni = get_le<std::uint64_t>(is);
  const auto d = get_le<std::uint64_t>(is);
  if (d == 0 || nu > (1ULL << 32) || ni > (1ULL << 32) || d > (1ULL << 16)) {
    throw DataError("checkpoint header has implausible dimensions");
  }
  ModelState state(nu, ni, d);
  for (Matrix* m : {&state.mutable_users(), &state.mutable_items()}) {
    for (Eigen::Index r = 0; r < m->rows(); ++r)
      for (Eigen::Index c = 0; c < m->cols(); ++c) (*m)(r, c) = get_double(is);
  }
  state.xi = get_double(is);
  for (Eigen::Index i = 0; i < state.dual.size(); ++i) state.dual[i] = get_double(is);
  is.peek();
  if (!is.eof()) throw DataError("checkpoint has trailing bytes");
  return state;
}

}  // namespace safer
