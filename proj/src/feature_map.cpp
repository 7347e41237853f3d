#include "tdd/feature_map.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include "tdd/errors.hpp"

namespace tdd {

const char* stream_name(Stream s) {
  return s == Stream::kSpatial ? "spatial" : "temporal";
}

namespace {

constexpr char kMagic[4] = {'T', 'D', 'T', '1'};
constexpr std::uint64_t kMaxElements = 1ull << 32;

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f32(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

float get_f32(const unsigned char* p) {
  const std::uint32_t bits = get_u32(p);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace

void write_tensor(const FeatureMapStack& stack, const std::string& path) {
  std::string header;
  header.append(kMagic, 4);
  put_u32(header, static_cast<std::uint32_t>(stack.height));
  put_u32(header, static_cast<std::uint32_t>(stack.width));
  put_u32(header, static_cast<std::uint32_t>(stack.length));
  put_u32(header, static_cast<std::uint32_t>(stack.channels));
  header.push_back(static_cast<char>(stack.stream));
  put_f32(header, stack.scale);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("write_tensor: cannot open " + path);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  // f32 payload, written verbatim; the build targets little-endian hosts.
  out.write(reinterpret_cast<const char*>(stack.data.data()),
            static_cast<std::streamsize>(stack.data.size() * sizeof(float)));
  if (!out) throw DataError("write_tensor: write failed for " + path);
}

FeatureMapStack read_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw DataError("read_tensor: cannot open " + path);
  const std::streamoff file_size = in.tellg();
  in.seekg(0);

  constexpr std::streamoff kHeaderSize = 4 + 4 * 4 + 1 + 4;
  if (file_size < kHeaderSize)
    throw DataError("read_tensor: truncated header in " + path);

  std::array<unsigned char, kHeaderSize> header{};
  in.read(reinterpret_cast<char*>(header.data()), kHeaderSize);
  if (std::memcmp(header.data(), kMagic, 4) != 0)
    throw DataError("read_tensor: bad magic in " + path);

  const std::uint32_t h = get_u32(header.data() + 4);
  const std::uint32_t w = get_u32(header.data() + 8);
  const std::uint32_t l = get_u32(header.data() + 12);
  const std::uint32_t n = get_u32(header.data() + 16);
  const std::uint8_t stream_tag = header[20];
  const float scale = get_f32(header.data() + 21);

  if (h == 0 || w == 0 || l == 0 || n == 0)
    throw DataError("read_tensor: zero dimension in " + path);
  const std::uint64_t count =
      static_cast<std::uint64_t>(h) * w * l * n;
  if (count > kMaxElements)
    throw DataError("read_tensor: dimension overflow in " + path);
  if (stream_tag > 1)
    throw DataError("read_tensor: unknown stream tag in " + path);

  const std::uint64_t payload = static_cast<std::uint64_t>(file_size) - kHeaderSize;
  if (payload < count * sizeof(float))
    throw DataError("read_tensor: truncated payload in " + path);
  if (payload > count * sizeof(float))
    throw DataError("read_tensor: payload size mismatch in " + path);

  FeatureMapStack stack(static_cast<int>(h), static_cast<int>(w),
                        static_cast<int>(l), static_cast<int>(n));
  stack.stream = static_cast<Stream>(stream_tag);
  stack.scale = scale;
  in.read(reinterpret_cast<char*>(stack.data.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (!in) throw DataError("read_tensor: read failed for " + path);
  return stack;
}

}  // namespace tdd
