#ifndef TDD_FEATURE_MAP_HPP
#define TDD_FEATURE_MAP_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace tdd {

enum class Stream : std::uint8_t { kSpatial = 0, kTemporal = 1 };

const char* stream_name(Stream s);

/// 4-D feature-map tensor over a video: spatial extent H x W, temporal
/// length L, N channels. Storage follows the .tdt payload order exactly:
/// multi-index (x, y, z, n), n fastest, x slowest:
///   index = ((x * H + y) * L + z) * N + n.
/// Values produced by the extractor are nonnegative (post-activation);
/// the container itself also carries signed data such as exported flow.
struct FeatureMapStack {
  int height = 0;   // H
  int width = 0;    // W
  int length = 0;   // L
  int channels = 0; // N
  std::string layer_id;
  Stream stream = Stream::kSpatial;
  float scale = 1.0f;
  std::vector<float> data;

  FeatureMapStack() = default;
  FeatureMapStack(int h, int w, int l, int n)
      : height(h), width(w), length(l), channels(n),
        data(static_cast<std::size_t>(h) * w * l * n, 0.0f) {}

  std::size_t index(int x, int y, int z, int n) const {
    return ((static_cast<std::size_t>(x) * height + y) * length + z) *
               channels + n;
  }
  float& at(int x, int y, int z, int n) { return data[index(x, y, z, n)]; }
  float at(int x, int y, int z, int n) const { return data[index(x, y, z, n)]; }

  std::size_t element_count() const {
    return static_cast<std::size_t>(height) * width * length * channels;
  }
};

/// .tdt tensor file: magic "TDT1"; u32 little-endian H, W, L, N; u8 stream
/// tag; f32 little-endian scale; f32 little-endian payload, (x, y, z, n)
/// order with n fastest. Round-trips are bit-exact.
/// write_tensor throws DataError on I/O failure; read_tensor throws
/// DataError with "bad magic", "dimension overflow" or "truncated" for the
/// corresponding malformed inputs. layer_id is not stored in the file; it
/// travels in the file name.
void write_tensor(const FeatureMapStack& stack, const std::string& path);
FeatureMapStack read_tensor(const std::string& path);

}  // namespace tdd

#endif  // TDD_FEATURE_MAP_HPP
