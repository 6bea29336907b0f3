#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <type_traits>

namespace le3d {

/// Opaque serialized estimator state for diagnostics.
struct Snapshot {
  std::uint32_t version = 1;
  std::string bytes;
};

/// Appends trivially copyable values to a byte string in host order.
class ByteWriter {
 public:
  template <class T>
    requires std::is_trivially_copyable_v<T>
  ByteWriter& put(const T& v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
    return *this;
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

}  // namespace le3d
