#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace vlab {

using ByteVector = std::vector<std::uint8_t>;

/// An immutable view into a reference-counted byte buffer. Slicing a frame
/// into segments and packets shares the frame's storage.
class SharedBytes {
 public:
  SharedBytes() = default;
  explicit SharedBytes(ByteVector bytes)
      : buf_(std::make_shared<const ByteVector>(std::move(bytes))), off_(0), len_(buf_->size()) {}
  SharedBytes(std::shared_ptr<const ByteVector> buf, std::size_t off, std::size_t len)
      : buf_(std::move(buf)), off_(off), len_(len) {}

  std::size_t size() const { return len_; }
  bool empty() const { return len_ == 0; }
  const std::uint8_t* data() const { return buf_ ? buf_->data() + off_ : nullptr; }
  std::span<const std::uint8_t> span() const { return {data(), len_}; }

  SharedBytes slice(std::size_t off, std::size_t len) const {
    return SharedBytes(buf_, off_ + off, len);
  }

  ByteVector to_vector() const { return ByteVector(data(), data() + len_); }

  friend bool operator==(const SharedBytes& a, const SharedBytes& b) {
    if (a.len_ != b.len_) return false;
    if (a.len_ == 0) return true;
    if (a.data() == b.data()) return true;
    const auto sa = a.span();
    const auto sb = b.span();
    return std::equal(sa.begin(), sa.end(), sb.begin());
  }

 private:
  std::shared_ptr<const ByteVector> buf_;
  std::size_t off_ = 0;
  std::size_t len_ = 0;
};

}  // namespace vlab
