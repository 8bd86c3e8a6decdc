/*
   Copyright 2026 The f2fnet Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace f2f {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

std::string to_hex(ByteView data);

// Accepts upper or lower case; throws std::invalid_argument on odd length or
// non-hex characters.
Bytes from_hex(std::string_view hex);

Bytes to_bytes(std::string_view text);

class BufferUnderflow : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Appends big-endian integers and length-prefixed fields to a byte vector.
class ByteWriter {
public:
    ByteWriter() = default;
    explicit ByteWriter(Bytes initial) : out_(std::move(initial)) {}

    void u8(std::uint8_t value) { out_.push_back(value); }
    void u32(std::uint32_t value);
    void u64(std::uint64_t value);
    void raw(ByteView data) { out_.insert(out_.end(), data.begin(), data.end()); }
    template <std::size_t N>
    void raw(const std::array<std::uint8_t, N>& data) { raw(ByteView{data}); }
    /// 4-byte big-endian length followed by the bytes.
    void prefixed(ByteView data);
    void prefixed(std::string_view text);

    [[nodiscard]] std::size_t size() const { return out_.size(); }
    [[nodiscard]] const Bytes& bytes() const& { return out_; }
    [[nodiscard]] Bytes take() && { return std::move(out_); }

    void patch_u32(std::size_t offset, std::uint32_t value);

private:
    Bytes out_;
};

/// Cursor over an immutable buffer. Every read throws BufferUnderflow when
/// the buffer is too short.
class ByteReader {
public:
    explicit ByteReader(ByteView data) : data_(data) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    ByteView raw(std::size_t count);
    template <std::size_t N>
    std::array<std::uint8_t, N> fixed() {
        std::array<std::uint8_t, N> out{};
        auto view = raw(N);
        std::copy(view.begin(), view.end(), out.begin());
        return out;
    }
    Bytes prefixed(std::size_t max_length = 1u << 20);
    std::string prefixed_string(std::size_t max_length = 4096);

    [[nodiscard]] std::size_t remaining() const { return data_.size() - pos_; }
    [[nodiscard]] std::size_t position() const { return pos_; }
    [[nodiscard]] bool done() const { return pos_ == data_.size(); }

private:
    ByteView data_;
    std::size_t pos_ = 0;
};

}  // namespace f2f
