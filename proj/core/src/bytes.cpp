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

#include "f2f/bytes.hpp"

#include <algorithm>

namespace f2f {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return 10 + (c - 'a');
    if (c >= 'A' && c <= 'F') return 10 + (c - 'A');
    return -1;
}

}  // namespace

std::string to_hex(ByteView data) {
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(kHexDigits[b >> 4]);
        out.push_back(kHexDigits[b & 0x0F]);
    }
    return out;
}

Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) {
        throw std::invalid_argument("hex string has odd length");
    }
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int hi = hex_value(hex[2 * i]);
        const int lo = hex_value(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) {
            throw std::invalid_argument("invalid hex character");
        }
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

Bytes to_bytes(std::string_view text) {
    return Bytes(text.begin(), text.end());
}

void ByteWriter::u32(std::uint32_t value) {
    for (int shift = 24; shift >= 0; shift -= 8) {
        out_.push_back(static_cast<std::uint8_t>(value >> shift));
    }
}

void ByteWriter::u64(std::uint64_t value) {
    for (int shift = 56; shift >= 0; shift -= 8) {
        out_.push_back(static_cast<std::uint8_t>(value >> shift));
    }
}

void ByteWriter::prefixed(ByteView data) {
    u32(static_cast<std::uint32_t>(data.size()));
    raw(data);
}

void ByteWriter::prefixed(std::string_view text) {
    prefixed(ByteView{reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

void ByteWriter::patch_u32(std::size_t offset, std::uint32_t value) {
    for (int i = 0; i < 4; ++i) {
        out_.at(offset + i) = static_cast<std::uint8_t>(value >> (24 - 8 * i));
    }
}

std::uint8_t ByteReader::u8() {
    return raw(1)[0];
}

std::uint32_t ByteReader::u32() {
    auto v = raw(4);
    return (std::uint32_t{v[0]} << 24) | (std::uint32_t{v[1]} << 16) |
           (std::uint32_t{v[2]} << 8) | std::uint32_t{v[3]};
}

std::uint64_t ByteReader::u64() {
    auto v = raw(8);
    std::uint64_t out = 0;
    for (auto b : v) out = (out << 8) | b;
    return out;
}

ByteView ByteReader::raw(std::size_t count) {
    if (remaining() < count) {
        throw BufferUnderflow("buffer underflow");
    }
    auto view = data_.subspan(pos_, count);
    pos_ += count;
    return view;
}

Bytes ByteReader::prefixed(std::size_t max_length) {
    const auto length = u32();
    if (length > max_length) {
        throw BufferUnderflow("length prefix exceeds limit");
    }
    auto view = raw(length);
    return Bytes(view.begin(), view.end());
}

std::string ByteReader::prefixed_string(std::size_t max_length) {
    auto b = prefixed(max_length);
    return std::string(b.begin(), b.end());
}

}  // namespace f2f
