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

#include "f2f/bytes.hpp"
#include "f2f/random.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace f2f {

/// A 128-bit identifier with byte equality. The tag keeps peer ids, capability
/// ids and channel ids from being mixed up.
template <typename Tag>
class Id128 {
public:
    static constexpr std::size_t kSize = 16;
    using Storage = std::array<std::uint8_t, kSize>;

    constexpr Id128() = default;
    explicit constexpr Id128(const Storage& bytes) : bytes_(bytes) {}

    static Id128 random(Rng& rng) {
        Storage s{};
        rng.fill(s);
        return Id128{s};
    }

    /// 32 hex digits; dashes (UUID form) are ignored.
    static Id128 from_hex(std::string_view text) {
        std::string digits;
        for (char c : text) {
            if (c != '-') digits.push_back(c);
        }
        auto raw = f2f::from_hex(digits);
        if (raw.size() != kSize) {
            throw std::invalid_argument("identifier must be 16 bytes");
        }
        Storage s{};
        std::copy(raw.begin(), raw.end(), s.begin());
        return Id128{s};
    }

    [[nodiscard]] const Storage& bytes() const { return bytes_; }
    [[nodiscard]] std::string hex() const { return to_hex(bytes_); }
    [[nodiscard]] bool is_zero() const { return *this == Id128{}; }

    auto operator<=>(const Id128&) const = default;

private:
    Storage bytes_{};
};

struct PeerIdTag {};
struct CapabilityIdTag {};
struct ChannelIdTag {};

using PeerId = Id128<PeerIdTag>;
using CapabilityId = Id128<CapabilityIdTag>;
using ChannelId = Id128<ChannelIdTag>;

struct Id128Hash {
    template <typename Tag>
    std::size_t operator()(const Id128<Tag>& id) const noexcept {
        std::size_t h = 0;
        for (auto b : id.bytes()) h = h * 131 + b;
        return h;
    }
};

constexpr std::size_t kPublicKeySize = 32;
constexpr std::size_t kPrivateKeySize = 64;
constexpr std::size_t kSignatureSize = 64;
constexpr std::size_t kSeedSize = 32;

using PublicKey = std::array<std::uint8_t, kPublicKeySize>;
using PrivateKey = std::array<std::uint8_t, kPrivateKeySize>;
using Seed = std::array<std::uint8_t, kSeedSize>;

struct KeyPair {
    PublicKey public_key{};
    PrivateKey private_key{};

    bool operator==(const KeyPair&) const = default;
};

class KeyError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Deterministic Ed25519 key pair derived from the seed.
KeyPair generate_keypair(const Seed& seed);

Seed seed_from_u64(std::uint64_t value);

/// Detached signature (kSignatureSize bytes). Throws KeyError when the
/// private key does not embed a valid public key.
Bytes sign(const PrivateKey& private_key, ByteView message);

/// Never throws: any malformed input yields false.
bool verify(const PublicKey& public_key, ByteView message, ByteView signature);
bool verify(ByteView public_key, ByteView message, ByteView signature);

PublicKey public_key_from_hex(std::string_view hex);
PrivateKey private_key_from_hex(std::string_view hex);

/// Everything a peer knows about itself.
struct Identity {
    std::string name;
    PeerId id;
    KeyPair keys;

    static Identity create(std::string name, Rng& rng);
};

}  // namespace f2f

template <typename Tag>
struct std::hash<f2f::Id128<Tag>> {
    std::size_t operator()(const f2f::Id128<Tag>& id) const noexcept { return f2f::Id128Hash{}(id); }
};
