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

#include "f2f/identity.hpp"

#include <sodium.h>

#include <algorithm>
#include <mutex>

namespace f2f {

namespace {

void ensure_sodium() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) {
            throw std::runtime_error("libsodium initialisation failed");
        }
    });
}

template <std::size_t N>
std::array<std::uint8_t, N> fixed_from_hex(std::string_view hex, const char* what) {
    auto raw = from_hex(hex);
    if (raw.size() != N) {
        throw KeyError(std::string(what) + " has wrong length");
    }
    std::array<std::uint8_t, N> out{};
    std::copy(raw.begin(), raw.end(), out.begin());
    return out;
}

}  // namespace

KeyPair generate_keypair(const Seed& seed) {
    ensure_sodium();
    KeyPair kp;
    crypto_sign_seed_keypair(kp.public_key.data(), kp.private_key.data(), seed.data());
    return kp;
}

Seed seed_from_u64(std::uint64_t value) {
    Rng rng(value);
    Seed seed{};
    rng.fill(seed);
    return seed;
}

Bytes sign(const PrivateKey& private_key, ByteView message) {
    ensure_sodium();
    // An Ed25519 secret key is seed || public key; reject keys whose tail
    // does not match the seed.
    Seed seed{};
    std::copy_n(private_key.begin(), kSeedSize, seed.begin());
    const auto derived = generate_keypair(seed);
    if (derived.private_key != private_key) {
        throw KeyError("malformed private key");
    }
    Bytes sig(kSignatureSize);
    crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), private_key.data());
    return sig;
}

bool verify(const PublicKey& public_key, ByteView message, ByteView signature) {
    if (signature.size() != kSignatureSize) {
        return false;
    }
    ensure_sodium();
    return crypto_sign_verify_detached(signature.data(), message.data(), message.size(),
                                       public_key.data()) == 0;
}

bool verify(ByteView public_key, ByteView message, ByteView signature) {
    if (public_key.size() != kPublicKeySize) {
        return false;
    }
    PublicKey pk{};
    std::copy(public_key.begin(), public_key.end(), pk.begin());
    return verify(pk, message, signature);
}

PublicKey public_key_from_hex(std::string_view hex) {
    return fixed_from_hex<kPublicKeySize>(hex, "public key");
}

PrivateKey private_key_from_hex(std::string_view hex) {
    return fixed_from_hex<kPrivateKeySize>(hex, "private key");
}

Identity Identity::create(std::string name, Rng& rng) {
    Identity id;
    id.name = std::move(name);
    id.id = PeerId::random(rng);
    Seed seed{};
    rng.fill(seed);
    id.keys = generate_keypair(seed);
    return id;
}

}  // namespace f2f
