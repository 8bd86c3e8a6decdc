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

// Byte layouts of every frame the middleware exchanges.
//
// All integers are big-endian. Identifiers are raw 16 bytes. Variable-length
// fields carry a 4-byte big-endian length prefix. Enveloped frames are
//
//     u32 total_length (counting the whole frame, header included)
//     u8  frame_kind
//     ... body
//
// The challenge (0x5A + nonce) and the verdict byte travel bare, exactly as
// the handshake exposes them.

#include "f2f/address.hpp"
#include "f2f/bytes.hpp"
#include "f2f/identity.hpp"

#include <array>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace f2f::wire {

constexpr std::uint8_t kChallengeStatus = 0x5A;
constexpr std::uint8_t kVerdictAccept = 0x10;
constexpr std::uint8_t kVerdictReject = 0x11;
constexpr std::size_t kChallengeSize = 5;
constexpr std::size_t kFrameHeaderSize = 5;
constexpr std::uint32_t kMaxFrameSize = 1u << 20;

enum class WireErrorCode { FrameError, UnknownPeer, AuthFailure };

class WireError : public std::runtime_error {
public:
    WireError(WireErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    [[nodiscard]] WireErrorCode code() const { return code_; }

private:
    WireErrorCode code_;
};

enum class FrameKind : std::uint8_t {
    ConnectionMessage = 0x01,
    SystemReply = 0x02,
    FallbackRequest = 0x03,
    ResumeAck = 0x04,
};

enum class MessageType : std::uint8_t {
    ApplicationLayer = 0x01,
    SystemMessage = 0x02,
    Reconnect = 0x03,
};

enum class SystemKind : std::uint8_t {
    AddressAnnounce = 0x01,
    AddressQuery = 0x02,
    AddressReply = 0x03,
    AnnounceAck = 0x04,
    FallbackReply = 0x05,
};

using OneTimeCodeValue = std::array<std::uint8_t, 16>;

struct AddressAnnounce {
    PeerId origin;
    OverlayAddress address;
    std::uint64_t version = 0;
    bool operator==(const AddressAnnounce&) const = default;
};

struct AddressQuery {
    PeerId target;
    bool operator==(const AddressQuery&) const = default;
};

struct AddressReply {
    PeerId target;
    bool known = false;
    OverlayAddress address;  // meaningful iff known
    std::uint64_t version = 0;
    bool operator==(const AddressReply&) const = default;
};

enum class AckStatus : std::uint8_t { Applied = 0, IgnoredStale = 1, Rejected = 2 };

struct AnnounceAck {
    AckStatus status = AckStatus::Applied;
    bool operator==(const AnnounceAck&) const = default;
};

/// The answer to an out-of-band address request; it travels over the overlay
/// inside an authenticated system-message connection.
struct FallbackReply {
    OverlayAddress address;
    std::uint64_t version = 0;
    OneTimeCodeValue code{};
    bool operator==(const FallbackReply&) const = default;
};

using SystemMessageBody = std::variant<AddressAnnounce, AddressQuery, AddressReply, AnnounceAck, FallbackReply>;

struct ApplicationBody {
    CapabilityId destination;
    ChannelId channel_id;  // chosen by the initiator, confirmed by the 0x10 verdict
    bool operator==(const ApplicationBody&) const = default;
};

struct ReconnectBody {
    ChannelId channel_id;
    std::uint64_t received_count = 0;
    bool operator==(const ReconnectBody&) const = default;
};

using MessageBody = std::variant<ApplicationBody, SystemMessageBody, ReconnectBody>;

struct ConnectionMessage {
    PeerId sender_id;
    std::uint32_t random_number = 0;
    MessageBody body;
    Bytes signature;

    [[nodiscard]] MessageType message_type() const;
    bool operator==(const ConnectionMessage&) const = default;
};

/// Out-of-band address request. The signature covers every preceding field.
struct FallbackRequest {
    PeerId sender_id;
    OverlayAddress sender_address;
    std::uint64_t sender_version = 0;
    OneTimeCodeValue code{};
    Bytes signature;
    bool operator==(const FallbackRequest&) const = default;
};

struct Frame {
    FrameKind kind{};
    Bytes body;
    bool operator==(const Frame&) const = default;
};

// Challenge: 0x5A followed by the 4-byte nonce.
Bytes encode_challenge(std::uint32_t nonce);
std::uint32_t decode_challenge(ByteView bytes);

std::uint8_t encode_verdict(bool accept);
bool decode_verdict(std::uint8_t byte);

Bytes encode_frame(FrameKind kind, ByteView body);
/// Decodes exactly one frame occupying all of `bytes`.
Frame decode_frame(ByteView bytes);
/// Total length announced by a frame header, once at least 4 bytes are
/// available. Throws FrameError for impossible lengths.
std::optional<std::size_t> peek_frame_length(ByteView prefix);
/// Splits a concatenation of frames.
std::vector<Frame> split_frames(ByteView bytes);

Bytes encode_system_body(const SystemMessageBody& body);
SystemMessageBody decode_system_body(ByteView bytes);
const char* system_kind_name(const SystemMessageBody& body);

/// The canonical bytes covered by the signature.
Bytes connection_message_signed_bytes(const ConnectionMessage& msg);

/// Signs `msg` (its signature field is ignored) and returns the full frame.
Bytes encode_connection_message(const ConnectionMessage& msg, const PrivateKey& private_key);

/// Structural decode, no authentication.
ConnectionMessage parse_connection_message(ByteView frame);

using KeyLookup = std::function<std::optional<PublicKey>(const PeerId&)>;

/// Structural decode, then key lookup (UnknownPeer, no signature check),
/// then signature verification (AuthFailure).
ConnectionMessage decode_connection_message(ByteView frame, const KeyLookup& lookup);

Bytes encode_system_reply(const SystemMessageBody& body);
SystemMessageBody decode_system_reply(ByteView frame);

Bytes fallback_request_signed_bytes(const FallbackRequest& req);
Bytes encode_fallback_request(const FallbackRequest& req, const PrivateKey& private_key);
FallbackRequest decode_fallback_request(ByteView frame);
bool verify_fallback_request(const FallbackRequest& req, const PublicKey& key);

Bytes encode_resume_ack(const ReconnectBody& body);
ReconnectBody decode_resume_ack(ByteView frame);

}  // namespace f2f::wire
