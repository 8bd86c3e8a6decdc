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

#include "f2f/wire.hpp"

namespace f2f::wire {

namespace {

constexpr std::size_t kMaxAddressLength = 1024;

[[noreturn]] void frame_error(const std::string& what) {
    throw WireError(WireErrorCode::FrameError, what);
}

template <typename Fn>
auto guarded(Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const BufferUnderflow& e) {
        frame_error(std::string("truncated frame: ") + e.what());
    }
}

template <typename Id>
Id read_id(ByteReader& r) {
    return Id{r.fixed<Id::kSize>()};
}

void write_system_body(ByteWriter& w, const SystemMessageBody& body) {
    std::visit(
        [&w](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, AddressAnnounce>) {
                w.u8(static_cast<std::uint8_t>(SystemKind::AddressAnnounce));
                w.raw(b.origin.bytes());
                w.prefixed(b.address.value);
                w.u64(b.version);
            } else if constexpr (std::is_same_v<T, AddressQuery>) {
                w.u8(static_cast<std::uint8_t>(SystemKind::AddressQuery));
                w.raw(b.target.bytes());
            } else if constexpr (std::is_same_v<T, AddressReply>) {
                w.u8(static_cast<std::uint8_t>(SystemKind::AddressReply));
                w.raw(b.target.bytes());
                w.u8(b.known ? 1 : 0);
                if (b.known) {
                    w.prefixed(b.address.value);
                    w.u64(b.version);
                }
            } else if constexpr (std::is_same_v<T, AnnounceAck>) {
                w.u8(static_cast<std::uint8_t>(SystemKind::AnnounceAck));
                w.u8(static_cast<std::uint8_t>(b.status));
            } else {
                w.u8(static_cast<std::uint8_t>(SystemKind::FallbackReply));
                w.prefixed(b.address.value);
                w.u64(b.version);
                w.raw(b.code);
            }
        },
        body);
}

SystemMessageBody read_system_body(ByteReader& r) {
    const auto kind = r.u8();
    switch (static_cast<SystemKind>(kind)) {
        case SystemKind::AddressAnnounce: {
            AddressAnnounce a;
            a.origin = read_id<PeerId>(r);
            a.address.value = r.prefixed_string(kMaxAddressLength);
            a.version = r.u64();
            return a;
        }
        case SystemKind::AddressQuery:
            return AddressQuery{read_id<PeerId>(r)};
        case SystemKind::AddressReply: {
            AddressReply a;
            a.target = read_id<PeerId>(r);
            const auto known = r.u8();
            if (known > 1) frame_error("invalid known flag");
            a.known = known == 1;
            if (a.known) {
                a.address.value = r.prefixed_string(kMaxAddressLength);
                a.version = r.u64();
            }
            return a;
        }
        case SystemKind::AnnounceAck: {
            const auto status = r.u8();
            if (status > static_cast<std::uint8_t>(AckStatus::Rejected)) frame_error("invalid ack status");
            return AnnounceAck{static_cast<AckStatus>(status)};
        }
        case SystemKind::FallbackReply: {
            FallbackReply f;
            f.address.value = r.prefixed_string(kMaxAddressLength);
            f.version = r.u64();
            f.code = r.fixed<16>();
            return f;
        }
    }
    frame_error("unknown system message kind " + std::to_string(kind));
}

void write_unsigned_message(ByteWriter& w, const ConnectionMessage& msg) {
    w.raw(msg.sender_id.bytes());
    w.u32(msg.random_number);
    w.u8(static_cast<std::uint8_t>(msg.message_type()));
    std::visit(
        [&w](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, ApplicationBody>) {
                w.raw(b.destination.bytes());
                w.raw(b.channel_id.bytes());
            } else if constexpr (std::is_same_v<T, SystemMessageBody>) {
                write_system_body(w, b);
            } else {
                w.raw(b.channel_id.bytes());
                w.u64(b.received_count);
            }
        },
        msg.body);
}

Bytes expect_frame(ByteView bytes, FrameKind kind) {
    auto frame = decode_frame(bytes);
    if (frame.kind != kind) {
        frame_error("unexpected frame kind " + std::to_string(static_cast<int>(frame.kind)));
    }
    return std::move(frame.body);
}

void write_unsigned_request(ByteWriter& w, const FallbackRequest& req) {
    w.raw(req.sender_id.bytes());
    w.prefixed(req.sender_address.value);
    w.u64(req.sender_version);
    w.raw(req.code);
}

}  // namespace

MessageType ConnectionMessage::message_type() const {
    switch (body.index()) {
        case 0: return MessageType::ApplicationLayer;
        case 1: return MessageType::SystemMessage;
        default: return MessageType::Reconnect;
    }
}

Bytes encode_challenge(std::uint32_t nonce) {
    ByteWriter w;
    w.u8(kChallengeStatus);
    w.u32(nonce);
    return std::move(w).take();
}

std::uint32_t decode_challenge(ByteView bytes) {
    if (bytes.size() != kChallengeSize) frame_error("challenge must be 5 bytes");
    if (bytes[0] != kChallengeStatus) frame_error("challenge status byte is not 0x5A");
    ByteReader r(bytes.subspan(1));
    return r.u32();
}

std::uint8_t encode_verdict(bool accept) {
    return accept ? kVerdictAccept : kVerdictReject;
}

bool decode_verdict(std::uint8_t byte) {
    if (byte == kVerdictAccept) return true;
    if (byte == kVerdictReject) return false;
    frame_error("invalid verdict byte");
}

Bytes encode_frame(FrameKind kind, ByteView body) {
    const auto total = kFrameHeaderSize + body.size();
    if (total > kMaxFrameSize) frame_error("frame too large");
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(total));
    w.u8(static_cast<std::uint8_t>(kind));
    w.raw(body);
    return std::move(w).take();
}

std::optional<std::size_t> peek_frame_length(ByteView prefix) {
    if (prefix.size() < 4) return std::nullopt;
    ByteReader r(prefix.first(4));
    const auto total = r.u32();
    if (total < kFrameHeaderSize || total > kMaxFrameSize) {
        frame_error("invalid frame length " + std::to_string(total));
    }
    return total;
}

Frame decode_frame(ByteView bytes) {
    const auto total = peek_frame_length(bytes);
    if (!total || bytes.size() < kFrameHeaderSize) frame_error("truncated frame header");
    if (*total != bytes.size()) frame_error("frame length does not match buffer");
    const auto kind = bytes[4];
    if (kind < 0x01 || kind > 0x04) frame_error("unknown frame kind " + std::to_string(kind));
    auto body = bytes.subspan(kFrameHeaderSize);
    return Frame{static_cast<FrameKind>(kind), Bytes(body.begin(), body.end())};
}

std::vector<Frame> split_frames(ByteView bytes) {
    std::vector<Frame> out;
    while (!bytes.empty()) {
        const auto total = peek_frame_length(bytes);
        if (!total || *total > bytes.size()) frame_error("truncated frame in sequence");
        out.push_back(decode_frame(bytes.first(*total)));
        bytes = bytes.subspan(*total);
    }
    return out;
}

Bytes encode_system_body(const SystemMessageBody& body) {
    ByteWriter w;
    write_system_body(w, body);
    return std::move(w).take();
}

SystemMessageBody decode_system_body(ByteView bytes) {
    return guarded([&] {
        ByteReader r(bytes);
        auto body = read_system_body(r);
        if (!r.done()) frame_error("trailing bytes after system message");
        return body;
    });
}

const char* system_kind_name(const SystemMessageBody& body) {
    switch (body.index()) {
        case 0: return "AddressAnnounce";
        case 1: return "AddressQuery";
        case 2: return "AddressReply";
        case 3: return "AnnounceAck";
        default: return "FallbackReply";
    }
}

Bytes connection_message_signed_bytes(const ConnectionMessage& msg) {
    ByteWriter w;
    write_unsigned_message(w, msg);
    return std::move(w).take();
}

Bytes encode_connection_message(const ConnectionMessage& msg, const PrivateKey& private_key) {
    ByteWriter w;
    write_unsigned_message(w, msg);
    const auto signature = sign(private_key, w.bytes());
    w.prefixed(signature);
    return encode_frame(FrameKind::ConnectionMessage, w.bytes());
}

ConnectionMessage parse_connection_message(ByteView frame) {
    const auto body = expect_frame(frame, FrameKind::ConnectionMessage);
    return guarded([&] {
        ByteReader r(body);
        ConnectionMessage msg;
        msg.sender_id = read_id<PeerId>(r);
        msg.random_number = r.u32();
        const auto type = r.u8();
        switch (static_cast<MessageType>(type)) {
            case MessageType::ApplicationLayer: {
                ApplicationBody b;
                b.destination = read_id<CapabilityId>(r);
                b.channel_id = read_id<ChannelId>(r);
                msg.body = b;
                break;
            }
            case MessageType::SystemMessage:
                msg.body = read_system_body(r);
                break;
            case MessageType::Reconnect: {
                ReconnectBody b;
                b.channel_id = read_id<ChannelId>(r);
                b.received_count = r.u64();
                msg.body = b;
                break;
            }
            default:
                frame_error("unknown message type " + std::to_string(type));
        }
        msg.signature = r.prefixed(kSignatureSize);
        if (!r.done()) frame_error("trailing bytes after signature");
        return msg;
    });
}

ConnectionMessage decode_connection_message(ByteView frame, const KeyLookup& lookup) {
    auto msg = parse_connection_message(frame);
    const auto key = lookup(msg.sender_id);
    if (!key) {
        throw WireError(WireErrorCode::UnknownPeer, "unknown sender " + msg.sender_id.hex());
    }
    if (!verify(*key, connection_message_signed_bytes(msg), msg.signature)) {
        throw WireError(WireErrorCode::AuthFailure, "signature verification failed");
    }
    return msg;
}

Bytes encode_system_reply(const SystemMessageBody& body) {
    return encode_frame(FrameKind::SystemReply, encode_system_body(body));
}

SystemMessageBody decode_system_reply(ByteView frame) {
    return decode_system_body(expect_frame(frame, FrameKind::SystemReply));
}

Bytes fallback_request_signed_bytes(const FallbackRequest& req) {
    ByteWriter w;
    write_unsigned_request(w, req);
    return std::move(w).take();
}

Bytes encode_fallback_request(const FallbackRequest& req, const PrivateKey& private_key) {
    ByteWriter w;
    write_unsigned_request(w, req);
    const auto signature = sign(private_key, w.bytes());
    w.prefixed(signature);
    return encode_frame(FrameKind::FallbackRequest, w.bytes());
}

FallbackRequest decode_fallback_request(ByteView frame) {
    const auto body = expect_frame(frame, FrameKind::FallbackRequest);
    return guarded([&] {
        ByteReader r(body);
        FallbackRequest req;
        req.sender_id = read_id<PeerId>(r);
        req.sender_address.value = r.prefixed_string(kMaxAddressLength);
        req.sender_version = r.u64();
        req.code = r.fixed<16>();
        req.signature = r.prefixed(kSignatureSize);
        if (!r.done()) frame_error("trailing bytes after signature");
        return req;
    });
}

bool verify_fallback_request(const FallbackRequest& req, const PublicKey& key) {
    return verify(key, fallback_request_signed_bytes(req), req.signature);
}

Bytes encode_resume_ack(const ReconnectBody& body) {
    ByteWriter w;
    w.raw(body.channel_id.bytes());
    w.u64(body.received_count);
    return encode_frame(FrameKind::ResumeAck, w.bytes());
}

ReconnectBody decode_resume_ack(ByteView frame) {
    const auto body = expect_frame(frame, FrameKind::ResumeAck);
    return guarded([&] {
        ByteReader r(body);
        ReconnectBody b;
        b.channel_id = read_id<ChannelId>(r);
        b.received_count = r.u64();
        if (!r.done()) frame_error("trailing bytes after resume ack");
        return b;
    });
}

}  // namespace f2f::wire
