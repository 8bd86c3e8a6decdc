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

#include "f2f/identity.hpp"
#include "f2f/transport.hpp"
#include "f2f/wire.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace f2f {

class Node;

struct PortMapping {
    std::uint16_t local_port = 0;
    PeerId friend_id;
    CapabilityId capability;

    bool operator==(const PortMapping&) const = default;
};

class ProxyError : public std::runtime_error {
public:
    enum class Code { UnknownPeer, CapabilityUnknown, ResourceExhausted, DuplicateService, ParseError };

    ProxyError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
    [[nodiscard]] Code code() const { return code_; }

private:
    Code code_;
};

/// Stable (friend, capability) -> local port assignment within a range.
class PortAllocator {
public:
    static constexpr std::string_view kFileHeader = "f2fnet-ports v1";

    PortAllocator(std::uint16_t low, std::uint16_t high);

    /// Returns the existing mapping or the lowest free port.
    PortMapping allocate(const PeerId& friend_id, const CapabilityId& capability);

    [[nodiscard]] const PortMapping* find(std::uint16_t port) const;
    [[nodiscard]] const PortMapping* find(const PeerId& friend_id, const CapabilityId& capability) const;
    [[nodiscard]] std::vector<PortMapping> mappings() const;

    [[nodiscard]] std::string save() const;
    static PortAllocator load(std::string_view text, std::uint16_t low, std::uint16_t high);

private:
    std::uint16_t low_;
    std::uint16_t high_;
    std::map<std::uint16_t, PortMapping> by_port_;
};

enum class NonceCheck { Fresh, Unknown, Reused, Expired };

const char* to_string(NonceCheck check);

/// Challenge nonces issued by the server proxy. Each is accepted once and
/// only within the lifetime.
class NonceTable {
public:
    explicit NonceTable(TimeMs ttl_ms) : ttl_ms_(ttl_ms) {}

    std::uint32_t issue(Rng& rng, TimeMs now);
    /// Check-and-mark: every call after the first reports Reused.
    NonceCheck consume(std::uint32_t nonce, TimeMs now);

    [[nodiscard]] std::size_t size() const { return entries_.size(); }

private:
    struct Entry {
        TimeMs issued_at = 0;
        bool used = false;
    };

    void purge(TimeMs now);

    TimeMs ttl_ms_;
    std::unordered_map<std::uint32_t, Entry> entries_;
};

struct PumpTotals {
    std::uint64_t a_to_b = 0;
    std::uint64_t b_to_a = 0;
};

/// Copies bytes both ways, preserving order, until both directions finish.
/// A failed write closes the stream being read for that direction.
void pump(const StreamPtr& a, const StreamPtr& b, std::function<void(PumpTotals)> done = {});

enum class DialOutcome { Accepted, Rejected, Unreachable, Latched, NotAttached, ProtocolError };

const char* to_string(DialOutcome outcome);

struct DialResult {
    DialOutcome outcome = DialOutcome::ProtocolError;
    std::optional<TransportError> error;
    StreamPtr stream;  // set iff Accepted; positioned after the verdict byte
    TimeMs elapsed_ms = 0;
};

using DialCallback = std::function<void(DialResult)>;

/// Outbound side: local ports, the connection handshake and offline latching.
class ClientProxy {
public:
    explicit ClientProxy(Node& node);

    /// Allocates (or returns) the local port for the pair and starts
    /// listening on it.
    PortMapping open_client_port(const PeerId& friend_id, const CapabilityId& capability);

    /// Runs the connection handshake against the friend's current address.
    /// With `latching`, an Offline-latched friend is refused without any
    /// connect, and an unreachable one is marked Offline, latched and handed
    /// to address recovery.
    void dial(const PeerId& friend_id, wire::MessageBody body, bool latching, DialCallback done);

    /// Serves one application connection accepted on a mapped port.
    void handle_outbound(const PortMapping& mapping, const StreamPtr& app);

    [[nodiscard]] bool latched(const PeerId& friend_id) const { return latched_.contains(friend_id); }
    void clear_latch(const PeerId& friend_id) { latched_.erase(friend_id); }

    PortAllocator& ports() { return ports_; }
    [[nodiscard]] const PortAllocator& ports() const { return ports_; }

    /// Time from application connect to the 0x10 verdict, per session.
    [[nodiscard]] const std::vector<TimeMs>& connect_times() const { return connect_times_; }
    [[nodiscard]] std::uint64_t transport_connects(const PeerId& friend_id) const;

private:
    void mark_unreachable(const PeerId& friend_id);

    Node& node_;
    PortAllocator ports_;
    std::set<std::uint16_t> listening_;
    std::set<PeerId> latched_;
    std::map<PeerId, std::uint64_t> connects_;
    std::vector<TimeMs> connect_times_;
};

struct ServerCounters {
    std::uint64_t inbound = 0;
    std::uint64_t accepted = 0;
    std::uint64_t rejected_timeout = 0;
    std::uint64_t rejected_malformed = 0;
    std::uint64_t rejected_unknown_peer = 0;
    std::uint64_t rejected_signature = 0;
    std::uint64_t rejected_nonce = 0;
    std::uint64_t rejected_capability = 0;
    std::uint64_t service_sessions = 0;
    /// Sessions that reached a service endpoint without a verified signature
    /// and a fresh matching nonce. Must stay zero.
    std::uint64_t auth_violations = 0;
};

/// Inbound side: challenge, authentication and dispatch.
class ServerProxy {
public:
    explicit ServerProxy(Node& node);

    void handle_inbound(const StreamPtr& stream);

    [[nodiscard]] const ServerCounters& counters() const { return counters_; }
    NonceTable& nonces() { return nonces_; }

private:
    void reject(const StreamPtr& stream);
    void dispatch(const StreamPtr& stream, const wire::ConnectionMessage& msg, bool authenticated);

    Node& node_;
    NonceTable nonces_;
    ServerCounters counters_;
};

}  // namespace f2f
