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

#include "f2f/address.hpp"
#include "f2f/bytes.hpp"
#include "f2f/runtime.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

namespace f2f {

enum class WriteStatus { Ok, Broken, Closed };

struct WriteResult {
    WriteStatus status = WriteStatus::Ok;
    std::size_t accepted = 0;
};

/// Ordered reliable duplex byte stream with non-blocking socket semantics.
///
/// write() accepts at most writable() bytes. A broken connection is only
/// noticed by the writer: write() (an empty write is a liveness probe)
/// returns Broken while readers see nothing at all.
class Stream {
public:
    virtual ~Stream() = default;

    virtual WriteResult write(ByteView data) = 0;
    [[nodiscard]] virtual std::size_t writable() const = 0;
    /// Bytes written that the peer has not read yet (TIOCOUTQ-like).
    [[nodiscard]] virtual std::size_t in_flight() const = 0;
    /// Half-close: the peer reads end-of-stream after the queued bytes.
    virtual void shutdown_write() = 0;
    /// Half-close and stop reading.
    virtual void close() = 0;
    /// Reset both directions; the peer observes was_reset().
    virtual void abort() = 0;

    [[nodiscard]] virtual std::size_t readable() const = 0;
    virtual Bytes read(std::size_t max) = 0;
    /// Peer half-closed and every byte has been consumed.
    [[nodiscard]] virtual bool at_eof() const = 0;
    [[nodiscard]] virtual bool was_reset() const = 0;

    /// Fired when bytes, end-of-stream, or a reset arrive.
    virtual void set_on_readable(std::function<void()> fn) = 0;
    /// Fired when send-buffer space frees up.
    virtual void set_on_writable(std::function<void()> fn) = 0;

    void clear_handlers() {
        set_on_readable(nullptr);
        set_on_writable(nullptr);
    }
};

using StreamPtr = std::shared_ptr<Stream>;

enum class TransportError { TransportDown, ConnectRefused, Timeout };

const char* to_string(TransportError error);

class TransportDownError : public std::runtime_error {
public:
    TransportDownError() : std::runtime_error("transport is not attached to a network") {}
};

struct ConnectResult {
    StreamPtr stream;
    std::optional<TransportError> error;

    [[nodiscard]] bool ok() const { return stream != nullptr; }
};

struct NetworkEvent {
    enum class Kind { Detached, Attached };
    Kind kind = Kind::Detached;
    NetworkAttachment attachment;  // empty for Detached
};

/// Overlay reachability: the stand-in for onion-service registration and
/// connection through the overlay.
class Transport {
public:
    virtual ~Transport() = default;

    /// Fresh address for a new attachment; the previously issued address when
    /// this attachment was seen before. Throws TransportDownError when not
    /// attached.
    virtual OverlayAddress register_endpoint(const NetworkAttachment& attachment) = 0;

    virtual void connect(const OverlayAddress& address, TimeMs timeout_ms,
                         std::function<void(ConnectResult)> done) = 0;

    /// Inbound streams arriving at this peer's registered address.
    virtual void listen(std::function<void(StreamPtr)> on_inbound) = 0;

    virtual void subscribe_network_changes(std::function<void(const NetworkEvent&)> fn) = 0;

    [[nodiscard]] virtual std::optional<NetworkAttachment> attachment() const = 0;
    [[nodiscard]] bool attached() const { return attachment().has_value(); }
};

/// Loopback listener semantics for application-facing ports.
class Loopback {
public:
    virtual ~Loopback() = default;

    /// Returns false if the port is taken.
    virtual bool listen(std::uint16_t port, std::function<void(StreamPtr)> on_accept) = 0;
    virtual void unlisten(std::uint16_t port) = 0;
    /// nullptr when nothing listens on the port.
    virtual StreamPtr connect(std::uint16_t port) = 0;
};

}  // namespace f2f
