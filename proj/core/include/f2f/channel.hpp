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

#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace f2f {

class Node;

/// Ring over the most recently sent bytes of one channel direction.
class SendWindow {
public:
    explicit SendWindow(std::size_t capacity);

    void append(ByteView data);

    /// The bytes [received, total_sent) in order, or nullopt when some of
    /// them were already overwritten. Throws std::invalid_argument when
    /// received > total_sent.
    [[nodiscard]] std::optional<Bytes> replay_from(std::uint64_t received) const;

    [[nodiscard]] std::uint64_t total_sent() const { return total_sent_; }
    [[nodiscard]] std::size_t capacity() const { return ring_.size(); }
    [[nodiscard]] std::size_t write_position() const { return total_sent_ % ring_.size(); }
    [[nodiscard]] const Bytes& ring() const { return ring_; }

private:
    Bytes ring_;
    std::uint64_t total_sent_ = 0;
};

struct RecvCounter {
    std::uint64_t total_received = 0;
};

enum class ResumeResult { Resumed, NoSuchChannel, NotYourChannel, WindowExceeded };
enum class ChannelRole { Initiator, Acceptor };
enum class ChannelState { Connected, Disconnected, Resuming, Closed, TornDown };

const char* to_string(ResumeResult result);
const char* to_string(ChannelState state);

struct ChannelInfo {
    ChannelId id;
    PeerId peer;
    ChannelRole role = ChannelRole::Initiator;
    ChannelState state = ChannelState::Connected;
    std::uint64_t total_sent = 0;
    std::uint64_t total_received = 0;
    std::size_t overflow = 0;
    std::uint64_t outages = 0;
    std::uint64_t resumes = 0;
};

struct ChannelCounters {
    std::uint64_t opened = 0;
    std::uint64_t resumes = 0;
    std::uint64_t teardowns = 0;
    std::uint64_t window_exceeded = 0;
    /// Errors surfaced to the application (reset after grace or teardown).
    std::uint64_t app_errors = 0;
};

class Channel;

/// Owns every reconnectable channel of one peer.
class ChannelManager {
public:
    explicit ChannelManager(Node& node);
    ~ChannelManager();

    ChannelManager(const ChannelManager&) = delete;
    ChannelManager& operator=(const ChannelManager&) = delete;

    void start_initiator(const PeerId& peer, const ChannelId& id, const StreamPtr& app, const StreamPtr& overlay);
    void start_acceptor(const PeerId& peer, const ChannelId& id, const StreamPtr& app, const StreamPtr& overlay);

    /// Server-side handling of an authenticated Reconnect message. Writes the
    /// verdict to `stream` itself.
    ResumeResult handle_resume(const PeerId& sender, const wire::ReconnectBody& body, const StreamPtr& stream);

    void on_detached();
    void on_attached();
    void on_peer_moved(const PeerId& peer);

    [[nodiscard]] std::optional<ChannelInfo> info(const ChannelId& id) const;
    [[nodiscard]] std::vector<ChannelInfo> snapshot() const;
    [[nodiscard]] const ChannelCounters& counters() const { return counters_; }

private:
    friend class Channel;

    std::shared_ptr<Channel> create(const PeerId& peer, const ChannelId& id, ChannelRole role,
                                    const StreamPtr& app, const StreamPtr& overlay);
    void forget(const ChannelId& id);

    Node& node_;
    std::map<ChannelId, std::shared_ptr<Channel>> channels_;
    ChannelCounters counters_;
};

}  // namespace f2f
