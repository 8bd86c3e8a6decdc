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

#include "f2f/channel.hpp"
#include "f2f/config.hpp"
#include "f2f/contacts.hpp"
#include "f2f/fallback.hpp"
#include "f2f/messenger.hpp"
#include "f2f/proxy.hpp"
#include "f2f/runtime.hpp"
#include "f2f/sysmsg.hpp"
#include "f2f/transport.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>

namespace f2f {

/// What a node needs from its host process.
struct NodeEnv {
    Scheduler& scheduler;
    Transport& transport;
    Loopback& loopback;
    Messenger& messenger;
    Rng& rng;
    EventLog& log;
};

/// One peer running the middleware: proxies, system messages, fallback and
/// reconnectable channels around a single contact directory.
class Node {
public:
    Node(Identity identity, std::string phone, NodeConfig config, NodeEnv env);
    ~Node();

    Node(const Node&) = delete;
    Node& operator=(const Node&) = delete;

    /// Registers on the current attachment as version 1 without announcing.
    void bootstrap();
    /// Bumps the address version and announces it.
    void announce();

    /// Directory update plus the follow-ups an applied address triggers.
    ApplyResult apply_address(const PeerId& peer, const OverlayAddress& address, std::uint64_t version);

    void register_service(const CapabilityId& capability, std::uint16_t loopback_port);
    [[nodiscard]] std::optional<std::uint16_t> service_port(const CapabilityId& capability) const;
    [[nodiscard]] std::vector<CapabilityId> services() const;

    /// Starts recovery for an unreachable friend unless one is already in
    /// progress or an out-of-band answer is pending.
    void ensure_recovery(const PeerId& peer);

    [[nodiscard]] const Identity& identity() const { return identity_; }
    [[nodiscard]] const std::string& phone() const { return phone_; }
    [[nodiscard]] const OverlayAddress& address() const { return address_; }
    [[nodiscard]] std::uint64_t version() const { return version_; }
    [[nodiscard]] bool attached() const { return attachment_.has_value(); }
    [[nodiscard]] const NodeConfig& config() const { return config_; }

    ContactDirectory& contacts() { return contacts_; }
    [[nodiscard]] const ContactDirectory& contacts() const { return contacts_; }

    Scheduler& scheduler() { return env_.scheduler; }
    Transport& transport() { return env_.transport; }
    Loopback& loopback() { return env_.loopback; }
    Messenger& messenger() { return env_.messenger; }
    Rng& rng() { return env_.rng; }
    void log(std::string_view line) { env_.log.log(identity_.name, line); }

    ClientProxy& client() { return *client_; }
    ServerProxy& server() { return *server_; }
    Sysmsg& sysmsg() { return *sysmsg_; }
    Fallback& fallback() { return *fallback_; }
    ChannelManager& channels() { return *channels_; }
    [[nodiscard]] const ClientProxy& client() const { return *client_; }
    [[nodiscard]] const ServerProxy& server() const { return *server_; }
    [[nodiscard]] const Sysmsg& sysmsg() const { return *sysmsg_; }
    [[nodiscard]] const Fallback& fallback() const { return *fallback_; }
    [[nodiscard]] const ChannelManager& channels() const { return *channels_; }

    /// Short printable name for a friend (falls back to the id prefix).
    [[nodiscard]] std::string name_of(const PeerId& peer) const;

private:
    void on_network_event(const NetworkEvent& event);

    Identity identity_;
    std::string phone_;
    NodeConfig config_;
    NodeEnv env_;
    ContactDirectory contacts_;
    OverlayAddress address_;
    std::uint64_t version_ = 0;
    std::optional<NetworkAttachment> attachment_;
    std::map<CapabilityId, std::uint16_t> services_;

    std::unique_ptr<ClientProxy> client_;
    std::unique_ptr<ServerProxy> server_;
    std::unique_ptr<Sysmsg> sysmsg_;
    std::unique_ptr<Fallback> fallback_;
    std::unique_ptr<ChannelManager> channels_;
};

}  // namespace f2f
