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

#include "f2f/simulator.hpp"
#include "f2f/transport.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace f2f::sim {

struct LinkProfile {
    TimeMs latency_ms = 300;
    TimeMs jitter_ms = 0;           // uniform extra delay in [0, jitter_ms]
    double bandwidth_bps = 2.5e6;   // 0 = unlimited
    std::size_t buffer_bytes = 256 * 1024;
};

struct NetworkConfig {
    LinkProfile overlay{300, 0, 2.5e6, 256 * 1024};
    LinkProfile direct{50, 0, 18.58e6, 256 * 1024};
    LinkProfile loopback{0, 0, 0.0, 64 * 1024};
    /// Use the direct profile for peer links (plain-Internet baseline).
    bool direct_links = false;
    /// Connecting to a stale address times out instead of being refused.
    bool black_hole_stale = false;
};

class SimNetwork;
class Link;

/// One simulated peer's view of the overlay plus its loopback interface.
class SimNode final : public Transport, public Loopback {
public:
    SimNode(SimNetwork& network, std::string name) : network_(network), name_(std::move(name)) {}

    OverlayAddress register_endpoint(const NetworkAttachment& attachment) override;
    void connect(const OverlayAddress& address, TimeMs timeout_ms,
                 std::function<void(ConnectResult)> done) override;
    void listen(std::function<void(StreamPtr)> on_inbound) override { on_inbound_ = std::move(on_inbound); }
    void subscribe_network_changes(std::function<void(const NetworkEvent&)> fn) override {
        subscribers_.push_back(std::move(fn));
    }
    [[nodiscard]] std::optional<NetworkAttachment> attachment() const override { return attachment_; }

    bool listen(std::uint16_t port, std::function<void(StreamPtr)> on_accept) override;
    void unlisten(std::uint16_t port) override { ports_.erase(port); }
    StreamPtr connect(std::uint16_t port) override;

    [[nodiscard]] const std::string& name() const { return name_; }

private:
    friend class SimNetwork;

    SimNetwork& network_;
    std::string name_;
    std::optional<NetworkAttachment> attachment_;
    std::map<NetworkAttachment, OverlayAddress> issued_;
    std::function<void(StreamPtr)> on_inbound_;
    std::vector<std::function<void(const NetworkEvent&)>> subscribers_;
    std::map<std::uint16_t, std::function<void(StreamPtr)>> ports_;
};

/// The simulated overlay: address registry, attachment state and links.
class SimNetwork {
public:
    SimNetwork(Simulator& sim, NetworkConfig config) : sim_(sim), config_(config) {}

    SimNetwork(const SimNetwork&) = delete;
    SimNetwork& operator=(const SimNetwork&) = delete;

    SimNode& add_node(const std::string& name);
    SimNode& node(const std::string& name);
    [[nodiscard]] bool has_node(const std::string& name) const { return nodes_.contains(name); }

    /// Detaches first when already attached elsewhere. Subscribers see the
    /// events in order on the next turn of the loop.
    void attach(const std::string& name, const NetworkAttachment& attachment);
    void detach(const std::string& name);

    /// Breaks every live overlay link between the two peers (both ways).
    std::size_t break_links(const std::string& a, const std::string& b);

    /// Owner name of an issued address, if any.
    [[nodiscard]] std::optional<std::string> owner_of(const OverlayAddress& address) const;
    /// True when the owner is attached on the attachment that issued it.
    [[nodiscard]] bool address_live(const OverlayAddress& address) const;

    [[nodiscard]] std::uint64_t connect_attempts(const std::string& from, const std::string& to_owner) const;

    Simulator& simulator() { return sim_; }
    [[nodiscard]] const NetworkConfig& config() const { return config_; }
    NetworkConfig& config() { return config_; }

    /// A connected pair of streams with the given profile, not bound to any
    /// attachment (used for loopback and for tests).
    std::pair<StreamPtr, StreamPtr> make_pipe(const LinkProfile& profile);

private:
    friend class SimNode;

    struct Registration {
        std::string owner;
        NetworkAttachment attachment;
    };

    void do_connect(SimNode& from, const OverlayAddress& address, TimeMs timeout_ms,
                    std::function<void(ConnectResult)> done);
    std::shared_ptr<Link> new_link(const LinkProfile& profile, const std::string& a, const std::string& b,
                                   bool breakable);
    void emit(SimNode& node, const NetworkEvent& event);

    Simulator& sim_;
    NetworkConfig config_;
    std::map<std::string, std::unique_ptr<SimNode>> nodes_;
    std::unordered_map<std::string, Registration> registry_;
    std::vector<std::weak_ptr<Link>> links_;
    std::map<std::pair<std::string, std::string>, std::uint64_t> attempts_;
};

}  // namespace f2f::sim
