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

#include "f2f/node.hpp"

namespace f2f {

Node::Node(Identity identity, std::string phone, NodeConfig config, NodeEnv env)
    : identity_(std::move(identity)), phone_(std::move(phone)), config_(std::move(config)), env_(env) {
    client_ = std::make_unique<ClientProxy>(*this);
    server_ = std::make_unique<ServerProxy>(*this);
    sysmsg_ = std::make_unique<Sysmsg>(*this);
    fallback_ = std::make_unique<Fallback>(*this);
    channels_ = std::make_unique<ChannelManager>(*this);
    env_.transport.listen([this](StreamPtr stream) { server_->handle_inbound(stream); });
    env_.transport.subscribe_network_changes([this](const NetworkEvent& event) { on_network_event(event); });
}

Node::~Node() = default;

void Node::bootstrap() {
    const auto attachment = env_.transport.attachment();
    if (!attachment) throw TransportDownError();
    address_ = env_.transport.register_endpoint(*attachment);
    attachment_ = attachment;
    version_ = 1;
    log("online at " + address_.value + " v1");
}

void Node::announce() {
    ++version_;
    sysmsg_->announce_to_friends();
}

ApplyResult Node::apply_address(const PeerId& peer, const OverlayAddress& address, std::uint64_t version) {
    const auto* before = contacts_.find(peer);
    const auto old_address = before ? before->address : OverlayAddress{};
    const auto result = contacts_.apply_address_update(peer, address, version);
    if (result != ApplyResult::Applied) return result;
    client_->clear_latch(peer);
    if (old_address != address) channels_->on_peer_moved(peer);
    fallback_->on_peer_address(peer);
    return result;
}

void Node::register_service(const CapabilityId& capability, std::uint16_t loopback_port) {
    if (!services_.emplace(capability, loopback_port).second) {
        throw ProxyError(ProxyError::Code::DuplicateService, "service already registered: " + capability.hex());
    }
}

std::optional<std::uint16_t> Node::service_port(const CapabilityId& capability) const {
    auto it = services_.find(capability);
    if (it == services_.end()) return std::nullopt;
    return it->second;
}

std::vector<CapabilityId> Node::services() const {
    std::vector<CapabilityId> out;
    for (const auto& [cap, port] : services_) out.push_back(cap);
    return out;
}

void Node::ensure_recovery(const PeerId& peer) {
    const auto* record = contacts_.find(peer);
    if (!record || record->awaiting_answer || sysmsg_->recovering(peer)) return;
    sysmsg_->recover_address(peer);
}

std::string Node::name_of(const PeerId& peer) const {
    if (peer == identity_.id) return identity_.name;
    if (const auto* record = contacts_.find(peer)) return record->name;
    return peer.hex().substr(0, 8);
}

void Node::on_network_event(const NetworkEvent& event) {
    if (event.kind == NetworkEvent::Kind::Detached) {
        if (!attachment_) return;
        attachment_.reset();
        log("detached from the network");
        channels_->on_detached();
        return;
    }
    if (attachment_ && *attachment_ == event.attachment) return;
    attachment_ = event.attachment;
    const auto old_address = address_;
    address_ = env_.transport.register_endpoint(event.attachment);
    ++version_;
    log("attached to " + event.attachment.id + " as " + address_.value + " v" + std::to_string(version_));
    fallback_->on_attached(address_ != old_address);
    sysmsg_->announce_to_friends();
    channels_->on_attached();
}

}  // namespace f2f
