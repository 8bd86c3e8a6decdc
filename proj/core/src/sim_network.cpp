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

#include "f2f/sim_network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace f2f::sim {

namespace {

/// Received bytes waiting to be read, kept as the chunks they arrived in.
class ChunkQueue {
public:
    void push(Bytes chunk) {
        if (chunk.empty()) return;
        size_ += chunk.size();
        chunks_.push_back(std::move(chunk));
    }

    Bytes take(std::size_t max) {
        Bytes out;
        out.reserve(std::min(max, size_));
        while (max > 0 && !chunks_.empty()) {
            auto& front = chunks_.front();
            const auto n = std::min(max, front.size() - head_);
            out.insert(out.end(), front.begin() + static_cast<std::ptrdiff_t>(head_),
                       front.begin() + static_cast<std::ptrdiff_t>(head_ + n));
            head_ += n;
            max -= n;
            size_ -= n;
            if (head_ == front.size()) {
                chunks_.pop_front();
                head_ = 0;
            }
        }
        return out;
    }

    [[nodiscard]] std::size_t size() const { return size_; }

private:
    std::deque<Bytes> chunks_;
    std::size_t head_ = 0;
    std::size_t size_ = 0;
};

}  // namespace

}  // namespace f2f::sim

namespace f2f {

const char* to_string(TransportError error) {
    switch (error) {
        case TransportError::TransportDown: return "TransportDown";
        case TransportError::ConnectRefused: return "ConnectRefused";
        case TransportError::Timeout: return "Timeout";
    }
    return "?";
}

}  // namespace f2f

namespace f2f::sim {

/// Shared state of one simulated connection. Side i writes into dir_[i] and
/// reads from dir_[1 - i].
class Link : public std::enable_shared_from_this<Link> {
public:
    Link(Simulator& sim, LinkProfile profile, std::string a, std::string b, bool breakable)
        : sim_(sim), profile_(profile), breakable_(breakable) {
        nodes_[0] = std::move(a);
        nodes_[1] = std::move(b);
    }

    WriteResult write(int side, ByteView data) {
        if (aborted_[side] || reset_[side]) return {WriteStatus::Closed, 0};
        if (broken_) return {WriteStatus::Broken, 0};
        if (dir_[side].shutdown) return {WriteStatus::Closed, 0};
        const auto n = std::min(data.size(), writable(side));
        if (n == 0) return {WriteStatus::Ok, 0};
        dir_[side].occupied += n;
        deliver(side, Bytes(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(n)), false);
        return {WriteStatus::Ok, n};
    }

    [[nodiscard]] std::size_t writable(int side) const {
        if (broken_ || aborted_[side] || reset_[side] || dir_[side].shutdown) return 0;
        const auto cap = profile_.buffer_bytes;
        return dir_[side].occupied >= cap ? 0 : cap - dir_[side].occupied;
    }

    void shutdown_write(int side) {
        if (dir_[side].shutdown || aborted_[side]) return;
        dir_[side].shutdown = true;
        if (!broken_) deliver(side, {}, true);
    }

    void close(int side) {
        shutdown_write(side);
        read_closed_[side] = true;
        on_readable_[side] = nullptr;
    }

    void abort(int side) {
        if (aborted_[side]) return;
        aborted_[side] = true;
        on_readable_[side] = nullptr;
        on_writable_[side] = nullptr;
        if (broken_ || reset_[side]) return;
        const int other = 1 - side;
        sim_.schedule(profile_.latency_ms, [self = shared_from_this(), other] {
            if (self->broken_) return;
            self->reset_[other] = true;
            self->notify_readable(other);
        });
    }

    [[nodiscard]] std::size_t in_flight(int side) const { return dir_[side].occupied; }

    [[nodiscard]] std::size_t readable(int side) const {
        return read_closed_[side] ? 0 : dir_[1 - side].arrived.size();
    }

    Bytes read(int side, std::size_t max) {
        if (read_closed_[side]) return {};
        auto& d = dir_[1 - side];
        auto out = d.arrived.take(max);
        if (!out.empty()) {
            d.occupied -= out.size();
            schedule_writable(1 - side);
        }
        return out;
    }

    [[nodiscard]] bool at_eof(int side) const {
        const auto& d = dir_[1 - side];
        return d.eof_arrived && d.arrived.size() == 0;
    }

    [[nodiscard]] bool was_reset(int side) const { return reset_[side]; }

    void set_on_readable(int side, std::function<void()> fn) { on_readable_[side] = std::move(fn); }
    void set_on_writable(int side, std::function<void()> fn) { on_writable_[side] = std::move(fn); }

    void break_link() { broken_ = true; }
    [[nodiscard]] bool broken() const { return broken_; }
    [[nodiscard]] bool breakable() const { return breakable_; }
    [[nodiscard]] const std::string& node(int side) const { return nodes_[side]; }

private:
    struct Direction {
        ChunkQueue arrived;
        std::size_t occupied = 0;  // in transit plus arrived-but-unread
        double busy_until_us = 0;
        TimeMs last_delivery = 0;
        bool shutdown = false;
        bool eof_arrived = false;
    };

    void deliver(int side, Bytes data, bool eof) {
        auto& d = dir_[side];
        const double now_us = static_cast<double>(sim_.now()) * 1000.0;
        const double start = std::max(now_us, d.busy_until_us);
        const double tx_us = profile_.bandwidth_bps > 0
                                 ? static_cast<double>(data.size()) * 8e6 / profile_.bandwidth_bps
                                 : 0.0;
        d.busy_until_us = start + tx_us;
        TimeMs latency = profile_.latency_ms;
        if (profile_.jitter_ms > 0) latency += sim_.rng().uniform(0, profile_.jitter_ms);
        const double arrival_us = d.busy_until_us + static_cast<double>(latency) * 1000.0;
        auto when = static_cast<TimeMs>(std::llround(arrival_us / 1000.0));
        when = std::max({when, d.last_delivery, sim_.now()});
        d.last_delivery = when;
        const int receiver = 1 - side;
        sim_.schedule_at(when, [self = shared_from_this(), side, receiver, data = std::move(data), eof]() mutable {
            if (self->broken_) return;
            auto& dir = self->dir_[side];
            if (eof) {
                dir.eof_arrived = true;
            } else {
                dir.arrived.push(std::move(data));
            }
            self->notify_readable(receiver);
        });
    }

    void notify_readable(int side) {
        if (read_closed_[side] || aborted_[side]) return;
        if (auto fn = on_readable_[side]) fn();
    }

    void schedule_writable(int side) {
        if (writable_pending_[side] || !on_writable_[side]) return;
        writable_pending_[side] = true;
        sim_.schedule(0, [self = shared_from_this(), side] {
            self->writable_pending_[side] = false;
            if (auto fn = self->on_writable_[side]) fn();
        });
    }

    Simulator& sim_;
    LinkProfile profile_;
    bool breakable_;
    bool broken_ = false;
    std::string nodes_[2];
    Direction dir_[2];
    bool aborted_[2] = {false, false};
    bool reset_[2] = {false, false};
    bool read_closed_[2] = {false, false};
    bool writable_pending_[2] = {false, false};
    std::function<void()> on_readable_[2];
    std::function<void()> on_writable_[2];
};

namespace {

class SimEndpoint final : public Stream {
public:
    SimEndpoint(std::shared_ptr<Link> link, int side) : link_(std::move(link)), side_(side) {}

    WriteResult write(ByteView data) override { return link_->write(side_, data); }
    [[nodiscard]] std::size_t writable() const override { return link_->writable(side_); }
    [[nodiscard]] std::size_t in_flight() const override { return link_->in_flight(side_); }
    void shutdown_write() override { link_->shutdown_write(side_); }
    void close() override { link_->close(side_); }
    void abort() override { link_->abort(side_); }
    [[nodiscard]] std::size_t readable() const override { return link_->readable(side_); }
    Bytes read(std::size_t max) override { return link_->read(side_, max); }
    [[nodiscard]] bool at_eof() const override { return link_->at_eof(side_); }
    [[nodiscard]] bool was_reset() const override { return link_->was_reset(side_); }
    void set_on_readable(std::function<void()> fn) override { link_->set_on_readable(side_, std::move(fn)); }
    void set_on_writable(std::function<void()> fn) override { link_->set_on_writable(side_, std::move(fn)); }

private:
    std::shared_ptr<Link> link_;
    int side_;
};

std::string random_address(Rng& rng) {
    std::array<std::uint8_t, 8> raw{};
    rng.fill(raw);
    return to_hex(raw) + ".ovl";
}

}  // namespace

OverlayAddress SimNode::register_endpoint(const NetworkAttachment& attachment) {
    if (!attachment_ || *attachment_ != attachment) {
        throw TransportDownError();
    }
    if (auto it = issued_.find(attachment); it != issued_.end()) {
        return it->second;
    }
    OverlayAddress address;
    do {
        address.value = random_address(network_.sim_.rng());
    } while (network_.registry_.contains(address.value));
    network_.registry_.emplace(address.value, SimNetwork::Registration{name_, attachment});
    issued_.emplace(attachment, address);
    return address;
}

void SimNode::connect(const OverlayAddress& address, TimeMs timeout_ms, std::function<void(ConnectResult)> done) {
    network_.do_connect(*this, address, timeout_ms, std::move(done));
}

bool SimNode::listen(std::uint16_t port, std::function<void(StreamPtr)> on_accept) {
    return ports_.emplace(port, std::move(on_accept)).second;
}

StreamPtr SimNode::connect(std::uint16_t port) {
    auto it = ports_.find(port);
    if (it == ports_.end()) return nullptr;
    auto link = network_.new_link(network_.config_.loopback, name_, name_, false);
    auto client = std::make_shared<SimEndpoint>(link, 0);
    auto server = std::make_shared<SimEndpoint>(link, 1);
    auto accept = it->second;
    network_.sim_.schedule(0, [accept, server] { accept(server); });
    return client;
}

SimNode& SimNetwork::add_node(const std::string& name) {
    auto [it, inserted] = nodes_.emplace(name, std::make_unique<SimNode>(*this, name));
    if (!inserted) throw std::invalid_argument("duplicate node " + name);
    return *it->second;
}

SimNode& SimNetwork::node(const std::string& name) {
    auto it = nodes_.find(name);
    if (it == nodes_.end()) throw std::invalid_argument("unknown node " + name);
    return *it->second;
}

void SimNetwork::emit(SimNode& node, const NetworkEvent& event) {
    sim_.schedule(0, [&node, event] {
        for (auto& fn : node.subscribers_) fn(event);
    });
}

void SimNetwork::attach(const std::string& name, const NetworkAttachment& attachment) {
    auto& n = node(name);
    if (n.attachment_) detach(name);
    n.attachment_ = attachment;
    emit(n, NetworkEvent{NetworkEvent::Kind::Attached, attachment});
}

void SimNetwork::detach(const std::string& name) {
    auto& n = node(name);
    if (!n.attachment_) return;
    n.attachment_.reset();
    for (auto& weak : links_) {
        if (auto link = weak.lock(); link && link->breakable() && (link->node(0) == name || link->node(1) == name)) {
            link->break_link();
        }
    }
    std::erase_if(links_, [](const auto& w) { return w.expired(); });
    emit(n, NetworkEvent{NetworkEvent::Kind::Detached, {}});
}

std::size_t SimNetwork::break_links(const std::string& a, const std::string& b) {
    std::size_t count = 0;
    for (auto& weak : links_) {
        auto link = weak.lock();
        if (!link || !link->breakable() || link->broken()) continue;
        if ((link->node(0) == a && link->node(1) == b) || (link->node(0) == b && link->node(1) == a)) {
            link->break_link();
            ++count;
        }
    }
    return count;
}

std::optional<std::string> SimNetwork::owner_of(const OverlayAddress& address) const {
    auto it = registry_.find(address.value);
    if (it == registry_.end()) return std::nullopt;
    return it->second.owner;
}

bool SimNetwork::address_live(const OverlayAddress& address) const {
    auto it = registry_.find(address.value);
    if (it == registry_.end()) return false;
    const auto& owner = *nodes_.at(it->second.owner);
    return owner.attachment_ && *owner.attachment_ == it->second.attachment;
}

std::uint64_t SimNetwork::connect_attempts(const std::string& from, const std::string& to_owner) const {
    auto it = attempts_.find({from, to_owner});
    return it == attempts_.end() ? 0 : it->second;
}

std::pair<StreamPtr, StreamPtr> SimNetwork::make_pipe(const LinkProfile& profile) {
    auto link = new_link(profile, "", "", true);
    return {std::make_shared<SimEndpoint>(link, 0), std::make_shared<SimEndpoint>(link, 1)};
}

std::shared_ptr<Link> SimNetwork::new_link(const LinkProfile& profile, const std::string& a, const std::string& b,
                                           bool breakable) {
    auto link = std::make_shared<Link>(sim_, profile, a, b, breakable);
    if (breakable) links_.push_back(link);
    return link;
}

void SimNetwork::do_connect(SimNode& from, const OverlayAddress& address, TimeMs timeout_ms,
                            std::function<void(ConnectResult)> done) {
    auto fail_at = [this, done](TimeMs delay, TransportError error) {
        sim_.schedule(delay, [done, error] { done(ConnectResult{nullptr, error}); });
    };
    if (!from.attachment_) {
        fail_at(0, TransportError::TransportDown);
        return;
    }
    const auto owner = owner_of(address);
    if (owner) ++attempts_[{from.name_, *owner}];
    if (timeout_ms == 0) {
        fail_at(0, TransportError::Timeout);
        return;
    }
    const auto& profile = config_.direct_links ? config_.direct : config_.overlay;
    TimeMs one_way = profile.latency_ms;
    if (profile.jitter_ms > 0) one_way += sim_.rng().uniform(0, profile.jitter_ms);
    const TimeMs setup = 2 * one_way;

    if (!owner || !address_live(address)) {
        if (config_.black_hole_stale) {
            fail_at(timeout_ms, TransportError::Timeout);
        } else {
            fail_at(std::min(setup, timeout_ms), setup > timeout_ms ? TransportError::Timeout
                                                                     : TransportError::ConnectRefused);
        }
        return;
    }
    if (setup > timeout_ms) {
        fail_at(timeout_ms, TransportError::Timeout);
        return;
    }

    auto link = new_link(profile, from.name_, *owner, true);
    auto client = std::make_shared<SimEndpoint>(link, 0);
    auto server = std::make_shared<SimEndpoint>(link, 1);
    auto accepted = std::make_shared<bool>(false);
    const std::string owner_name = *owner;
    const std::string from_name = from.name_;

    // The request reaches the owner after one way; the caller learns the
    // outcome after the round trip.
    sim_.schedule(one_way, [this, address, owner_name, server, link, accepted] {
        if (!address_live(address) || link->broken()) return;
        auto& target = node(owner_name);
        if (!target.on_inbound_) return;
        *accepted = true;
        target.on_inbound_(server);
    });
    sim_.schedule(setup, [this, from_name, client, accepted, done] {
        if (!node(from_name).attachment_) {
            done(ConnectResult{nullptr, TransportError::TransportDown});
        } else if (!*accepted) {
            done(ConnectResult{nullptr, TransportError::ConnectRefused});
        } else {
            done(ConnectResult{client, std::nullopt});
        }
    });
}

}  // namespace f2f::sim
