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

#include "f2f/proxy.hpp"

#include "f2f/node.hpp"
#include "f2f/stream_io.hpp"

#include <charconv>
#include <memory>
#include <sstream>

namespace f2f {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

// ---------------------------------------------------------------- ports

PortAllocator::PortAllocator(std::uint16_t low, std::uint16_t high) : low_(low), high_(high) {
    if (low > high) throw std::invalid_argument("empty port range");
}

PortMapping PortAllocator::allocate(const PeerId& friend_id, const CapabilityId& capability) {
    if (const auto* existing = find(friend_id, capability)) return *existing;
    for (std::uint32_t port = low_; port <= high_; ++port) {
        const auto p = static_cast<std::uint16_t>(port);
        if (!by_port_.contains(p)) {
            PortMapping mapping{p, friend_id, capability};
            by_port_.emplace(p, mapping);
            return mapping;
        }
    }
    throw ProxyError(ProxyError::Code::ResourceExhausted, "client port range exhausted");
}

const PortMapping* PortAllocator::find(std::uint16_t port) const {
    auto it = by_port_.find(port);
    return it == by_port_.end() ? nullptr : &it->second;
}

const PortMapping* PortAllocator::find(const PeerId& friend_id, const CapabilityId& capability) const {
    for (const auto& [port, mapping] : by_port_) {
        if (mapping.friend_id == friend_id && mapping.capability == capability) return &mapping;
    }
    return nullptr;
}

std::vector<PortMapping> PortAllocator::mappings() const {
    std::vector<PortMapping> out;
    out.reserve(by_port_.size());
    for (const auto& [port, mapping] : by_port_) out.push_back(mapping);
    return out;
}

std::string PortAllocator::save() const {
    std::ostringstream out;
    out << kFileHeader << '\n';
    for (const auto& [port, m] : by_port_) {
        out << port << ' ' << m.friend_id.hex() << ' ' << m.capability.hex() << '\n';
    }
    return out.str();
}

PortAllocator PortAllocator::load(std::string_view text, std::uint16_t low, std::uint16_t high) {
    auto parse_error = [](const std::string& what) {
        return ProxyError(ProxyError::Code::ParseError, "port file: " + what);
    };
    PortAllocator out(low, high);
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != kFileHeader) throw parse_error("missing header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string port_text, peer_hex, cap_hex;
        if (!(fields >> port_text >> peer_hex >> cap_hex)) throw parse_error("malformed line: " + line);
        std::uint16_t port = 0;
        auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
        if (ec != std::errc{} || ptr != port_text.data() + port_text.size()) throw parse_error("bad port " + port_text);
        if (port < low || port > high) throw parse_error("port outside range: " + port_text);
        PortMapping mapping;
        try {
            mapping = PortMapping{port, PeerId::from_hex(peer_hex), CapabilityId::from_hex(cap_hex)};
        } catch (const std::invalid_argument& e) {
            throw parse_error(e.what());
        }
        if (out.by_port_.contains(port) || out.find(mapping.friend_id, mapping.capability)) {
            throw parse_error("duplicate mapping: " + line);
        }
        out.by_port_.emplace(port, mapping);
    }
    return out;
}

// ---------------------------------------------------------------- nonces

const char* to_string(NonceCheck check) {
    switch (check) {
        case NonceCheck::Fresh: return "fresh";
        case NonceCheck::Unknown: return "unknown";
        case NonceCheck::Reused: return "reused";
        case NonceCheck::Expired: return "expired";
    }
    return "?";
}

std::uint32_t NonceTable::issue(Rng& rng, TimeMs now) {
    purge(now);
    std::uint32_t nonce = 0;
    do {
        nonce = rng.next_u32();
    } while (entries_.contains(nonce));
    entries_.emplace(nonce, Entry{now, false});
    return nonce;
}

NonceCheck NonceTable::consume(std::uint32_t nonce, TimeMs now) {
    auto it = entries_.find(nonce);
    if (it == entries_.end()) return NonceCheck::Unknown;
    if (it->second.used) return NonceCheck::Reused;
    it->second.used = true;
    return now - it->second.issued_at > ttl_ms_ ? NonceCheck::Expired : NonceCheck::Fresh;
}

void NonceTable::purge(TimeMs now) {
    // Keep entries for two lifetimes so late replays still read as Reused.
    std::erase_if(entries_, [&](const auto& kv) { return now - kv.second.issued_at > 2 * ttl_ms_; });
}

// ---------------------------------------------------------------- pump

namespace {

class PumpState : public std::enable_shared_from_this<PumpState> {
public:
    PumpState(StreamPtr a, StreamPtr b, std::function<void(PumpTotals)> done) : done_(std::move(done)) {
        dirs_[0] = {a, b};
        dirs_[1] = {b, a};
    }

    void start() {
        auto self = shared_from_this();
        std::weak_ptr<PumpState> weak = self;
        auto step = [weak](int i) {
            return [weak, i] {
                if (auto s = weak.lock()) s->step(i);
            };
        };
        // a: readable drives a->b, writable drives b->a. Same for b mirrored.
        dirs_[0].src->set_on_readable(step(0));
        dirs_[0].src->set_on_writable(step(1));
        dirs_[1].src->set_on_readable(step(1));
        dirs_[1].src->set_on_writable(step(0));
        self_ = self;  // kept alive by the handlers until both directions end
        step(0)();
        step(1)();
    }

private:
    struct Direction {
        StreamPtr src;
        StreamPtr dst;
        std::uint64_t copied = 0;
        bool done = false;
    };

    void step(int i) {
        auto& d = dirs_[i];
        while (!d.done) {
            const auto avail = d.src->readable();
            if (avail == 0) {
                if (d.src->was_reset()) {
                    d.dst->abort();
                    end_all();
                } else if (d.src->at_eof()) {
                    d.dst->shutdown_write();
                    finish(i);
                }
                return;
            }
            const auto room = d.dst->writable();
            if (room == 0) {
                if (d.dst->write({}).status != WriteStatus::Ok) fail(i);
                return;
            }
            const auto chunk = d.src->read(std::min(avail, room));
            const auto result = d.dst->write(chunk);
            if (result.status != WriteStatus::Ok || result.accepted != chunk.size()) {
                fail(i);
                return;
            }
            d.copied += result.accepted;
        }
    }

    void fail(int i) {
        // The destination is gone: stop reading the source and let its
        // writer see end-of-stream. Nothing more can flow the other way.
        dirs_[i].src->close();
        end_all();
    }

    void finish(int i) {
        dirs_[i].done = true;
        if (dirs_[0].done && dirs_[1].done) complete();
    }

    void end_all() {
        dirs_[0].done = true;
        dirs_[1].done = true;
        complete();
    }

    void complete() {
        if (completed_) return;
        completed_ = true;
        for (auto& d : dirs_) {
            d.src->clear_handlers();
            d.src->close();
        }
        if (done_) done_(PumpTotals{dirs_[0].copied, dirs_[1].copied});
        self_.reset();
    }

    Direction dirs_[2];
    std::function<void(PumpTotals)> done_;
    std::shared_ptr<PumpState> self_;
    bool completed_ = false;
};

}  // namespace

void pump(const StreamPtr& a, const StreamPtr& b, std::function<void(PumpTotals)> done) {
    std::make_shared<PumpState>(a, b, std::move(done))->start();
}

// ---------------------------------------------------------------- client

const char* to_string(DialOutcome outcome) {
    switch (outcome) {
        case DialOutcome::Accepted: return "accepted";
        case DialOutcome::Rejected: return "rejected";
        case DialOutcome::Unreachable: return "unreachable";
        case DialOutcome::Latched: return "latched";
        case DialOutcome::NotAttached: return "not-attached";
        case DialOutcome::ProtocolError: return "protocol-error";
    }
    return "?";
}

ClientProxy::ClientProxy(Node& node)
    : node_(node), ports_(node.config().proxy.port_low, node.config().proxy.port_high) {}

PortMapping ClientProxy::open_client_port(const PeerId& friend_id, const CapabilityId& capability) {
    const auto* record = node_.contacts().find(friend_id);
    if (!record) throw ProxyError(ProxyError::Code::UnknownPeer, "not a friend: " + friend_id.hex());
    if (!record->offers(capability)) {
        throw ProxyError(ProxyError::Code::CapabilityUnknown,
                         record->name + " does not offer capability " + capability.hex());
    }
    const auto mapping = ports_.allocate(friend_id, capability);
    if (!listening_.contains(mapping.local_port)) {
        const bool ok = node_.loopback().listen(mapping.local_port, [this, mapping](StreamPtr app) {
            handle_outbound(mapping, app);
        });
        if (!ok) throw ProxyError(ProxyError::Code::ResourceExhausted, "port in use");
        listening_.insert(mapping.local_port);
    }
    return mapping;
}

std::uint64_t ClientProxy::transport_connects(const PeerId& friend_id) const {
    auto it = connects_.find(friend_id);
    return it == connects_.end() ? 0 : it->second;
}

void ClientProxy::mark_unreachable(const PeerId& friend_id) {
    if (!node_.contacts().contains(friend_id)) return;
    node_.contacts().set_status(friend_id, OnlineStatus::Offline, node_.scheduler().now());
    if (latched_.insert(friend_id).second) node_.log("marks " + node_.name_of(friend_id) + " offline");
    node_.ensure_recovery(friend_id);
}

void ClientProxy::dial(const PeerId& friend_id, wire::MessageBody body, bool latching, DialCallback done) {
    auto& sched = node_.scheduler();
    const auto started = sched.now();
    auto finish = [&sched, started, done = std::move(done)](DialResult result) {
        result.elapsed_ms = sched.now() - started;
        done(std::move(result));
    };
    auto finish_later = [&sched, finish](DialOutcome outcome) {
        sched.schedule(0, [finish, outcome] { finish(DialResult{outcome, std::nullopt, nullptr, 0}); });
    };

    const auto* record = node_.contacts().find(friend_id);
    if (!record) {
        finish_later(DialOutcome::ProtocolError);
        return;
    }
    if (latching && latched(friend_id)) {
        finish_later(DialOutcome::Latched);
        return;
    }
    if (!node_.transport().attached() || record->address.empty()) {
        finish_later(node_.transport().attached() ? DialOutcome::Unreachable : DialOutcome::NotAttached);
        return;
    }

    ++connects_[friend_id];
    const auto cfg = node_.config().proxy;
    // A failure against an address that was replaced mid-dial says nothing
    // about the friend's current one.
    auto on_unreachable = [this, friend_id, latching, dialed = record->address_version](TransportError error) {
        if (error == TransportError::TransportDown || !latching) return;
        const auto* now = node_.contacts().find(friend_id);
        if (now && now->address_version != dialed) return;
        mark_unreachable(friend_id);
    };

    node_.transport().connect(record->address, cfg.connect_timeout_ms, [this, &sched, cfg, friend_id, finish,
                                                                        on_unreachable,
                                                                        body = std::move(body)](ConnectResult cr) {
        if (!cr.ok()) {
            const auto error = cr.error.value_or(TransportError::ConnectRefused);
            on_unreachable(error);
            finish(DialResult{error == TransportError::TransportDown ? DialOutcome::NotAttached
                                                                     : DialOutcome::Unreachable,
                              error, nullptr, 0});
            return;
        }
        auto stream = cr.stream;
        read_exact(sched, stream, wire::kChallengeSize, cfg.handshake_timeout_ms,
                   [this, &sched, cfg, stream, finish, on_unreachable, body](std::optional<Bytes> challenge) {
            if (!challenge) {
                stream->abort();
                on_unreachable(TransportError::Timeout);
                finish(DialResult{DialOutcome::Unreachable, TransportError::Timeout, nullptr, 0});
                return;
            }
            std::uint32_t nonce = 0;
            try {
                nonce = wire::decode_challenge(*challenge);
            } catch (const wire::WireError&) {
                stream->abort();
                finish(DialResult{DialOutcome::ProtocolError, std::nullopt, nullptr, 0});
                return;
            }
            wire::ConnectionMessage msg;
            msg.sender_id = node_.identity().id;
            msg.random_number = nonce;
            msg.body = body;
            auto frame = wire::encode_connection_message(msg, node_.identity().keys.private_key);
            write_all(stream, std::move(frame), [&sched, cfg, stream, finish](bool ok) {
                if (!ok) {
                    finish(DialResult{DialOutcome::Unreachable, TransportError::ConnectRefused, nullptr, 0});
                    return;
                }
                read_exact(sched, stream, 1, cfg.handshake_timeout_ms,
                           [stream, finish](std::optional<Bytes> verdict) {
                    if (!verdict) {
                        stream->abort();
                        finish(DialResult{DialOutcome::ProtocolError, std::nullopt, nullptr, 0});
                        return;
                    }
                    bool accepted = false;
                    try {
                        accepted = wire::decode_verdict((*verdict)[0]);
                    } catch (const wire::WireError&) {
                        stream->abort();
                        finish(DialResult{DialOutcome::ProtocolError, std::nullopt, nullptr, 0});
                        return;
                    }
                    if (!accepted) {
                        stream->close();
                        finish(DialResult{DialOutcome::Rejected, std::nullopt, nullptr, 0});
                        return;
                    }
                    finish(DialResult{DialOutcome::Accepted, std::nullopt, stream, 0});
                });
            });
        });
    });
}

void ClientProxy::handle_outbound(const PortMapping& mapping, const StreamPtr& app) {
    const auto started = node_.scheduler().now();
    const bool channels = node_.config().channel.enabled;
    const auto channel_id = channels ? ChannelId::random(node_.rng()) : ChannelId{};
    const auto peer = mapping.friend_id;
    dial(peer, wire::ApplicationBody{mapping.capability, channel_id}, true,
         [this, app, peer, channel_id, channels, started](DialResult result) {
        const auto name = node_.name_of(peer);
        if (result.outcome != DialOutcome::Accepted) {
            node_.log("session -> " + name + " failed: " + to_string(result.outcome));
            app->close();
            return;
        }
        connect_times_.push_back(node_.scheduler().now() - started);
        node_.log("session -> " + name + " established");
        if (channels) {
            node_.channels().start_initiator(peer, channel_id, app, result.stream);
        } else {
            pump(app, result.stream);
        }
    });
}

// ---------------------------------------------------------------- server

ServerProxy::ServerProxy(Node& node) : node_(node), nonces_(node.config().proxy.nonce_ttl_ms) {}

void ServerProxy::reject(const StreamPtr& stream) {
    write_all(stream, Bytes{wire::encode_verdict(false)}, [stream](bool) { stream->close(); });
}

void ServerProxy::handle_inbound(const StreamPtr& stream) {
    ++counters_.inbound;
    auto& sched = node_.scheduler();
    const auto nonce = nonces_.issue(node_.rng(), sched.now());
    write_all(stream, wire::encode_challenge(nonce), [](bool) {});
    read_frame(sched, stream, node_.config().proxy.inbound_timeout_ms, [this, stream, nonce](std::optional<Bytes> frame) {
        if (!frame) {
            ++counters_.rejected_timeout;
            reject(stream);
            return;
        }
        wire::ConnectionMessage msg;
        try {
            msg = wire::decode_connection_message(*frame, [this](const PeerId& id) -> std::optional<PublicKey> {
                if (const auto* record = node_.contacts().find(id)) return record->public_key;
                return std::nullopt;
            });
        } catch (const wire::WireError& e) {
            switch (e.code()) {
                case wire::WireErrorCode::FrameError: ++counters_.rejected_malformed; break;
                case wire::WireErrorCode::UnknownPeer: ++counters_.rejected_unknown_peer; break;
                case wire::WireErrorCode::AuthFailure: ++counters_.rejected_signature; break;
            }
            node_.log(std::string("rejects inbound: ") + e.what());
            reject(stream);
            return;
        }
        // The stream's nonce is spent whatever the message claims.
        const auto check = nonces_.consume(nonce, node_.scheduler().now());
        if (msg.random_number != nonce || check != NonceCheck::Fresh) {
            ++counters_.rejected_nonce;
            node_.log("rejects inbound from " + node_.name_of(msg.sender_id) + ": nonce " +
                      (msg.random_number != nonce ? "mismatch" : to_string(check)));
            reject(stream);
            return;
        }
        node_.contacts().set_status(msg.sender_id, OnlineStatus::Online, node_.scheduler().now());
        dispatch(stream, msg, true);
    });
}

void ServerProxy::dispatch(const StreamPtr& stream, const wire::ConnectionMessage& msg, bool authenticated) {
    const auto sender = msg.sender_id;
    std::visit(
        Overloaded{
            [&](const wire::ApplicationBody& app) {
                const auto port = node_.service_port(app.destination);
                StreamPtr service = port ? node_.loopback().connect(*port) : nullptr;
                if (!service) {
                    ++counters_.rejected_capability;
                    node_.log("rejects inbound from " + node_.name_of(sender) + ": no service " +
                              app.destination.hex());
                    reject(stream);
                    return;
                }
                ++counters_.service_sessions;
                if (!authenticated) ++counters_.auth_violations;
                ++counters_.accepted;
                node_.log("session <- " + node_.name_of(sender) + " accepted");
                const bool channels = node_.config().channel.enabled && !app.channel_id.is_zero();
                write_all(stream, Bytes{wire::encode_verdict(true)},
                          [this, stream, service, sender, channels, id = app.channel_id](bool ok) {
                    if (!ok) {
                        service->close();
                        stream->abort();
                        return;
                    }
                    if (channels) {
                        node_.channels().start_acceptor(sender, id, service, stream);
                    } else {
                        pump(service, stream);
                    }
                });
            },
            [&](const wire::SystemMessageBody& body) {
                ++counters_.accepted;
                const auto reply = node_.sysmsg().dispatch(sender, body);
                Bytes out{wire::encode_verdict(true)};
                const auto frame = wire::encode_system_reply(reply);
                out.insert(out.end(), frame.begin(), frame.end());
                write_all(stream, std::move(out), [stream](bool) { stream->close(); });
            },
            [&](const wire::ReconnectBody& body) {
                ++counters_.accepted;
                node_.channels().handle_resume(sender, body, stream);
            },
        },
        msg.body);
}

}  // namespace f2f
