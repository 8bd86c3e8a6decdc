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

#include "f2f/channel.hpp"

#include "f2f/node.hpp"
#include "f2f/stream_io.hpp"

#include <algorithm>
#include <stdexcept>

namespace f2f {

// ---------------------------------------------------------------- window

SendWindow::SendWindow(std::size_t capacity) : ring_(capacity) {
    if (capacity == 0) throw std::invalid_argument("window capacity must be positive");
}

void SendWindow::append(ByteView data) {
    const auto cap = ring_.size();
    // Only the last `cap` bytes can survive; skip the rest up front.
    if (data.size() > cap) {
        total_sent_ += data.size() - cap;
        data = data.subspan(data.size() - cap);
    }
    auto pos = static_cast<std::size_t>(total_sent_ % cap);
    const auto first = std::min(data.size(), cap - pos);
    std::copy_n(data.begin(), first, ring_.begin() + static_cast<std::ptrdiff_t>(pos));
    std::copy(data.begin() + static_cast<std::ptrdiff_t>(first), data.end(), ring_.begin());
    total_sent_ += data.size();
}

std::optional<Bytes> SendWindow::replay_from(std::uint64_t received) const {
    if (received > total_sent_) throw std::invalid_argument("receiver claims more than was sent");
    const auto gap = total_sent_ - received;
    const auto cap = ring_.size();
    if (gap > cap) return std::nullopt;
    Bytes out(static_cast<std::size_t>(gap));
    auto pos = static_cast<std::size_t>(received % cap);
    for (auto& b : out) {
        b = ring_[pos];
        pos = pos + 1 == cap ? 0 : pos + 1;
    }
    return out;
}

const char* to_string(ResumeResult result) {
    switch (result) {
        case ResumeResult::Resumed: return "Resumed";
        case ResumeResult::NoSuchChannel: return "NoSuchChannel";
        case ResumeResult::NotYourChannel: return "NotYourChannel";
        case ResumeResult::WindowExceeded: return "WindowExceeded";
    }
    return "?";
}

const char* to_string(ChannelState state) {
    switch (state) {
        case ChannelState::Connected: return "connected";
        case ChannelState::Disconnected: return "disconnected";
        case ChannelState::Resuming: return "resuming";
        case ChannelState::Closed: return "closed";
        case ChannelState::TornDown: return "torn-down";
    }
    return "?";
}

// ---------------------------------------------------------------- channel

/// One end of a reconnectable channel.
///
/// Outbound bytes go app -> SendWindow -> overlay. While connected we never
/// let more than W bytes sit unread at the peer, so a resume can always be
/// served from the window. While disconnected the application is read at the
/// trickle rate into the overflow queue (or straight into the window when the
/// queue is disabled) and nothing is written toward it.
class Channel : public std::enable_shared_from_this<Channel> {
public:
    Channel(ChannelManager& manager, Node& node, PeerId peer, ChannelId id, ChannelRole role, StreamPtr app)
        : manager_(manager),
          node_(node),
          cfg_(node.config().channel),
          peer_(peer),
          id_(id),
          role_(role),
          app_(std::move(app)),
          window_(cfg_.window) {}

    void start(const StreamPtr& overlay) {
        std::weak_ptr<Channel> weak = shared_from_this();
        app_->set_on_readable([weak] {
            if (auto s = weak.lock()) s->pump_out();
        });
        app_->set_on_writable([weak] {
            if (auto s = weak.lock()) s->pump_in();
        });
        install(overlay, {}, 0);
    }

    [[nodiscard]] const PeerId& peer() const { return peer_; }

    [[nodiscard]] ChannelInfo info() const {
        return ChannelInfo{id_, peer_, role_, state_, window_.total_sent(), received_, overflow_.size(), outages_,
                           resumes_};
    }

    ResumeResult accept_resume(std::uint64_t claim, const StreamPtr& stream) {
        auto self = shared_from_this();
        if (claim > window_.total_sent()) {
            refuse(stream);
            teardown("resume claims unsent bytes", true);
            return ResumeResult::WindowExceeded;
        }
        auto replay = window_.replay_from(claim);
        if (!replay) {
            refuse(stream);
            ++manager_.counters_.window_exceeded;
            teardown("window exceeded on resume", true);
            return ResumeResult::WindowExceeded;
        }
        drop_overlay();
        if (state_ == ChannelState::Connected) ++outages_;  // we never noticed the break
        state_ = ChannelState::Resuming;
        const auto epoch = ++epoch_;
        const auto our_claim = received_;
        Bytes hello{wire::encode_verdict(true)};
        const auto ack = wire::encode_resume_ack(wire::ReconnectBody{id_, our_claim});
        hello.insert(hello.end(), ack.begin(), ack.end());
        std::weak_ptr<Channel> weak = self;
        write_all(stream, std::move(hello), [weak, stream, epoch, our_claim, replay = std::move(*replay)](bool ok) {
            auto s = weak.lock();
            if (!s || s->epoch_ != epoch) return;
            if (!ok) {
                s->fall_back("resume handshake write failed");
                return;
            }
            read_exact(s->node_.scheduler(), stream, 1, s->node_.config().proxy.handshake_timeout_ms,
                       [weak, stream, epoch, our_claim, replay](std::optional<Bytes> verdict) {
                auto s = weak.lock();
                if (!s || s->epoch_ != epoch) return;
                if (!verdict) {
                    stream->abort();
                    s->fall_back("resume handshake timed out");
                    return;
                }
                if ((*verdict)[0] != wire::kVerdictAccept) {
                    ++s->manager_.counters_.window_exceeded;
                    s->teardown("peer refused resume", false);
                    return;
                }
                s->resumed(stream, replay, our_claim);
            });
        });
        return ResumeResult::Resumed;
    }

    void disconnect(const std::string& reason) { enter_disconnected(reason); }

    void attempt_now() {
        if (role_ != ChannelRole::Initiator || state_ != ChannelState::Disconnected) return;
        node_.scheduler().cancel(retry_);
        retry_ = 0;
        attempt_resume();
    }

    void cancel_timers() {
        auto& sched = node_.scheduler();
        for (auto* t : {&keepalive_, &trickle_, &grace_, &retry_, &linger_}) {
            sched.cancel(*t);
            *t = 0;
        }
    }

private:
    // -------------------------------------------------- stream lifecycle

    void install(const StreamPtr& overlay, Bytes replay, std::uint64_t in_pos) {
        overlay_ = overlay;
        ++epoch_;
        state_ = ChannelState::Connected;
        replay_ = std::move(replay);
        replay_off_ = 0;
        in_pos_ = in_pos;
        eof_sent_ = false;
        auto& sched = node_.scheduler();
        sched.cancel(grace_);
        sched.cancel(retry_);
        grace_ = retry_ = 0;
        std::weak_ptr<Channel> weak = shared_from_this();
        overlay_->set_on_readable([weak] {
            if (auto s = weak.lock()) s->pump_in();
        });
        overlay_->set_on_writable([weak] {
            if (auto s = weak.lock()) s->pump_out();
        });
        schedule_keepalive();
        pump_out();
        pump_in();
    }

    void resumed(const StreamPtr& stream, const Bytes& replay, std::uint64_t in_pos) {
        ++resumes_;
        ++manager_.counters_.resumes;
        node_.log("channel " + short_id() + " resumed, replaying " + std::to_string(replay.size()) + " bytes");
        const bool was_closed = app_done();
        install(stream, replay, in_pos);
        if (was_closed && state_ == ChannelState::Connected) check_done();
    }

    void drop_overlay() {
        if (!overlay_) return;
        overlay_->clear_handlers();
        overlay_.reset();
    }

    void enter_disconnected(const std::string& reason) {
        if (state_ == ChannelState::TornDown || state_ == ChannelState::Disconnected ||
            state_ == ChannelState::Resuming) {
            return;
        }
        const bool was_closed = state_ == ChannelState::Closed;
        if (was_closed && role_ == ChannelRole::Acceptor) return;
        drop_overlay();
        ++epoch_;
        state_ = ChannelState::Disconnected;
        ++outages_;
        node_.log("channel " + short_id() + " disconnected: " + reason);
        auto& sched = node_.scheduler();
        sched.cancel(keepalive_);
        keepalive_ = 0;
        start_outage_timers();
        if (role_ == ChannelRole::Initiator) schedule_retry();
    }

    /// A resume attempt failed; wait for the next one.
    void fall_back(const std::string& reason) {
        if (state_ != ChannelState::Resuming) return;
        drop_overlay();
        ++epoch_;
        state_ = ChannelState::Disconnected;
        node_.log("channel " + short_id() + " resume failed: " + reason);
        start_outage_timers();
        if (role_ == ChannelRole::Initiator) schedule_retry();
    }

    void start_outage_timers() {
        if (app_done()) return;
        std::weak_ptr<Channel> weak = shared_from_this();
        auto& sched = node_.scheduler();
        if (grace_ == 0) {
            grace_ = sched.schedule(cfg_.grace_ms, [weak] {
                if (auto s = weak.lock()) {
                    s->grace_ = 0;
                    s->teardown("grace period expired", true);
                }
            });
        }
        if (trickle_ == 0) schedule_trickle();
    }

    void schedule_trickle() {
        std::weak_ptr<Channel> weak = shared_from_this();
        trickle_ = node_.scheduler().schedule(cfg_.trickle_tick_ms, [weak] {
            if (auto s = weak.lock()) {
                s->trickle_ = 0;
                s->trickle_tick();
            }
        });
    }

    void trickle_tick() {
        if (state_ != ChannelState::Disconnected && state_ != ChannelState::Resuming) return;
        if (state_ == ChannelState::Disconnected && !app_eof_) {
            auto budget = std::max<std::size_t>(1, cfg_.trickle_bytes_per_s * cfg_.trickle_tick_ms / 1000);
            if (cfg_.overflow > 0) {
                budget = std::min(budget, cfg_.overflow - std::min(cfg_.overflow, overflow_.size()));
            }
            const auto n = std::min(budget, app_->readable());
            if (n > 0) {
                const auto chunk = app_->read(n);
                if (cfg_.overflow > 0) {
                    overflow_.insert(overflow_.end(), chunk.begin(), chunk.end());
                } else {
                    window_.append(chunk);
                }
            } else if (app_->readable() == 0) {
                if (app_->was_reset()) {
                    teardown("application reset", true);
                    return;
                }
                if (app_->at_eof()) app_eof_ = true;
            }
        }
        schedule_trickle();
    }

    void schedule_keepalive() {
        node_.scheduler().cancel(keepalive_);
        std::weak_ptr<Channel> weak = shared_from_this();
        keepalive_ = node_.scheduler().schedule(cfg_.keepalive_ms, [weak] {
            if (auto s = weak.lock()) {
                s->keepalive_ = 0;
                s->keepalive();
            }
        });
    }

    void keepalive() {
        const bool probing = state_ == ChannelState::Connected ||
                             (state_ == ChannelState::Closed && role_ == ChannelRole::Initiator);
        if (!probing || !overlay_) return;
        probe();
        if (state_ == ChannelState::Connected || state_ == ChannelState::Closed) schedule_keepalive();
    }

    /// Empty write: the only way to notice a silently broken stream.
    void probe() {
        const auto result = overlay_->write({});
        if (result.status == WriteStatus::Broken) {
            enter_disconnected("liveness probe failed");
        } else if (overlay_->was_reset()) {
            teardown("peer reset the channel", false);
        }
    }

    // -------------------------------------------------- data paths

    [[nodiscard]] std::size_t can_send() const {
        const auto inflight = overlay_->in_flight();
        const auto limit = inflight >= window_.capacity() ? 0 : window_.capacity() - inflight;
        return std::min(overlay_->writable(), limit);
    }

    bool send(ByteView chunk) {
        const auto result = overlay_->write(chunk);
        if (result.status == WriteStatus::Ok && result.accepted == chunk.size()) return true;
        if (overlay_->was_reset()) {
            teardown("peer reset the channel", false);
        } else {
            // Whatever was not taken is already in the window and is replayed.
            enter_disconnected("write failed");
        }
        return false;
    }

    void pump_out() {
        while (state_ == ChannelState::Connected) {
            const auto can = can_send();
            if (replay_off_ < replay_.size()) {
                if (can == 0) return probe();
                const auto n = std::min(can, replay_.size() - replay_off_);
                if (!send(ByteView{replay_}.subspan(replay_off_, n))) return;
                replay_off_ += n;
                if (replay_off_ == replay_.size()) {
                    replay_.clear();
                    replay_off_ = 0;
                }
                continue;
            }
            if (!overflow_.empty()) {
                if (can == 0) return probe();
                const auto n = std::min(can, overflow_.size());
                Bytes chunk(overflow_.begin(), overflow_.begin() + static_cast<std::ptrdiff_t>(n));
                overflow_.erase(overflow_.begin(), overflow_.begin() + static_cast<std::ptrdiff_t>(n));
                window_.append(chunk);
                if (!send(chunk)) return;
                continue;
            }
            if (!app_eof_) {
                const auto avail = app_->readable();
                if (avail > 0) {
                    if (can == 0) return probe();
                    const auto chunk = app_->read(std::min(avail, can));
                    window_.append(chunk);
                    if (!send(chunk)) return;
                    continue;
                }
                if (app_->was_reset()) return teardown("application reset", true);
                if (!app_->at_eof()) return;
                app_eof_ = true;
            }
            if (!eof_sent_) {
                overlay_->shutdown_write();
                eof_sent_ = true;
                check_done();
            }
            return;
        }
    }

    void pump_in() {
        while (state_ == ChannelState::Connected) {
            const auto avail = overlay_->readable();
            if (avail == 0) {
                if (overlay_->was_reset()) return teardown("peer reset the channel", false);
                if (overlay_->at_eof() && !peer_eof_) {
                    peer_eof_ = true;
                    if (!app_out_closed_) {
                        app_->shutdown_write();
                        app_out_closed_ = true;
                    }
                    check_done();
                } else if (overlay_->at_eof()) {
                    check_done();
                }
                return;
            }
            std::size_t room = avail;
            if (!app_out_closed_) {
                room = app_->writable();
                if (room == 0) {
                    if (app_->write({}).status != WriteStatus::Ok) teardown("application went away", true);
                    return;
                }
            }
            auto chunk = overlay_->read(std::min(avail, room));
            const auto start = in_pos_;
            in_pos_ += chunk.size();
            // Bytes below our counter were delivered before; drop the overlap.
            const auto skip = received_ > start ? std::min<std::uint64_t>(received_ - start, chunk.size()) : 0;
            if (skip > 0) chunk.erase(chunk.begin(), chunk.begin() + static_cast<std::ptrdiff_t>(skip));
            if (chunk.empty()) continue;
            received_ += chunk.size();
            if (app_out_closed_) continue;
            const auto result = app_->write(chunk);
            if (result.status != WriteStatus::Ok || result.accepted != chunk.size()) {
                return teardown("application went away", true);
            }
        }
    }

    [[nodiscard]] bool app_done() const { return app_eof_ && app_out_closed_ && eof_sent_ && peer_eof_; }

    void check_done() {
        if (state_ != ChannelState::Connected || !app_done()) return;
        if (replay_off_ < replay_.size() || !overflow_.empty()) return;
        state_ = ChannelState::Closed;
        node_.log("channel " + short_id() + " closed after " + std::to_string(window_.total_sent()) + " out / " +
                  std::to_string(received_) + " in");
        app_->clear_handlers();
        app_->close();
        overlay_->close();
        if (role_ == ChannelRole::Acceptor) {
            node_.scheduler().cancel(keepalive_);
            keepalive_ = 0;
        }
        if (linger_ == 0) {
            // Keep the state around for a late resume from the other side.
            std::weak_ptr<Channel> weak = shared_from_this();
            linger_ = node_.scheduler().schedule(cfg_.grace_ms, [weak] {
                if (auto s = weak.lock()) {
                    s->linger_ = 0;
                    s->forget();
                }
            });
        }
    }

    // -------------------------------------------------- reconnect (initiator)

    void schedule_retry() {
        if (retry_ != 0) return;
        std::weak_ptr<Channel> weak = shared_from_this();
        retry_ = node_.scheduler().schedule(cfg_.retry_ms, [weak] {
            if (auto s = weak.lock()) {
                s->retry_ = 0;
                s->attempt_resume();
            }
        });
    }

    void attempt_resume() {
        if (state_ != ChannelState::Disconnected) return;
        if (!node_.attached()) return;  // the Attached event retries
        if (node_.client().latched(peer_)) {
            schedule_retry();  // recovery was started when the latch was set
            return;
        }
        state_ = ChannelState::Resuming;
        const auto epoch = ++epoch_;
        const auto claim = received_;
        std::weak_ptr<Channel> weak = shared_from_this();
        node_.client().dial(peer_, wire::ReconnectBody{id_, claim}, true, [weak, epoch, claim](DialResult result) {
            auto s = weak.lock();
            if (!s || s->epoch_ != epoch) {
                if (result.stream) result.stream->abort();
                return;
            }
            s->on_resume_dialed(std::move(result), claim);
        });
    }

    void on_resume_dialed(DialResult result, std::uint64_t claim) {
        if (result.outcome == DialOutcome::Rejected) {
            teardown("peer refused resume", false);
            return;
        }
        if (result.outcome != DialOutcome::Accepted) {
            fall_back(std::string("reconnect ") + to_string(result.outcome));
            return;
        }
        auto stream = result.stream;
        const auto epoch = epoch_;
        std::weak_ptr<Channel> weak = shared_from_this();
        read_frame(node_.scheduler(), stream, node_.config().proxy.handshake_timeout_ms,
                   [weak, stream, epoch, claim](std::optional<Bytes> frame) {
            auto s = weak.lock();
            if (!s || s->epoch_ != epoch) {
                stream->abort();
                return;
            }
            std::optional<wire::ReconnectBody> ack;
            if (frame) {
                try {
                    ack = wire::decode_resume_ack(*frame);
                } catch (const wire::WireError&) {
                }
            }
            if (!ack || ack->channel_id != s->id_) {
                stream->abort();
                s->fall_back("bad resume acknowledgement");
                return;
            }
            std::optional<Bytes> replay;
            if (ack->received_count <= s->window_.total_sent()) replay = s->window_.replay_from(ack->received_count);
            if (!replay) {
                s->refuse(stream);
                ++s->manager_.counters_.window_exceeded;
                s->teardown("window exceeded on resume", false);
                return;
            }
            const auto verdict = stream->write(Bytes{wire::encode_verdict(true)});
            if (verdict.status != WriteStatus::Ok || verdict.accepted != 1) {
                stream->abort();
                s->fall_back("resume verdict write failed");
                return;
            }
            s->resumed(stream, *replay, claim);
        });
    }

    // -------------------------------------------------- teardown

    void refuse(const StreamPtr& stream) {
        write_all(stream, Bytes{wire::encode_verdict(false)}, [stream](bool) { stream->close(); });
    }

    void teardown(const std::string& reason, bool notify_peer) {
        if (state_ == ChannelState::TornDown) return;
        auto self = shared_from_this();
        const bool surfaced = !app_done();
        state_ = ChannelState::TornDown;
        ++epoch_;
        cancel_timers();
        ++manager_.counters_.teardowns;
        node_.log("channel " + short_id() + " torn down: " + reason);
        if (overlay_) {
            overlay_->clear_handlers();
            if (notify_peer) overlay_->abort();
            overlay_.reset();
        }
        app_->clear_handlers();
        if (surfaced) {
            app_->abort();
            ++manager_.counters_.app_errors;
        }
        forget();
    }

    void forget() {
        auto self = shared_from_this();
        cancel_timers();
        manager_.forget(id_);
    }

    [[nodiscard]] std::string short_id() const { return id_.hex().substr(0, 8); }

    ChannelManager& manager_;
    Node& node_;
    ChannelConfig cfg_;
    PeerId peer_;
    ChannelId id_;
    ChannelRole role_;
    ChannelState state_ = ChannelState::Connected;
    StreamPtr app_;
    StreamPtr overlay_;
    std::uint64_t epoch_ = 0;

    SendWindow window_;
    std::uint64_t received_ = 0;
    std::uint64_t in_pos_ = 0;  // stream position of the next byte read from overlay_
    Bytes replay_;
    std::size_t replay_off_ = 0;
    Bytes overflow_;

    bool app_eof_ = false;         // the application finished sending
    bool app_out_closed_ = false;  // we finished writing to the application
    bool eof_sent_ = false;        // end-of-stream written on the current overlay stream
    bool peer_eof_ = false;        // the peer finished sending

    TimerId keepalive_ = 0;
    TimerId trickle_ = 0;
    TimerId grace_ = 0;
    TimerId retry_ = 0;
    TimerId linger_ = 0;

    std::uint64_t outages_ = 0;
    std::uint64_t resumes_ = 0;
};

// ---------------------------------------------------------------- manager

ChannelManager::ChannelManager(Node& node) : node_(node) {}

ChannelManager::~ChannelManager() = default;

std::shared_ptr<Channel> ChannelManager::create(const PeerId& peer, const ChannelId& id, ChannelRole role,
                                                const StreamPtr& app, const StreamPtr& overlay) {
    if (auto it = channels_.find(id); it != channels_.end()) {
        // Ids are random 128-bit values; a clash means a confused or hostile peer.
        app->abort();
        overlay->abort();
        return nullptr;
    }
    auto channel = std::make_shared<Channel>(*this, node_, peer, id, role, app);
    channels_.emplace(id, channel);
    ++counters_.opened;
    node_.log("channel " + id.hex().substr(0, 8) + " opened with " + node_.name_of(peer));
    channel->start(overlay);
    return channel;
}

void ChannelManager::start_initiator(const PeerId& peer, const ChannelId& id, const StreamPtr& app,
                                     const StreamPtr& overlay) {
    create(peer, id, ChannelRole::Initiator, app, overlay);
}

void ChannelManager::start_acceptor(const PeerId& peer, const ChannelId& id, const StreamPtr& app,
                                    const StreamPtr& overlay) {
    create(peer, id, ChannelRole::Acceptor, app, overlay);
}

ResumeResult ChannelManager::handle_resume(const PeerId& sender, const wire::ReconnectBody& body,
                                           const StreamPtr& stream) {
    auto refuse = [&stream] {
        write_all(stream, Bytes{wire::encode_verdict(false)}, [stream](bool) { stream->close(); });
    };
    auto it = channels_.find(body.channel_id);
    if (it == channels_.end()) {
        node_.log("resume <- " + node_.name_of(sender) + " refused: NoSuchChannel");
        refuse();
        return ResumeResult::NoSuchChannel;
    }
    if (it->second->peer() != sender) {
        node_.log("resume <- " + node_.name_of(sender) + " refused: NotYourChannel");
        refuse();
        return ResumeResult::NotYourChannel;
    }
    auto channel = it->second;
    const auto result = channel->accept_resume(body.received_count, stream);
    if (result != ResumeResult::Resumed) {
        node_.log("resume <- " + node_.name_of(sender) + " refused: " + to_string(result));
    }
    return result;
}

void ChannelManager::on_detached() {
    auto all = channels_;
    for (auto& [id, channel] : all) channel->disconnect("network detached");
}

void ChannelManager::on_attached() {
    auto all = channels_;
    for (auto& [id, channel] : all) channel->attempt_now();
}

void ChannelManager::on_peer_moved(const PeerId& peer) {
    auto all = channels_;
    for (auto& [id, channel] : all) {
        if (channel->peer() == peer) channel->disconnect("peer moved");
    }
    for (auto& [id, channel] : all) {
        if (channel->peer() == peer) channel->attempt_now();
    }
}

std::optional<ChannelInfo> ChannelManager::info(const ChannelId& id) const {
    auto it = channels_.find(id);
    if (it == channels_.end()) return std::nullopt;
    return it->second->info();
}

std::vector<ChannelInfo> ChannelManager::snapshot() const {
    std::vector<ChannelInfo> out;
    out.reserve(channels_.size());
    for (const auto& [id, channel] : channels_) out.push_back(channel->info());
    return out;
}

void ChannelManager::forget(const ChannelId& id) {
    channels_.erase(id);
}

}  // namespace f2f
