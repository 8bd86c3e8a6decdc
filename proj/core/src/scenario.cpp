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

#include "f2f/scenario.hpp"

#include "f2f/stream_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace f2f::sim {

namespace {

std::vector<std::string> split_words(std::string_view line) {
    std::vector<std::string> out;
    std::istringstream in{std::string(line)};
    std::string word;
    while (in >> word) out.push_back(word);
    return out;
}

std::uint64_t parse_number(std::string_view text, std::string_view what) {
    std::uint64_t value = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || text.empty()) {
        throw std::invalid_argument("bad " + std::string(what) + " '" + std::string(text) + "'");
    }
    return value;
}

/// Splits "12.5s" into a number and a suffix, scaling by the matching unit.
std::uint64_t parse_scaled(std::string_view text, const std::vector<std::pair<std::string_view, double>>& units,
                           std::string_view what) {
    for (const auto& [suffix, scale] : units) {
        if (suffix.empty() || text.size() <= suffix.size() || !text.ends_with(suffix)) continue;
        const auto digits = std::string(text.substr(0, text.size() - suffix.size()));
        std::size_t used = 0;
        double value = 0;
        try {
            value = std::stod(digits, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != digits.size() || value < 0) {
            throw std::invalid_argument("bad " + std::string(what) + " '" + std::string(text) + "'");
        }
        return static_cast<std::uint64_t>(std::llround(value * scale));
    }
    return parse_number(text, what);
}

std::string join(const std::vector<std::string>& words, std::size_t from = 0) {
    std::string out;
    for (std::size_t i = from; i < words.size(); ++i) {
        if (i > from) out += ' ';
        out += words[i];
    }
    return out;
}

bool compare(std::uint64_t lhs, const std::string& op, std::uint64_t rhs) {
    if (op == "==") return lhs == rhs;
    if (op == "!=") return lhs != rhs;
    if (op == "<") return lhs < rhs;
    if (op == "<=") return lhs <= rhs;
    if (op == ">") return lhs > rhs;
    if (op == ">=") return lhs >= rhs;
    throw std::invalid_argument("unknown comparison '" + op + "'");
}

const std::set<std::string> kComparisons{"==", "!=", "<", "<=", ">", ">="};

const std::set<std::string> kCounters{
    "oob-sent",      "oob-handled",      "replies-queued", "replies-sent", "fallback-applied",
    "queries-sent",  "recoveries",       "channels-opened", "resumes",     "teardowns",
    "app-errors",    "window-exceeded",  "inbound",        "accepted",     "rejected",
    "auth-violations", "service-sessions", "connects",
};

}  // namespace

TimeMs parse_duration(std::string_view text) {
    return parse_scaled(text, {{"ms", 1.0}, {"s", 1000.0}, {"m", 60'000.0}, {"h", 3'600'000.0}}, "duration");
}

std::uint64_t parse_size(std::string_view text) {
    return parse_scaled(text, {{"KiB", 1024.0}, {"MiB", 1024.0 * 1024.0}, {"KB", 1e3}, {"MB", 1e6}, {"B", 1.0}},
                        "size");
}

std::string Expectation::text() const {
    return join(words);
}

// ---------------------------------------------------------------- parsing

Scenario parse_scenario(std::string_view text) {
    Scenario sc;
    std::set<std::string> peers;
    std::set<std::string> caps;
    std::set<std::string> transfers;
    std::set<std::pair<std::string, std::string>> friends;
    TimeMs last_at = 0;
    int line_no = 0;

    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        auto w = split_words(raw);
        if (w.empty()) continue;
        const int ln = line_no;
        auto fail = [ln](const std::string& what) -> void { throw ScenarioError(ln, what); };
        auto need = [&](std::size_t n, const char* usage) {
            if (w.size() != n) fail(std::string("usage: ") + usage);
        };
        auto peer = [&](const std::string& name) {
            if (!peers.contains(name)) fail("unknown peer '" + name + "'");
            return name;
        };
        auto cap = [&](const std::string& name) {
            if (!caps.contains(name)) fail("unknown capability '" + name + "'");
            return name;
        };
        auto transfer = [&](const std::string& name) {
            if (!transfers.contains(name)) fail("unknown transfer '" + name + "'");
            return name;
        };

        try {
            const auto& d = w[0];
            if (d == "config") {
                if (w.size() < 3) fail("usage: config <key> <value>");
                RunConfig probe;
                apply_setting(probe, w[1], join(w, 2));  // validate now, apply at run time
                sc.settings.emplace_back(w[1], join(w, 2));
            } else if (d == "peer") {
                if (w.size() < 2) fail("usage: peer <name> [net=<attachment>] [phone=<number>]");
                PeerSpec spec{w[1], {}, {}};
                if (!peers.insert(spec.name).second) fail("duplicate peer '" + spec.name + "'");
                for (std::size_t i = 2; i < w.size(); ++i) {
                    if (w[i].starts_with("net=")) {
                        spec.net = w[i].substr(4);
                    } else if (w[i].starts_with("phone=")) {
                        spec.phone = w[i].substr(6);
                    } else {
                        fail("unknown peer option '" + w[i] + "'");
                    }
                }
                for (const auto& other : sc.peers) {
                    if (!spec.phone.empty() && other.phone == spec.phone) fail("phone number used twice");
                }
                sc.peers.push_back(spec);
            } else if (d == "capability") {
                need(2, "capability <name>");
                if (!caps.insert(w[1]).second) fail("duplicate capability '" + w[1] + "'");
                sc.capabilities.push_back(w[1]);
            } else if (d == "service") {
                need(4, "service <peer> <capability> sink|echo");
                ServiceSpec spec{peer(w[1]), cap(w[2]), ServiceKind::Sink};
                if (w[3] == "echo") {
                    spec.kind = ServiceKind::Echo;
                } else if (w[3] != "sink") {
                    fail("unknown service kind '" + w[3] + "'");
                }
                for (const auto& s : sc.services) {
                    if (s.peer == spec.peer && s.capability == spec.capability) fail("duplicate service");
                }
                sc.services.push_back(spec);
            } else if (d == "friend") {
                need(3, "friend <a> <b>");
                peer(w[1]);
                peer(w[2]);
                if (w[1] == w[2]) fail("a peer cannot befriend itself");
                auto key = std::minmax(w[1], w[2]);
                if (!friends.insert({key.first, key.second}).second) fail("duplicate friendship");
                sc.friendships.emplace_back(w[1], w[2]);
            } else if (d == "fault") {
                if (w.size() < 2) fail("usage: fault <kind> ...");
                if (w[1] == "drop-announce") {
                    if (w.size() != 4 && w.size() != 5) fail("usage: fault drop-announce <from> <to> [<count>]");
                    DropAnnounce drop{peer(w[2]), peer(w[3]), 1};
                    if (w.size() == 5) drop.count = parse_number(w[4], "count");
                    sc.drops.push_back(drop);
                } else if (w[1] == "break-stream") {
                    need(4, "fault break-stream <transfer> <byte>");
                    StreamFault f;
                    f.transfer = transfer(w[2]);
                    f.at_byte = parse_size(w[3]);
                    sc.faults.push_back(f);
                } else if (w[1] == "detach-during") {
                    if (w.size() != 6 && w.size() != 7) {
                        fail("usage: fault detach-during <transfer> <byte> <peer> <duration> [<net>]");
                    }
                    StreamFault f;
                    f.kind = StreamFault::Kind::DetachDuring;
                    f.transfer = transfer(w[2]);
                    f.at_byte = parse_size(w[3]);
                    f.peer = peer(w[4]);
                    f.duration_ms = parse_duration(w[5]);
                    if (w.size() == 7) f.net = w[6];
                    sc.faults.push_back(f);
                } else {
                    fail("unknown fault '" + w[1] + "'");
                }
            } else if (d == "at") {
                if (w.size() < 3) fail("usage: at <time> <action> ...");
                TimelineStep step;
                step.at = parse_duration(w[1]);
                step.line = ln;
                if (step.at < last_at) fail("timeline is not in time order");
                last_at = step.at;
                const auto& a = w[2];
                if (a == "attach") {
                    need(5, "at <time> attach <peer> <net>");
                    step.action = AttachStep{peer(w[3]), w[4]};
                } else if (a == "detach") {
                    need(4, "at <time> detach <peer>");
                    step.action = DetachStep{peer(w[3])};
                } else if (a == "announce") {
                    need(4, "at <time> announce <peer>");
                    step.action = AnnounceStep{peer(w[3])};
                } else if (a == "transfer") {
                    need(8, "at <time> transfer <name> <from> <to> <capability> <bytes>");
                    if (!transfers.insert(w[3]).second) fail("duplicate transfer '" + w[3] + "'");
                    TransferStep t{w[3], peer(w[4]), peer(w[5]), cap(w[6]), parse_size(w[7])};
                    if (t.from == t.to) fail("transfer to self");
                    step.action = t;
                } else {
                    fail("unknown action '" + a + "'");
                }
                sc.timeline.push_back(std::move(step));
            } else if (d == "run-until") {
                need(2, "run-until <time>");
                sc.run_until = parse_duration(w[1]);
            } else if (d == "expect") {
                if (w.size() < 2) fail("usage: expect <predicate> ...");
                Expectation e{std::vector<std::string>(w.begin() + 1, w.end()), ln};
                const auto& p = e.words[0];
                const auto n = e.words.size();
                if (p == "converged") {
                    if (n != 2) fail("usage: expect converged <peer>");
                    peer(e.words[1]);
                } else if (p == "recovered") {
                    if (n != 4) fail("usage: expect recovered <who> <target> mutual-friend|fallback");
                    peer(e.words[1]);
                    peer(e.words[2]);
                    if (e.words[3] != "mutual-friend" && e.words[3] != "fallback") fail("unknown recovery path");
                } else if (p == "status") {
                    if (n != 4) fail("usage: expect status <who> <target> online|offline");
                    peer(e.words[1]);
                    peer(e.words[2]);
                    if (e.words[3] != "online" && e.words[3] != "offline") fail("unknown status");
                } else if (p == "transfer-ok" || p == "transfer-failed") {
                    if (n != 2) fail("usage: expect " + p + " <transfer>");
                    transfer(e.words[1]);
                } else if (p == "count") {
                    if (n != 5) fail("usage: expect count <peer> <counter> <op> <n>");
                    peer(e.words[1]);
                    if (!kCounters.contains(e.words[2])) fail("unknown counter '" + e.words[2] + "'");
                    if (!kComparisons.contains(e.words[3])) fail("unknown comparison '" + e.words[3] + "'");
                    parse_number(e.words[4], "count");
                } else if (p == "oob-sent") {
                    if (n != 3) fail("usage: expect oob-sent <peer> <n>");
                    peer(e.words[1]);
                    parse_number(e.words[2], "count");
                } else if (p == "version") {
                    if (n != 4) fail("usage: expect version <peer> <op> <n>");
                    peer(e.words[1]);
                    if (!kComparisons.contains(e.words[2])) fail("unknown comparison '" + e.words[2] + "'");
                    parse_number(e.words[3], "version");
                } else {
                    fail("unknown predicate '" + p + "'");
                }
                sc.expectations.push_back(std::move(e));
            } else {
                fail("unknown directive '" + d + "'");
            }
        } catch (const ScenarioError&) {
            throw;
        } catch (const std::exception& e) {
            throw ScenarioError(ln, e.what());
        }
    }
    for (const auto& f : sc.faults) {
        if (f.kind == StreamFault::Kind::DetachDuring && f.duration_ms == 0) {
            throw ScenarioError(0, "detach-during needs a positive duration");
        }
    }
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError(0, "cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str());
}

// ---------------------------------------------------------------- world

struct World::Peer {
    PeerSpec spec;
    SimNode* sim_node = nullptr;
    std::unique_ptr<Node> node;
    std::set<std::string> friends;
    std::uint16_t next_service_port = 7000;
    std::string net;  // the attachment last requested
    std::uint64_t service_accepts = 0;  // seen by the service itself, not the proxy
};

/// Receiving end of one transfer; identifies it from the 8-byte header.
struct World::SinkSession {
    World* world = nullptr;
    StreamPtr stream;
    Bytes header;
    TransferRecord* record = nullptr;
    ServiceKind kind = ServiceKind::Sink;
    Bytes echo_pending;
    bool input_done = false;

    void on_readable() {
        while (stream->readable() > 0) {
            std::size_t budget = stream->readable();
            if (kind == ServiceKind::Echo) {
                flush_echo();
                budget = std::min(budget, stream->writable() > echo_pending.size()
                                              ? stream->writable() - echo_pending.size()
                                              : std::size_t{0});
                if (budget == 0) return;
            }
            auto chunk = stream->read(budget);
            if (kind == ServiceKind::Echo) {
                echo_pending.insert(echo_pending.end(), chunk.begin(), chunk.end());
                flush_echo();
            }
            consume(chunk);
        }
        if (stream->was_reset()) {
            if (record) record->sink_reset = true;
            finish();
            return;
        }
        if (stream->at_eof() && !input_done) {
            input_done = true;
            if (record) {
                record->sink_eof = true;
                record->completed_at = world->sim_.now();
                world->trace_.log(record->to, "transfer " + record->name + " received " +
                                                  std::to_string(record->received.size()) + " bytes");
            }
            if (echo_pending.empty()) finish();
        }
    }

    void flush_echo() {
        if (echo_pending.empty()) return;
        const auto result = stream->write(echo_pending);
        if (result.status != WriteStatus::Ok) {
            finish();
            return;
        }
        echo_pending.erase(echo_pending.begin(), echo_pending.begin() + static_cast<std::ptrdiff_t>(result.accepted));
        if (echo_pending.empty() && input_done) finish();
    }

    void consume(const Bytes& chunk) {
        auto it = chunk.begin();
        if (!record) {
            while (header.size() < 8 && it != chunk.end()) header.push_back(*it++);
            if (header.size() < 8) return;
            ByteReader reader(header);
            const auto index = reader.u64();
            if (index < world->transfer_order_.size()) {
                record = &world->transfers_.at(world->transfer_order_[index]);
                record->first_byte_at = world->sim_.now();
                const auto before = record->received.size();
                record->received.insert(record->received.end(), header.begin(), header.end());
                world->on_sink_bytes(*record, before);
            }
        }
        if (record && it != chunk.end()) {
            const auto before = record->received.size();
            record->received.insert(record->received.end(), it, chunk.end());
            world->on_sink_bytes(*record, before);
        }
        if (record && record->first_delivery_bytes == 0 && record->first_byte_at == world->sim_.now()) {
            record->first_delivery_bytes = record->received.size();
        }
    }

    void finish() {
        stream->clear_handlers();
        stream->shutdown_write();
        stream->close();
    }
};

World::World(const Scenario& scenario, std::uint64_t seed, RunConfig config)
    : config_(std::move(config)),
      sim_(seed),
      network_(sim_, config_.network),
      messenger_(sim_, config_.messenger),
      trace_(sim_),
      faults_(scenario.faults) {
    for (const auto& name : scenario.capabilities) capabilities_[name] = CapabilityId::random(sim_.rng());

    for (const auto& spec : scenario.peers) {
        auto peer = std::make_unique<Peer>();
        peer->spec = spec;
        peer->sim_node = &network_.add_node(spec.name);
        auto identity = Identity::create(spec.name, sim_.rng());
        NodeEnv env{sim_, *peer->sim_node, *peer->sim_node, messenger_, sim_.rng(), trace_};
        peer->node = std::make_unique<Node>(std::move(identity), spec.phone, config_.node, env);
        order_.push_back(spec.name);
        peers_.emplace(spec.name, std::move(peer));
    }
    for (const auto& [a, b] : scenario.friendships) {
        peers_.at(a)->friends.insert(b);
        peers_.at(b)->friends.insert(a);
    }
    for (const auto& name : order_) {
        auto& peer = *peers_.at(name);
        if (peer.spec.net.empty()) continue;
        peer.net = peer.spec.net;
        network_.attach(name, NetworkAttachment{peer.net});
        peer.node->bootstrap();
    }
    seed_directories(scenario);
    for (const auto& spec : scenario.services) start_service(*peers_.at(spec.peer), spec);
    for (const auto& drop : scenario.drops) {
        for (std::uint64_t i = 0; i < drop.count; ++i) {
            node(drop.from).sysmsg().drop_next_announce(node(drop.to).identity().id);
        }
    }
    for (const auto& name : order_) own_versions_[name] = node(name).version();

    for (const auto& step : scenario.timeline) {
        sim_.schedule_at(step.at, [this, action = step.action] {
            std::visit(
                [this](const auto& a) {
                    using T = std::decay_t<decltype(a)>;
                    if constexpr (std::is_same_v<T, AttachStep>) {
                        attach(a.peer, a.net);
                    } else if constexpr (std::is_same_v<T, DetachStep>) {
                        detach(a.peer);
                    } else if constexpr (std::is_same_v<T, AnnounceStep>) {
                        announce(a.peer);
                    } else {
                        start_transfer(a);
                    }
                },
                action);
        });
    }
    sim_.set_after_event([this] { check_safety(); });
}

World::~World() {
    sim_.set_after_event(nullptr);
}

void World::seed_directories(const Scenario& scenario) {
    std::map<std::string, std::vector<CapabilityId>> offered;
    for (const auto& s : scenario.services) offered[s.peer].push_back(capabilities_.at(s.capability));
    for (const auto& name : order_) {
        auto& owner = *peers_.at(name);
        for (const auto& friend_name : owner.friends) {
            const auto& other = *peers_.at(friend_name);
            ContactRecord record;
            record.name = friend_name;
            record.peer_id = other.node->identity().id;
            record.public_key = other.node->identity().keys.public_key;
            record.secondary_address = other.spec.phone;
            record.capabilities = offered[friend_name];
            // Mutual friends only: the ones both sides have exchanged.
            for (const auto& theirs : other.friends) {
                if (owner.friends.contains(theirs)) record.known_friends.push_back(node(theirs).identity().id);
            }
            owner.node->contacts().upsert(record);
            if (other.node->version() > 0) {
                owner.node->contacts().apply_address_update(record.peer_id, other.node->address(),
                                                            other.node->version());
            }
        }
    }
}

void World::start_service(Peer& peer, const ServiceSpec& spec) {
    const auto port = peer.next_service_port++;
    peer.node->register_service(capabilities_.at(spec.capability), port);
    const auto kind = spec.kind;
    peer.sim_node->listen(port, [this, kind, &peer](StreamPtr stream) {
        ++peer.service_accepts;
        auto session = std::make_shared<SinkSession>();
        session->world = this;
        session->stream = stream;
        session->kind = kind;
        std::weak_ptr<SinkSession> weak = session;
        // The handlers own the session; finish() clears them.
        stream->set_on_readable([session] { session->on_readable(); });
        stream->set_on_writable([weak] {
            if (auto s = weak.lock()) s->flush_echo();
        });
        session->on_readable();
    });
}

Node& World::node(const std::string& name) {
    auto it = peers_.find(name);
    if (it == peers_.end()) throw ScenarioError(0, "unknown peer '" + name + "'");
    return *it->second->node;
}

const Node& World::node(const std::string& name) const {
    auto it = peers_.find(name);
    if (it == peers_.end()) throw ScenarioError(0, "unknown peer '" + name + "'");
    return *it->second->node;
}

std::vector<std::string> World::peer_names() const {
    return order_;
}

CapabilityId World::capability(const std::string& name) const {
    auto it = capabilities_.find(name);
    if (it == capabilities_.end()) throw ScenarioError(0, "unknown capability '" + name + "'");
    return it->second;
}

void World::attach(const std::string& peer, const std::string& net) {
    peers_.at(peer)->net = net;
    trace_.log("world", peer + " attaches to " + net);
    network_.attach(peer, NetworkAttachment{net});
}

void World::detach(const std::string& peer) {
    trace_.log("world", peer + " detaches");
    network_.detach(peer);
}

void World::announce(const std::string& peer) {
    trace_.log("world", peer + " re-announces");
    node(peer).announce();
}

StreamPtr World::open_app_stream(const std::string& from, const std::string& to, const std::string& capability) {
    auto& n = node(from);
    const auto cap = this->capability(capability);
    try {
        const auto mapping = n.client().open_client_port(node(to).identity().id, cap);
        return peers_.at(from)->sim_node->connect(mapping.local_port);
    } catch (const ProxyError& e) {
        trace_.log(from, std::string("cannot open client port: ") + e.what());
        return nullptr;
    }
}

TransferRecord& World::start_transfer(const TransferStep& step) {
    TransferRecord record;
    record.name = step.name;
    record.from = step.from;
    record.to = step.to;
    record.started_at = sim_.now();
    const auto index = transfer_order_.size();
    ByteWriter header;
    header.u64(index);
    record.payload = std::move(header).take();
    Rng payload_rng(sim_.rng().next_u64());
    const auto body = step.bytes > 8 ? step.bytes - 8 : 0;
    record.payload.resize(8 + body);
    std::span<std::uint8_t> tail(record.payload.data() + 8, body);
    payload_rng.fill(tail);
    transfer_order_.push_back(step.name);
    auto& stored = transfers_[step.name] = std::move(record);

    trace_.log("world", "transfer " + step.name + " " + step.from + " -> " + step.to + " " +
                            std::to_string(stored.payload.size()) + " bytes");
    auto app = open_app_stream(step.from, step.to, step.capability);
    if (!app) {
        stored.client_reset = true;
        return stored;
    }
    auto* rec = &stored;
    write_all(app, rec->payload, [app, rec](bool ok) {
        if (ok) {
            app->shutdown_write();
        } else {
            rec->client_reset = true;
        }
    });
    app->set_on_readable([app, rec] {
        if (app->readable() > 0) app->read(app->readable());
        if (app->was_reset()) {
            rec->client_reset = true;
            app->clear_handlers();
        } else if (app->at_eof()) {
            app->set_on_readable(nullptr);
            app->close();
        }
    });
    return stored;
}

const TransferRecord* World::transfer(const std::string& name) const {
    auto it = transfers_.find(name);
    return it == transfers_.end() ? nullptr : &it->second;
}

void World::on_sink_bytes(TransferRecord& record, std::uint64_t before) {
    const auto after = record.received.size();
    for (auto it = faults_.begin(); it != faults_.end();) {
        if (it->transfer != record.name || it->at_byte > after || it->at_byte < before) {
            ++it;
            continue;
        }
        const auto fault = *it;
        it = faults_.erase(it);
        if (fault.kind == StreamFault::Kind::BreakStream) {
            trace_.log("world", "fault: break streams " + record.from + " <-> " + record.to + " at byte " +
                                    std::to_string(fault.at_byte));
            sim_.schedule(0, [this, from = record.from, to = record.to] { network_.break_links(from, to); });
        } else {
            const auto net = fault.net.empty() ? peers_.at(fault.peer)->net : fault.net;
            trace_.log("world", "fault: " + fault.peer + " detaches at byte " + std::to_string(fault.at_byte) +
                                    " for " + std::to_string(fault.duration_ms) + " ms");
            sim_.schedule(0, [this, peer = fault.peer] { detach(peer); });
            sim_.schedule(fault.duration_ms, [this, peer = fault.peer, net] { attach(peer, net); });
        }
    }
}

std::uint64_t World::counter(const std::string& peer, const std::string& name) const {
    const auto& n = node(peer);
    const auto& fb = n.fallback().counters();
    const auto& ch = n.channels().counters();
    const auto& sv = n.server().counters();
    if (name == "oob-sent") return n.phone().empty() ? 0 : messenger_.sent_from(n.phone());
    if (name == "oob-handled") return fb.requests_handled;
    if (name == "replies-queued") return fb.replies_queued;
    if (name == "replies-sent") return fb.replies_sent;
    if (name == "fallback-applied") return fb.responses_applied;
    if (name == "queries-sent") return n.sysmsg().queries_sent();
    if (name == "recoveries") return n.sysmsg().history().size();
    if (name == "channels-opened") return ch.opened;
    if (name == "resumes") return ch.resumes;
    if (name == "teardowns") return ch.teardowns;
    if (name == "app-errors") return ch.app_errors;
    if (name == "window-exceeded") return ch.window_exceeded;
    if (name == "inbound") return sv.inbound;
    if (name == "accepted") return sv.accepted;
    if (name == "rejected") {
        return sv.rejected_timeout + sv.rejected_malformed + sv.rejected_unknown_peer + sv.rejected_signature +
               sv.rejected_nonce + sv.rejected_capability;
    }
    if (name == "auth-violations") return sv.auth_violations;
    if (name == "service-sessions") return sv.service_sessions;
    if (name == "service-accepts") return peers_.at(peer)->service_accepts;
    if (name == "duplicates") return fb.duplicates;
    if (name == "connects") {
        std::uint64_t total = 0;
        for (const auto& other : order_) {
            if (other != peer) total += n.client().transport_connects(node(other).identity().id);
        }
        return total;
    }
    throw ScenarioError(0, "unknown counter '" + name + "'");
}

void World::check_safety() {
    if (violation_) return;
    auto report = [this](std::string what) {
        violation_ = SafetyViolation{sim_.events_processed(), sim_.now(), std::move(what)};
    };
    for (const auto& name : order_) {
        const auto& n = node(name);
        auto& own = own_versions_[name];
        if (n.version() < own) return report(name + " own version went backwards");
        own = n.version();
        for (const auto& record : n.contacts().records()) {
            auto& seen = seen_versions_[{name, record.name}];
            if (record.address_version < seen) {
                return report(name + "'s version for " + record.name + " went backwards");
            }
            seen = record.address_version;
        }
        if (n.server().counters().auth_violations != 0) return report(name + " served an unauthenticated session");
    }
    // A receiver can never have counted more than its peer ever sent.
    for (const auto& name : order_) {
        for (const auto& info : node(name).channels().snapshot()) {
            const auto* record = node(name).contacts().find(info.peer);
            if (!record || !peers_.contains(record->name)) continue;
            const auto theirs = node(record->name).channels().info(info.id);
            if (theirs && info.total_received > theirs->total_sent) {
                return report(name + " received more on channel " + info.id.hex().substr(0, 8) + " than was sent");
            }
        }
    }
}

// ---------------------------------------------------------------- predicates

PredicateResult evaluate(const Expectation& e, const World& world) {
    PredicateResult r{"expect " + e.text(), e.line, false, {}};
    const auto& w = e.words;
    const auto& p = w[0];
    if (p == "converged") {
        const auto& target = world.node(w[1]);
        r.passed = true;
        for (const auto& name : world.peer_names()) {
            const auto* record = world.node(name).contacts().find(target.identity().id);
            if (!record) continue;
            if (record->address != target.address() || record->address_version != target.version()) {
                r.passed = false;
                r.detail += name + " holds v" + std::to_string(record->address_version) + " (want v" +
                            std::to_string(target.version()) + ") ";
            }
        }
        if (r.passed) r.detail = "all friends hold v" + std::to_string(target.version());
    } else if (p == "recovered") {
        const auto want = w[3] == "fallback" ? RecoveryPath::Fallback : RecoveryPath::MutualFriend;
        const auto target = world.node(w[2]).identity().id;
        std::size_t matching = 0;
        std::size_t other = 0;
        for (const auto& rec : world.node(w[1]).sysmsg().history()) {
            if (rec.target != target) continue;
            (rec.path == want ? matching : other) += 1;
        }
        r.passed = matching > 0 && other == 0;
        r.detail = std::to_string(matching) + " via " + w[3] + ", " + std::to_string(other) + " via the other path";
    } else if (p == "status") {
        const auto* record = world.node(w[1]).contacts().find(world.node(w[2]).identity().id);
        const bool online = record && record->online();
        r.passed = record && online == (w[3] == "online");
        r.detail = record ? (online ? "online" : "offline") : "not a friend";
    } else if (p == "transfer-ok" || p == "transfer-failed") {
        const auto* t = world.transfer(w[1]);
        const bool ok = t && t->ok();
        r.passed = (p == "transfer-ok") == ok;
        if (!t) {
            r.detail = "never started";
        } else {
            r.detail = std::to_string(t->received.size()) + "/" + std::to_string(t->payload.size()) + " bytes" +
                       (t->sink_eof ? ", eof" : "") + (t->sink_reset ? ", reset" : "") +
                       (t->client_reset ? ", client saw error" : "") + (ok ? ", exact" : "");
        }
    } else if (p == "count" || p == "oob-sent") {
        const auto& counter = p == "count" ? w[2] : std::string("oob-sent");
        const auto& op = p == "count" ? w[3] : std::string("==");
        const auto want = parse_number(p == "count" ? w[4] : w[2], "count");
        const auto got = world.counter(w[1], counter);
        r.passed = compare(got, op, want);
        r.detail = counter + " = " + std::to_string(got);
    } else if (p == "version") {
        const auto got = world.node(w[1]).version();
        r.passed = compare(got, w[2], parse_number(w[3], "version"));
        r.detail = "version = " + std::to_string(got);
    } else {
        r.detail = "unknown predicate";
    }
    return r;
}

bool RunResult::passed() const {
    if (violation) return false;
    return std::all_of(predicates.begin(), predicates.end(), [](const auto& p) { return p.passed; });
}

RunResult run_scenario(const Scenario& scenario, std::uint64_t seed, const RunConfig& base) {
    auto config = base;
    for (const auto& [key, value] : scenario.settings) {
        try {
            apply_setting(config, key, value);
        } catch (const ConfigError& e) {
            throw ScenarioError(0, e.what());
        }
    }
    RunResult result;
    result.world = std::make_shared<World>(scenario, seed, config);
    auto& sim = result.world->sim();
    if (scenario.run_until) {
        sim.run_until(*scenario.run_until);
    } else {
        while (!sim.idle() && sim.now() <= kDefaultHorizonMs) sim.step();
    }
    result.events = sim.events_processed();
    result.end_time = sim.now();
    result.violation = result.world->violation();
    for (const auto& e : scenario.expectations) result.predicates.push_back(evaluate(e, *result.world));
    return result;
}

}  // namespace f2f::sim
