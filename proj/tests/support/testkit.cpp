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

#include "testkit.hpp"

#include "f2f/stream_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace f2f::testkit {

using sim::World;

std::filesystem::path preset_dir() { return F2F_PRESET_DIR; }
std::filesystem::path vector_dir() { return F2F_VECTOR_DIR; }

std::unique_ptr<World> make_world(const sim::Scenario& scenario, std::uint64_t seed) {
    RunConfig config;
    for (const auto& [key, value] : scenario.settings) apply_setting(config, key, value);
    return std::make_unique<World>(scenario, seed, config);
}

// --- handshake matrix -------------------------------------------------------

const char* to_string(AuthCase c) {
    switch (c) {
        case AuthCase::Healthy: return "healthy";
        case AuthCase::UnknownPeer: return "unknown peer";
        case AuthCase::BadSignature: return "bad signature";
        case AuthCase::StaleNonce: return "stale nonce";
        case AuthCase::ReplayedNonce: return "replayed nonce";
        case AuthCase::UnregisteredCapability: return "unregistered capability";
    }
    return "?";
}

bool AuthOutcome::as_expected(AuthCase c) const {
    if (auth_violations != 0) return false;
    if (c == AuthCase::Healthy) return verdict == wire::kVerdictAccept && service_accepts == 1;
    return verdict == wire::kVerdictReject && service_accepts == 0;
}

namespace {

constexpr std::string_view kAuthWorld = R"(
peer A net=net-a
peer B net=net-b
peer U net=net-u
capability svc
capability other
service B svc sink
friend A B
)";

struct Session {
    StreamPtr stream;
    std::optional<std::uint32_t> nonce;
    std::optional<std::uint8_t> verdict;
    Bytes sent;
};

using FrameMaker = std::function<Bytes(std::uint32_t nonce)>;

/// Connects to `to`, waits for the challenge, then `delay` later sends the
/// frame `make` builds and records the verdict byte.
std::shared_ptr<Session> start_session(World& world, const std::string& from, const OverlayAddress& to,
                                       TimeMs delay, FrameMaker make) {
    auto session = std::make_shared<Session>();
    auto& sim = world.sim();
    world.network().node(from).connect(to, 10'000, [&sim, session, delay, make](ConnectResult cr) {
        if (!cr.ok()) return;
        session->stream = cr.stream;
        read_exact(sim, cr.stream, wire::kChallengeSize, 10'000, [&sim, session, delay, make](std::optional<Bytes> c) {
            if (!c) return;
            session->nonce = wire::decode_challenge(*c);
            sim.schedule(delay, [&sim, session, make] {
                if (!make) return;
                session->sent = make(*session->nonce);
                write_all(session->stream, session->sent, [](bool) {});
                read_exact(sim, session->stream, 1, 120'000, [session](std::optional<Bytes> v) {
                    if (v) session->verdict = (*v)[0];
                    session->stream->close();
                });
            });
        });
    });
    return session;
}

Bytes signed_message(const PeerId& sender, std::uint32_t nonce, const CapabilityId& destination,
                     const PrivateKey& key) {
    wire::ConnectionMessage msg;
    msg.sender_id = sender;
    msg.random_number = nonce;
    msg.body = wire::ApplicationBody{destination, ChannelId{}};
    return wire::encode_connection_message(msg, key);
}

}  // namespace

AuthOutcome run_auth_case(AuthCase c, std::uint64_t seed) {
    auto scenario = sim::parse_scenario(kAuthWorld);
    auto world = make_world(scenario, seed);
    auto& w = *world;
    Rng pick(seed ^ 0x5eedf00dULL);

    const auto& a = w.node("A");
    const auto& u = w.node("U");
    const auto b_address = w.node("B").address();
    const auto svc = w.capability("svc");
    const auto a_id = a.identity().id;
    const auto a_key = a.identity().keys.private_key;
    const auto ttl = w.config().node.proxy.nonce_ttl_ms;
    const auto inbound_timeout = w.config().node.proxy.inbound_timeout_ms;

    AuthOutcome out;
    auto healthy = [=](std::uint32_t nonce) { return signed_message(a_id, nonce, svc, a_key); };
    FrameMaker make = healthy;
    TimeMs delay = pick.uniform(0, 2'000);

    switch (c) {
        case AuthCase::Healthy:
            out.variant = "signed by A";
            break;
        case AuthCase::UnknownPeer:
            if (pick.uniform(0, 1) == 0) {
                out.variant = "stranger with its own key";
                make = [id = u.identity().id, key = u.identity().keys.private_key, svc](std::uint32_t n) {
                    return signed_message(id, n, svc, key);
                };
            } else {
                out.variant = "random id";
                Rng r(pick.next_u64());
                const auto id = PeerId::random(r);
                const auto keys = generate_keypair(seed_from_u64(r.next_u64()));
                make = [id, keys, svc](std::uint32_t n) { return signed_message(id, n, svc, keys.private_key); };
            }
            break;
        case AuthCase::BadSignature: {
            const auto mode = pick.uniform(0, 2);
            const auto salt = pick.next_u64();
            if (mode == 0) {
                out.variant = "flipped signature bit";
                make = [healthy, salt](std::uint32_t n) {
                    auto frame = healthy(n);
                    const auto bit = salt % (kSignatureSize * 8);
                    frame[frame.size() - kSignatureSize + bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
                    return frame;
                };
            } else if (mode == 1) {
                out.variant = "signed with a stranger's key";
                make = [a_id, svc, key = u.identity().keys.private_key](std::uint32_t n) {
                    return signed_message(a_id, n, svc, key);
                };
            } else {
                out.variant = "body altered after signing";
                make = [healthy](std::uint32_t n) {
                    auto frame = healthy(n);
                    // Destination capability sits after header, sender id, nonce and type.
                    frame[wire::kFrameHeaderSize + 16 + 4 + 1] ^= 0x01;
                    return frame;
                };
            }
            break;
        }
        case AuthCase::StaleNonce:
            delay = ttl + 1 + pick.uniform(0, inbound_timeout - ttl - 5'000);
            out.variant = "sent after " + std::to_string(delay) + " ms";
            break;
        case AuthCase::UnregisteredCapability:
            if (pick.uniform(0, 1) == 0) {
                out.variant = "random capability";
                Rng r(pick.next_u64());
                const auto cap = CapabilityId::random(r);
                make = [a_id, cap, a_key](std::uint32_t n) { return signed_message(a_id, n, cap, a_key); };
            } else {
                out.variant = "capability the friend does not serve";
                make = [a_id, cap = w.capability("other"), a_key](std::uint32_t n) {
                    return signed_message(a_id, n, cap, a_key);
                };
            }
            break;
        case AuthCase::ReplayedNonce: {
            // A healthy session first, then reuse what it proved.
            auto first = start_session(w, "A", b_address, 0, healthy);
            w.sim().run_until(w.sim().now() + 30'000);
            if (first->verdict != wire::kVerdictAccept || !first->nonce) {
                out.variant = "setup failed";
                return out;
            }
            const auto old_nonce = *first->nonce;
            const auto old_frame = first->sent;
            const auto mode = pick.uniform(0, 2);
            if (mode == 0) {
                out.variant = "verbatim replay";
                make = [old_frame](std::uint32_t) { return old_frame; };
            } else if (mode == 1) {
                out.variant = "re-signed with the spent nonce";
                make = [a_id, svc, a_key, old_nonce](std::uint32_t) {
                    return signed_message(a_id, old_nonce, svc, a_key);
                };
            } else {
                // Another open session's nonce is still unspent but belongs
                // to a different stream.
                out.variant = "nonce of a concurrent session";
                auto other = start_session(w, "A", b_address, 0, nullptr);
                w.sim().run_until(w.sim().now() + 5'000);
                if (!other->nonce) {
                    out.variant = "setup failed";
                    return out;
                }
                make = [a_id, svc, a_key, n = *other->nonce](std::uint32_t) {
                    return signed_message(a_id, n, svc, a_key);
                };
            }
            break;
        }
    }

    const auto before = w.counter("B", "service-accepts");
    auto session = start_session(w, "A", b_address, delay, make);
    w.sim().run_until(w.sim().now() + inbound_timeout + 30'000);
    out.verdict = session->verdict;
    out.service_accepts = w.counter("B", "service-accepts") - before;
    out.auth_violations = w.counter("B", "auth-violations");
    return out;
}

// --- channel fidelity -------------------------------------------------------

ChannelRun run_channel_fidelity(std::uint64_t seed) {
    Rng r(seed);
    const std::uint64_t total = 1024 * 1024;
    const auto faults = static_cast<std::size_t>(r.uniform(1, 3));
    std::vector<std::uint64_t> offsets;
    while (offsets.size() < faults) {
        const auto at = r.uniform(1, total - 1);
        if (std::find(offsets.begin(), offsets.end(), at) == offsets.end()) offsets.push_back(at);
    }
    std::sort(offsets.begin(), offsets.end());

    std::ostringstream text;
    // Phones let a simultaneous move of both ends rendezvous through the
    // fallback channel; neither side could reach the other otherwise.
    text << "peer A net=lan-a phone=+1\npeer B net=lan-b phone=+2\ncapability bulk\nservice B bulk sink\nfriend A B\n";
    text << "at 1s transfer t A B bulk " << total << "\n";
    int roam = 0;
    for (auto at : offsets) {
        if (r.uniform(0, 1) == 0) {
            text << "fault break-stream t " << at << "\n";
        } else {
            // Outages stay well inside the 60 s grace period.
            text << "fault detach-during t " << at << " " << (r.uniform(0, 1) ? "A" : "B") << " "
                 << r.uniform(500, 30'000) << "ms";
            if (r.uniform(0, 1)) text << " roam-" << roam++;
            text << "\n";
        }
    }
    text << "run-until 30m\n";

    ChannelRun run;
    run.faults = faults;
    run.detail = text.str();
    const auto result = sim::run_scenario(sim::parse_scenario(run.detail), seed);
    const auto* t = result.world->transfer("t");
    run.exact = t != nullptr && t->ok() && !t->client_reset && !result.violation;
    run.app_errors = result.world->counter("A", "app-errors") + result.world->counter("B", "app-errors");
    run.resumes = result.world->counter("A", "resumes");
    return run;
}

// --- ring buffer oracle -----------------------------------------------------

OracleReport check_window_oracle(std::size_t max_window, std::uint64_t max_total) {
    OracleReport report;
    auto mismatch = [&report](std::string what) {
        if (report.mismatches.size() < 8) report.mismatches.push_back(std::move(what));
    };
    Bytes transcript(max_total);
    for (std::size_t i = 0; i < transcript.size(); ++i) transcript[i] = static_cast<std::uint8_t>(i * 37 + 11);

    for (std::size_t w = 1; w <= max_window; ++w) {
        for (std::uint64_t total = 0; total <= max_total; ++total) {
            // Three ways of feeding the same prefix: one append, single bytes,
            // and chunks cycling through 1..w+2.
            std::vector<SendWindow> windows(3, SendWindow(w));
            windows[0].append(ByteView(transcript).first(total));
            for (std::uint64_t i = 0; i < total; ++i) windows[1].append(ByteView(transcript).subspan(i, 1));
            for (std::uint64_t i = 0, step = 1; i < total; i += step, step = step % (w + 2) + 1) {
                windows[2].append(ByteView(transcript).subspan(i, std::min<std::uint64_t>(step, total - i)));
            }
            for (std::uint64_t received = 0; received <= total; ++received) {
                std::optional<Bytes> expected;
                if (total - received <= w) {
                    expected = Bytes(transcript.begin() + static_cast<std::ptrdiff_t>(received),
                                     transcript.begin() + static_cast<std::ptrdiff_t>(total));
                } else {
                    ++report.exceeded;
                }
                for (std::size_t k = 0; k < windows.size(); ++k) {
                    ++report.cases;
                    if (windows[k].replay_from(received) != expected) {
                        mismatch("W=" + std::to_string(w) + " total=" + std::to_string(total) +
                                 " received=" + std::to_string(received) + " feed=" + std::to_string(k));
                    }
                }
            }
            for (auto& window : windows) {
                if (window.total_sent() != total) mismatch("total_sent drift at W=" + std::to_string(w));
                try {
                    (void)window.replay_from(total + 1);
                    mismatch("no error for received > total_sent at W=" + std::to_string(w));
                } catch (const std::invalid_argument&) {
                }
            }
        }
    }
    return report;
}

// --- address versions -------------------------------------------------------

namespace {

struct Expected {
    OverlayAddress address;
    std::uint64_t version = 0;
};

struct InterleavingSearch {
    std::size_t max_updates;
    std::vector<PeerId> peers;
    std::vector<std::vector<std::uint64_t>> alphabets;
    InterleavingReport report;

    void violation(std::string what) {
        if (report.violations.size() < 8) report.violations.push_back(std::move(what));
    }

    void walk(const ContactDirectory& dir, const std::vector<Expected>& expected, std::vector<std::size_t> counts,
              std::string path) {
        if (std::all_of(counts.begin(), counts.end(), [this](std::size_t c) { return c == max_updates; })) {
            ++report.interleavings;
            return;
        }
        for (std::size_t p = 0; p < peers.size(); ++p) {
            if (counts[p] == max_updates) continue;
            for (auto version : alphabets[p]) {
                auto next_dir = dir;
                auto next_expected = expected;
                auto next_counts = counts;
                ++next_counts[p];
                // Every update carries a distinct address, so equal versions conflict.
                const OverlayAddress address{"p" + std::to_string(p) + "-u" + std::to_string(next_counts[p])};
                const auto before = dir.at(peers[p]);
                const auto result = next_dir.apply_address_update(peers[p], address, version);
                const auto& after = next_dir.at(peers[p]);
                ++report.updates;
                const auto step = path + " " + std::to_string(p) + ":v" + std::to_string(version);

                if (version > next_expected[p].version) next_expected[p] = Expected{address, version};
                if (after.address_version < before.address_version) violation("regressed:" + step);
                if (version == before.address_version && after.address != before.address) {
                    violation("equal version overwrote:" + step);
                }
                if (after.address != next_expected[p].address || after.address_version != next_expected[p].version) {
                    violation("diverged from model:" + step);
                }
                const auto want = version > before.address_version ? ApplyResult::Applied : ApplyResult::IgnoredStale;
                if (result != want) violation("wrong result:" + step);
                for (std::size_t q = 0; q < peers.size(); ++q) {
                    if (q != p && !(next_dir.at(peers[q]) == dir.at(peers[q]))) violation("touched other peer:" + step);
                }
                walk(next_dir, next_expected, next_counts, step);
            }
        }
    }
};

}  // namespace

InterleavingReport check_version_interleavings(std::size_t max_updates) {
    Rng r(1);
    InterleavingSearch search{max_updates, {PeerId::random(r), PeerId::random(r)}, {{0, 1, 2}, {1, 2}}, {}};
    ContactDirectory dir;
    std::vector<Expected> expected;
    for (std::size_t p = 0; p < search.peers.size(); ++p) {
        ContactRecord record;
        record.name = "p" + std::to_string(p);
        record.peer_id = search.peers[p];
        record.address = OverlayAddress{"p" + std::to_string(p) + "-initial"};
        dir.upsert(record);
        expected.push_back(Expected{dir.at(record.peer_id).address, dir.at(record.peer_id).address_version});
    }
    // An unknown peer never lands in the directory.
    if (dir.apply_address_update(PeerId::random(r), OverlayAddress{"x"}, 9) != ApplyResult::UnknownPeer ||
        dir.size() != 2) {
        search.violation("unknown peer accepted");
    }
    search.walk(dir, expected, std::vector<std::size_t>(search.peers.size(), 0), "");
    return search.report;
}

// --- fallback schedules -----------------------------------------------------

FallbackRun run_fallback_schedule(std::uint64_t seed) {
    Rng r(seed);
    struct Step {
        TimeMs at;
        std::string line;
    };
    std::vector<Step> steps;
    auto at = [](TimeMs t) { return std::to_string(t) + "ms"; };

    // The first outage always swallows a request, so its reply is queued.
    TimeMs t = 10'000;
    const TimeMs first_outage = r.uniform(30'000, 120'000);
    steps.push_back({t, "detach B"});
    steps.push_back({t + r.uniform(1'000, 5'000), "transfer x0 A B svc 1KiB"});
    t += first_outage;
    steps.push_back({t, "attach B m0"});
    const auto moves = r.uniform(0, 3);
    for (std::uint64_t i = 1; i <= moves; ++i) {
        t += r.uniform(5'000, 60'000);
        steps.push_back({t, "detach B"});
        t += r.uniform(5'000, 90'000);
        steps.push_back({t, "attach B m" + std::to_string(i)});
    }
    const TimeMs end = t;
    const auto probes = r.uniform(0, 4);
    for (std::uint64_t i = 1; i <= probes; ++i) {
        steps.push_back({r.uniform(10'000, end), "transfer x" + std::to_string(i) + " A B svc 1KiB"});
    }
    steps.push_back({end + 5'000, "transfer probe A B svc 1KiB"});
    steps.push_back({end + 240'000, "transfer final A B svc 1KiB"});
    std::stable_sort(steps.begin(), steps.end(), [](const Step& x, const Step& y) { return x.at < y.at; });

    std::ostringstream text;
    text << "config messenger.latency " << r.uniform(500, 10'000) << "\n"
         << "config messenger.jitter " << r.uniform(0, 5'000) << "\n"
         << "config messenger.duplicate 0.3\n"
         << "peer A net=home-a phone=+100\npeer B net=home-b phone=+200\npeer C net=home-c phone=+300\n"
         << "capability svc\nservice B svc sink\nfriend A B\nfriend A C\n"
         << "fault drop-announce B A 1000\n";
    for (const auto& s : steps) text << "at " << at(s.at) << " " << s.line << "\n";
    text << "run-until " << at(end + 400'000) << "\n";

    FallbackRun run;
    run.detail = text.str();
    auto world = make_world(sim::parse_scenario(run.detail), seed);
    auto& w = *world;
    auto& a = w.node("A");
    auto& b = w.node("B");
    auto& c = w.node("C");
    const auto a_id = a.identity().id;
    const auto b_id = b.identity().id;
    auto fail = [&run](std::string what) { run.failures.push_back(std::move(what)); };

    // Forgeries at random moments while the schedule runs.
    const auto injections = r.uniform(2, 6);
    for (std::uint64_t i = 0; i < injections; ++i) {
        const auto kind = r.uniform(0, 3);
        const auto salt = r.next_u64();
        w.sim().schedule_at(r.uniform(10'000, end), [&, kind, salt] {
            Rng local(salt);
            if (kind == 0) {
                // A third party presenting the code issued to B.
                const auto code = a.fallback().outstanding(b_id);
                if (!code) return;
                const auto res = a.fallback().handle_response(
                    c.identity().id, wire::FallbackReply{OverlayAddress{"forged.ovl"}, 99, code->value});
                if (res.kind != ResponseResult::Kind::Rejected) fail("third party reply accepted");
                else ++run.forged_rejected;
                if (!a.fallback().outstanding(b_id)) fail("forged reply consumed the code");
            } else if (kind == 1) {
                wire::OneTimeCodeValue code{};
                local.fill(code);
                const auto before = a.contacts().at(b_id);
                const auto res =
                    a.fallback().handle_response(b_id, wire::FallbackReply{OverlayAddress{"forged.ovl"}, 99, code});
                if (res.kind != ResponseResult::Kind::Rejected) fail("reply with unknown code accepted");
                else ++run.forged_rejected;
                if (!(a.contacts().at(b_id) == before)) fail("rejected reply changed the directory");
            } else {
                // Requests to B: unknown number, or A's number with a stranger's key.
                wire::FallbackRequest req{a_id, OverlayAddress{"forged.ovl"}, 99, {}, {}};
                local.fill(req.code);
                const auto& key = kind == 2 ? a.identity().keys.private_key : c.identity().keys.private_key;
                const auto from = kind == 2 ? std::string("+999") : a.phone();
                const auto before = b.contacts().at(a_id);
                const auto res = b.fallback().handle_request(
                    OobMessage{from, b.phone(), wire::encode_fallback_request(req, key)});
                const auto want = kind == 2 ? RejectReason::UnknownNumber : RejectReason::AuthFailure;
                if (res.kind != RequestResult::Kind::Rejected || res.reason != want) fail("forged request accepted");
                else ++run.forged_rejected;
                if (!(b.contacts().at(a_id) == before)) fail("forged request changed the directory");
            }
        });
    }

    w.sim().run_until(end + 400'000);

    const auto& fa = a.fallback().counters();
    const auto& fb = b.fallback().counters();
    run.replies_queued = fb.replies_queued;
    run.duplicates = fb.duplicates;

    if (w.violation()) fail("safety: " + w.violation()->what);
    const auto* final_transfer = w.transfer("final");
    if (!final_transfer || !final_transfer->ok()) fail("final transfer did not complete");
    const auto& view = a.contacts().at(b_id);
    if (view.address != b.address() || view.address_version != b.version()) fail("A does not hold B's address");
    const auto& history = a.sysmsg().history();
    if (std::none_of(history.begin(), history.end(),
                     [&](const RecoveryRecord& rec) { return rec.target == b_id && rec.path == RecoveryPath::Fallback; })) {
        fail("no fallback recovery recorded");
    }
    if (fb.replies_queued == 0) fail("the detached responder never queued a reply");
    if (fb.replies_sent == 0) fail("no reply was delivered");
    if (fb.requests_accepted > fa.codes_issued) fail("a request applied more than once");
    if (fa.responses_applied > fa.codes_issued) fail("a code answered more than once");

    // Replays of every consumed code, directly and over the overlay.
    for (const auto& code : a.fallback().consumed_codes()) {
        const auto before = a.contacts().at(b_id);
        const auto res = a.fallback().handle_response(
            b_id, wire::FallbackReply{OverlayAddress{"replayed.ovl"}, b.version() + 1, code});
        if (res.kind != ResponseResult::Kind::Rejected) fail("replayed reply accepted");
        if (!(a.contacts().at(b_id) == before)) fail("replayed reply changed the directory");
    }
    if (!a.fallback().consumed_codes().empty()) {
        const auto code = a.fallback().consumed_codes().back();
        std::optional<wire::AckStatus> ack;
        b.sysmsg().exchange(a_id, wire::FallbackReply{b.address(), b.version() + 1, code}, 10'000,
                            [&ack](DialOutcome, std::optional<wire::SystemMessageBody> body) {
                                if (body) {
                                    if (const auto* x = std::get_if<wire::AnnounceAck>(&*body)) ack = x->status;
                                }
                            });
        w.sim().run_until(w.sim().now() + 30'000);
        if (ack != wire::AckStatus::Rejected) fail("replay over the overlay was not refused");
        if (a.contacts().at(b_id).address_version != b.version()) fail("overlay replay changed the directory");

        // The same request delivered once more has no further effect.
        wire::FallbackRequest req{a_id, a.address(), a.version() + 5, code, {}};
        const auto before = b.contacts().at(a_id);
        const auto accepted = fb.requests_accepted;
        const auto res = b.fallback().handle_request(
            OobMessage{a.phone(), b.phone(), wire::encode_fallback_request(req, a.identity().keys.private_key)});
        if (res.kind != RequestResult::Kind::Rejected || res.reason != RejectReason::Duplicate) {
            fail("duplicate request not recognized");
        }
        if (!(b.contacts().at(a_id) == before) || fb.requests_accepted != accepted || b.fallback().reply_pending(a_id)) {
            fail("duplicate request had side effects");
        }
    }
    run.ok = run.failures.empty();
    return run;
}

// --- golden vectors ---------------------------------------------------------

const std::string& GoldenVector::field(const std::string& key) const {
    for (const auto& [k, v] : fields) {
        if (k == key) return v;
    }
    throw std::out_of_range(name + ": missing field " + key);
}

bool GoldenVector::has(const std::string& key) const {
    return std::any_of(fields.begin(), fields.end(), [&](const auto& kv) { return kv.first == key; });
}

GoldenVector parse_vector(const std::string& name, std::string_view text) {
    GoldenVector v;
    v.name = name;
    std::istringstream in{std::string(text)};
    std::string line;
    bool dump = false;
    std::string hex;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (line == "--") {
            dump = true;
            continue;
        }
        if (dump) {
            std::istringstream words(line);
            std::string word;
            words >> word;  // offset
            while (words >> word) hex += word;
            continue;
        }
        const auto colon = line.find(": ");
        if (colon == std::string::npos) throw std::invalid_argument(name + ": bad line '" + line + "'");
        v.fields.emplace_back(line.substr(0, colon), line.substr(colon + 2));
    }
    v.data = from_hex(hex);
    return v;
}

std::vector<GoldenVector> load_vectors(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() == ".hex") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<GoldenVector> out;
    for (const auto& path : files) {
        std::ifstream in(path);
        std::stringstream buf;
        buf << in.rdbuf();
        out.push_back(parse_vector(path.stem().string(), buf.str()));
    }
    return out;
}

namespace {

template <typename Id>
Id id_field(const GoldenVector& v, const std::string& key) {
    return Id::from_hex(v.field(key));
}

wire::OneTimeCodeValue code_field(const GoldenVector& v) {
    wire::OneTimeCodeValue code{};
    const auto raw = from_hex(v.field("code"));
    if (raw.size() != code.size()) throw std::invalid_argument("code must be 16 bytes");
    std::copy(raw.begin(), raw.end(), code.begin());
    return code;
}

std::uint64_t u64_field(const GoldenVector& v, const std::string& key) { return std::stoull(v.field(key)); }

wire::SystemMessageBody system_fields(const GoldenVector& v) {
    const auto& kind = v.field("system_kind");
    if (kind == "announce") {
        return wire::AddressAnnounce{id_field<PeerId>(v, "origin"), OverlayAddress{v.field("address")},
                                     u64_field(v, "version")};
    }
    if (kind == "query") return wire::AddressQuery{id_field<PeerId>(v, "target")};
    if (kind == "reply") {
        wire::AddressReply reply{id_field<PeerId>(v, "target"), v.field("known") == "true", {}, 0};
        if (reply.known) {
            reply.address = OverlayAddress{v.field("address")};
            reply.version = u64_field(v, "version");
        }
        return reply;
    }
    if (kind == "ack") {
        const auto& s = v.field("status");
        const auto status = s == "applied"         ? wire::AckStatus::Applied
                            : s == "ignored-stale" ? wire::AckStatus::IgnoredStale
                                                   : wire::AckStatus::Rejected;
        return wire::AnnounceAck{status};
    }
    if (kind == "fallback-reply") {
        return wire::FallbackReply{OverlayAddress{v.field("address")}, u64_field(v, "version"), code_field(v)};
    }
    throw std::invalid_argument("unknown system_kind " + kind);
}

KeyPair key_fields(const GoldenVector& v) {
    const auto raw = from_hex(v.field("key_seed"));
    Seed seed{};
    if (raw.size() != seed.size()) throw std::invalid_argument("key_seed must be 32 bytes");
    std::copy(raw.begin(), raw.end(), seed.begin());
    return generate_keypair(seed);
}

}  // namespace

std::string check_vector(const GoldenVector& v) {
    try {
        const auto& kind = v.field("frame");
        Bytes encoded;
        if (kind == "challenge") {
            const auto nonce = static_cast<std::uint32_t>(u64_field(v, "nonce"));
            if (wire::decode_challenge(v.data) != nonce) return "nonce differs";
            encoded = wire::encode_challenge(nonce);
        } else if (kind == "verdict") {
            const bool accept = v.field("accept") == "true";
            if (v.data.size() != 1 || wire::decode_verdict(v.data[0]) != accept) return "verdict differs";
            encoded = Bytes{wire::encode_verdict(accept)};
        } else if (kind == "connection-message") {
            const auto keys = key_fields(v);
            if (to_hex(keys.public_key) != v.field("public_key")) return "derived public key differs";
            wire::ConnectionMessage want;
            want.sender_id = id_field<PeerId>(v, "sender_id");
            want.random_number = static_cast<std::uint32_t>(u64_field(v, "random_number"));
            const auto& type = v.field("message_type");
            if (type == "application") {
                want.body = wire::ApplicationBody{id_field<CapabilityId>(v, "destination"),
                                                  id_field<ChannelId>(v, "channel_id")};
            } else if (type == "system") {
                want.body = system_fields(v);
            } else {
                want.body = wire::ReconnectBody{id_field<ChannelId>(v, "channel_id"), u64_field(v, "received_count")};
            }
            want.signature = from_hex(v.field("signature"));
            const auto got = wire::decode_connection_message(v.data, [&](const PeerId& id) -> std::optional<PublicKey> {
                if (id == want.sender_id) return keys.public_key;
                return std::nullopt;
            });
            if (!(got == want)) return "decoded fields differ";
            encoded = wire::encode_connection_message(want, keys.private_key);
        } else if (kind == "system-reply") {
            const auto want = system_fields(v);
            if (!(wire::decode_system_reply(v.data) == want)) return "decoded fields differ";
            encoded = wire::encode_system_reply(want);
        } else if (kind == "fallback-request") {
            const auto keys = key_fields(v);
            if (to_hex(keys.public_key) != v.field("public_key")) return "derived public key differs";
            wire::FallbackRequest want{id_field<PeerId>(v, "sender_id"), OverlayAddress{v.field("sender_address")},
                                       u64_field(v, "sender_version"), code_field(v), from_hex(v.field("signature"))};
            const auto got = wire::decode_fallback_request(v.data);
            if (!(got == want)) return "decoded fields differ";
            if (!wire::verify_fallback_request(got, keys.public_key)) return "signature does not verify";
            encoded = wire::encode_fallback_request(want, keys.private_key);
        } else if (kind == "resume-ack") {
            const wire::ReconnectBody want{id_field<ChannelId>(v, "channel_id"), u64_field(v, "received_count")};
            if (!(wire::decode_resume_ack(v.data) == want)) return "decoded fields differ";
            encoded = wire::encode_resume_ack(want);
        } else {
            return "unknown frame " + kind;
        }
        if (encoded != v.data) return "re-encoding differs: " + to_hex(encoded);
        return {};
    } catch (const std::exception& e) {
        return std::string("threw: ") + e.what();
    }
}

}  // namespace f2f::testkit
