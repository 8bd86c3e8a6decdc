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

// Canned stories for the simulator.
//
// A scenario file is line-oriented UTF-8; '#' starts a comment. Directives:
//
//     config <key> <value>
//     peer <name> [net=<attachment>] [phone=<number>]
//     capability <name>
//     service <peer> <capability> sink|echo
//     friend <a> <b>
//     fault drop-announce <from> <to> [<count>]
//     fault break-stream <transfer> <byte>
//     fault detach-during <transfer> <byte> <peer> <duration> [<net>]
//     at <time> attach <peer> <net>
//     at <time> detach <peer>
//     at <time> announce <peer>
//     at <time> transfer <name> <from> <to> <capability> <bytes>
//     run-until <time>
//     expect <predicate...>
//
// Times accept ms, s and m suffixes (a bare number is milliseconds); sizes
// accept KiB and MiB. `at` lines must be in non-decreasing time order.
//
// Predicates:
//
//     converged <peer>                       every friend holds peer's (address, version)
//     recovered <who> <target> mutual-friend|fallback
//     status <who> <target> online|offline
//     transfer-ok <name> / transfer-failed <name>
//     count <peer> <counter> <op> <n>        op is one of == != < <= > >=
//     oob-sent <peer> <n>                    shorthand for count <peer> oob-sent == n
//     version <peer> <op> <n>

#include "f2f/config.hpp"
#include "f2f/node.hpp"
#include "f2f/sim_messenger.hpp"
#include "f2f/sim_network.hpp"
#include "f2f/simulator.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace f2f::sim {

class ScenarioError : public std::runtime_error {
public:
    ScenarioError(int line, const std::string& what)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    [[nodiscard]] int line() const { return line_; }

private:
    int line_;
};

enum class ServiceKind { Sink, Echo };

struct PeerSpec {
    std::string name;
    std::string net;  // empty: starts detached
    std::string phone;
};

struct ServiceSpec {
    std::string peer;
    std::string capability;
    ServiceKind kind = ServiceKind::Sink;
};

struct DropAnnounce {
    std::string from;
    std::string to;
    std::uint64_t count = 1;
};

/// Fires when the receiving service has seen `at_byte` bytes of a transfer.
struct StreamFault {
    enum class Kind { BreakStream, DetachDuring };
    Kind kind = Kind::BreakStream;
    std::string transfer;
    std::uint64_t at_byte = 0;
    std::string peer;        // DetachDuring
    TimeMs duration_ms = 0;  // DetachDuring
    std::string net;         // DetachDuring; empty: the current one
};

struct AttachStep {
    std::string peer;
    std::string net;
};
struct DetachStep {
    std::string peer;
};
struct AnnounceStep {
    std::string peer;
};
struct TransferStep {
    std::string name;
    std::string from;
    std::string to;
    std::string capability;
    std::uint64_t bytes = 0;
};

struct TimelineStep {
    TimeMs at = 0;
    std::variant<AttachStep, DetachStep, AnnounceStep, TransferStep> action;
    int line = 0;
};

struct Expectation {
    std::vector<std::string> words;  // the predicate and its arguments
    int line = 0;

    [[nodiscard]] std::string text() const;
};

struct Scenario {
    std::vector<std::pair<std::string, std::string>> settings;
    std::vector<PeerSpec> peers;
    std::vector<std::string> capabilities;
    std::vector<ServiceSpec> services;
    std::vector<std::pair<std::string, std::string>> friendships;
    std::vector<DropAnnounce> drops;
    std::vector<StreamFault> faults;
    std::vector<TimelineStep> timeline;
    std::vector<Expectation> expectations;
    std::optional<TimeMs> run_until;
};

/// Parses and validates. Throws ScenarioError naming the offending line.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

TimeMs parse_duration(std::string_view text);
std::uint64_t parse_size(std::string_view text);

/// One application transfer driven by the world.
struct TransferRecord {
    std::string name;
    std::string from;
    std::string to;
    Bytes payload;  // 8-byte big-endian transfer index, then seeded random bytes
    TimeMs started_at = 0;
    std::optional<TimeMs> first_byte_at;
    std::uint64_t first_delivery_bytes = 0;  // bytes that arrived together at first_byte_at
    std::optional<TimeMs> completed_at;
    Bytes received;
    bool sink_eof = false;
    bool sink_reset = false;
    bool client_reset = false;

    [[nodiscard]] bool ok() const { return sink_eof && !sink_reset && received == payload; }
};

struct SafetyViolation {
    std::uint64_t event_index = 0;
    TimeMs at = 0;
    std::string what;
};

/// Peers, network and messenger for one seeded run.
class World {
public:
    World(const Scenario& scenario, std::uint64_t seed, RunConfig config);
    ~World();

    World(const World&) = delete;
    World& operator=(const World&) = delete;

    Simulator& sim() { return sim_; }
    SimNetwork& network() { return network_; }
    SimMessenger& messenger() { return messenger_; }
    Trace& trace() { return trace_; }
    [[nodiscard]] const RunConfig& config() const { return config_; }

    Node& node(const std::string& name);
    [[nodiscard]] const Node& node(const std::string& name) const;
    [[nodiscard]] std::vector<std::string> peer_names() const;
    [[nodiscard]] CapabilityId capability(const std::string& name) const;

    void attach(const std::string& peer, const std::string& net);
    void detach(const std::string& peer);
    void announce(const std::string& peer);

    /// Opens an application connection from `from` toward `to`'s service.
    /// Returns nullptr when no client port could be opened.
    StreamPtr open_app_stream(const std::string& from, const std::string& to, const std::string& capability);
    TransferRecord& start_transfer(const TransferStep& step);
    [[nodiscard]] const TransferRecord* transfer(const std::string& name) const;
    [[nodiscard]] const std::map<std::string, TransferRecord>& transfers() const { return transfers_; }

    /// Named instrumentation counter; throws ScenarioError for unknown names.
    [[nodiscard]] std::uint64_t counter(const std::string& peer, const std::string& name) const;

    [[nodiscard]] const std::optional<SafetyViolation>& violation() const { return violation_; }

private:
    struct Peer;
    struct SinkSession;

    void seed_directories(const Scenario& scenario);
    void start_service(Peer& peer, const ServiceSpec& spec);
    void on_sink_bytes(TransferRecord& record, std::uint64_t before);
    void check_safety();

    RunConfig config_;
    Simulator sim_;
    SimNetwork network_;
    SimMessenger messenger_;
    Trace trace_;
    std::map<std::string, CapabilityId> capabilities_;
    std::map<std::string, std::unique_ptr<Peer>> peers_;
    std::vector<std::string> order_;
    std::map<std::string, TransferRecord> transfers_;
    std::vector<std::string> transfer_order_;
    std::vector<StreamFault> faults_;
    std::optional<SafetyViolation> violation_;
    std::map<std::pair<std::string, std::string>, std::uint64_t> seen_versions_;
    std::map<std::string, std::uint64_t> own_versions_;
};

struct PredicateResult {
    std::string text;
    int line = 0;
    bool passed = false;
    std::string detail;
};

struct RunResult {
    std::vector<PredicateResult> predicates;
    std::optional<SafetyViolation> violation;
    std::uint64_t events = 0;
    TimeMs end_time = 0;
    std::shared_ptr<World> world;

    [[nodiscard]] bool passed() const;
    [[nodiscard]] const std::vector<std::string>& trace() const { return world->trace().lines(); }
};

/// Default horizon when a scenario has no run-until line.
constexpr TimeMs kDefaultHorizonMs = 6ull * 60 * 60 * 1000;

RunResult run_scenario(const Scenario& scenario, std::uint64_t seed, const RunConfig& base = {});

PredicateResult evaluate(const Expectation& expectation, const World& world);

}  // namespace f2f::sim
