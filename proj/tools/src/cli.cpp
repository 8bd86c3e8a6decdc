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

#include "f2f/cli.hpp"

#include "f2f/bench.hpp"
#include "f2f/contacts.hpp"
#include "f2f/scenario.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>

namespace f2f::cli {

namespace {

namespace fs = std::filesystem;

fs::path preset_dir() {
    if (const char* env = std::getenv("F2F_PRESET_DIR"); env && *env) return env;
#ifdef F2F_PRESET_DIR
    return F2F_PRESET_DIR;
#else
    return "presets";
#endif
}

/// The path itself when it exists, else the shipped preset of that name.
std::optional<fs::path> resolve(const std::string& arg, const fs::path& dir, const std::string& ext) {
    for (const auto& candidate : {fs::path(arg), dir / arg, dir / (arg + ext)}) {
        std::error_code ec;
        if (fs::is_regular_file(candidate, ec)) return candidate;
    }
    return std::nullopt;
}

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

RunConfig base_config(const std::string& config_file) {
    RunConfig config;
    try {
        apply_environment(config);
        if (!config_file.empty()) apply_config_file(config, config_file);
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
    if (config.transport != "sim") {
        throw UsageError("transport '" + config.transport + "' is not built into this binary; use transport = sim");
    }
    return config;
}

int scenario_run(const std::string& file, std::uint64_t seed, const std::string& trace_path,
                 const std::string& config_file, std::ostream& out) {
    const auto path = resolve(file, preset_dir(), ".scn");
    if (!path) throw UsageError("no such scenario: " + file);
    const auto config = base_config(config_file);
    sim::Scenario scenario;
    try {
        scenario = sim::load_scenario(*path);
    } catch (const sim::ScenarioError& e) {
        throw UsageError(path->filename().string() + ": " + e.what());
    }
    const auto result = sim::run_scenario(scenario, seed, config);

    if (!trace_path.empty()) {
        const auto text = result.world->trace().text();
        if (trace_path == "-") {
            out << text;
        } else {
            std::ofstream trace(trace_path);
            if (!trace) throw UsageError("cannot write " + trace_path);
            trace << text;
        }
    }

    out << "scenario " << path->filename().string() << " seed " << seed << ": " << result.events << " events, "
        << result.trace().size() << " trace lines, ended at " << result.end_time << " ms\n";
    const sim::PredicateResult* first_failure = nullptr;
    for (const auto& p : result.predicates) {
        out << (p.passed ? "PASS  " : "FAIL  ") << p.text;
        if (!p.detail.empty()) out << "  (" << p.detail << ")";
        out << '\n';
        if (!p.passed && !first_failure) first_failure = &p;
    }
    if (result.violation) {
        out << "FAIL  safety: " << result.violation->what << " at event " << result.violation->event_index << " ("
            << result.violation->at << " ms)\n";
    } else {
        out << "PASS  safety invariants held after every event\n";
    }
    if (result.passed()) {
        out << "result: PASS\n";
        return kExitOk;
    }
    if (result.violation) {
        out << "result: FAIL, first violation: safety at event " << result.violation->event_index << '\n';
    } else {
        out << "result: FAIL, first violated predicate: " << first_failure->text << " (line " << first_failure->line
            << ") at event " << result.events << '\n';
    }
    return kExitPredicateFailed;
}

int bench_run(const std::string& name, std::uint64_t seed, bool csv, std::optional<std::size_t> trials,
              const std::string& config_file, std::ostream& out) {
    const auto path = resolve(name, preset_dir() / "bench", ".preset");
    if (!path) throw UsageError("no such bench preset: " + name);
    const auto config = base_config(config_file);
    bench::Preset preset;
    try {
        preset = bench::load_preset(*path);
    } catch (const bench::BenchError& e) {
        throw UsageError(path->filename().string() + ": " + e.what());
    }
    if (trials) preset.trials = *trials;
    const auto result = bench::run(preset, seed, config);
    out << (csv ? result.table.csv() : result.table.text());
    return kExitOk;
}

void print_record(const ContactRecord& r, std::ostream& out) {
    out << r.name << '\n';
    out << "  peer_id            " << r.peer_id.hex() << '\n';
    out << "  address            " << (r.address.empty() ? "-" : r.address.value) << " (v" << r.address_version
        << ")\n";
    out << "  phone              " << (r.secondary_address.empty() ? "-" : r.secondary_address) << '\n';
    out << "  public_key         " << to_hex(r.public_key) << '\n';
    out << "  status             " << (r.online() ? "online" : "offline") << " (last contact "
        << r.last_contact_time << " ms)\n";
    out << "  known_friends      " << r.known_friends.size() << '\n';
    out << "  capabilities       " << r.capabilities.size() << '\n';
    if (r.awaiting_answer) out << "  awaiting fallback answer\n";
}

ContactDirectory load_contacts(const std::string& file, bool must_exist) {
    std::error_code ec;
    if (!fs::exists(file, ec)) {
        if (must_exist) throw UsageError("no such contacts file: " + file);
        return {};
    }
    try {
        return ContactDirectory::load_file(file);
    } catch (const ContactError& e) {
        throw UsageError(file + ": " + e.what());
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"f2fnet: friend-to-friend overlay middleware (simulator, benches, contact store)", "f2fnet"};
    app.require_subcommand(1);
    std::string config_file;
    app.add_option("--config", config_file, "key=value settings file (applied after F2F_CONFIG)");

    auto* scenario = app.add_subcommand("scenario", "Run canned scenarios");
    scenario->require_subcommand(1);
    auto* scenario_run_cmd = scenario->add_subcommand("run", "Run a scenario file and check its predicates");
    std::string scenario_file;
    std::uint64_t seed = 1;
    std::string trace_path;
    scenario_run_cmd->add_option("file", scenario_file, "scenario file or shipped preset name")->required();
    scenario_run_cmd->add_option("--seed", seed, "simulation seed");
    scenario_run_cmd->add_option("--trace", trace_path, "write the event trace here ('-' for stdout)");

    auto* bench_cmd = app.add_subcommand("bench", "Simulated measurements");
    bench_cmd->require_subcommand(1);
    auto* bench_run_cmd = bench_cmd->add_subcommand("run", "Run a bench preset");
    std::string preset;
    bool csv = false;
    std::size_t trials = 0;
    bench_run_cmd->add_option("preset", preset, "preset name (connect, throughput, rtt) or file")->required();
    bench_run_cmd->add_option("--seed", seed, "simulation seed");
    bench_run_cmd->add_flag("--csv", csv, "machine-readable output");
    auto* trials_opt = bench_run_cmd->add_option("--trials", trials, "override the preset's trial count")
                           ->check(CLI::PositiveNumber);

    auto* contacts = app.add_subcommand("contacts", "Inspect or edit a contact store");
    contacts->require_subcommand(1);
    auto* show = contacts->add_subcommand("show", "Print every record");
    std::string contacts_file;
    show->add_option("file", contacts_file, "contact store")->required();
    auto* add = contacts->add_subcommand("add", "Insert or update a record");
    ContactRecord record;
    std::string peer_hex;
    std::string key_hex;
    std::string address;
    std::vector<std::string> knows;
    std::vector<std::string> caps;
    add->add_option("file", contacts_file, "contact store (created when missing)")->required();
    add->add_option("--name", record.name, "display name")->required();
    add->add_option("--id", peer_hex, "peer id, 32 hex digits")->required();
    add->add_option("--key", key_hex, "Ed25519 public key, 64 hex digits")->required();
    add->add_option("--phone", record.secondary_address, "phone number for the fallback channel");
    add->add_option("--address", address, "overlay address");
    add->add_option("--version", record.address_version, "address version");
    add->add_option("--knows", knows, "peer ids of mutual friends");
    add->add_option("--capability", caps, "capability ids the friend offers");

    auto* keygen = app.add_subcommand("keygen", "Derive an identity from a seed");
    std::uint64_t key_seed = 0;
    std::string key_name = "peer";
    keygen->add_option("--seed", key_seed, "seed")->required();
    keygen->add_option("--name", key_name, "identity name");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (scenario_run_cmd->parsed()) return scenario_run(scenario_file, seed, trace_path, config_file, out);
        if (bench_run_cmd->parsed()) {
            std::optional<std::size_t> override;
            if (*trials_opt) override = trials;
            return bench_run(preset, seed, csv, override, config_file, out);
        }
        if (show->parsed()) {
            const auto dir = load_contacts(contacts_file, true);
            out << dir.size() << " contact" << (dir.size() == 1 ? "" : "s") << '\n';
            for (const auto& r : dir.records()) print_record(r, out);
            return kExitOk;
        }
        if (add->parsed()) {
            auto dir = load_contacts(contacts_file, false);
            try {
                record.peer_id = PeerId::from_hex(peer_hex);
                record.public_key = public_key_from_hex(key_hex);
                for (const auto& k : knows) record.known_friends.push_back(PeerId::from_hex(k));
                for (const auto& c : caps) record.capabilities.push_back(CapabilityId::from_hex(c));
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            try {
                const auto version = record.address_version;
                record.address_version = 0;
                dir.upsert(record);
                if (!address.empty()) dir.apply_address_update(record.peer_id, OverlayAddress{address}, version);
                dir.save_file(contacts_file);
            } catch (const ContactError& e) {
                throw UsageError(e.what());
            }
            out << "saved " << record.name << " to " << contacts_file << '\n';
            return kExitOk;
        }
        if (keygen->parsed()) {
            Rng rng(key_seed);
            const auto identity = Identity::create(key_name, rng);
            out << "name        " << identity.name << '\n';
            out << "peer_id     " << identity.id.hex() << '\n';
            out << "public_key  " << to_hex(identity.keys.public_key) << '\n';
            out << "private_key " << to_hex(identity.keys.private_key) << '\n';
            return kExitOk;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    err << app.help();
    return kExitUsage;
}

}  // namespace f2f::cli
