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

#include "f2f/bench.hpp"

#include "f2f/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace f2f::bench {

double transmission_time(double message_size_bits, double bandwidth_bps) {
    if (!(bandwidth_bps > 0)) throw std::domain_error("bandwidth must be positive");
    if (message_size_bits < 0) throw std::domain_error("message size must be non-negative");
    return message_size_bits / bandwidth_bps;
}

double latency_from_rtt(double rtt_s) {
    if (rtt_s < 0) throw std::domain_error("rtt must be non-negative");
    return rtt_s / 2;
}

double throughput(double bytes_read, double elapsed_s) {
    if (!(elapsed_s > 0)) throw std::domain_error("elapsed time must be positive");
    if (bytes_read < 0) throw std::domain_error("byte count must be non-negative");
    return 8 * bytes_read / elapsed_s;
}

double nearest_rank(std::vector<double> samples, double percentile) {
    if (samples.empty()) throw std::domain_error("no samples");
    if (percentile < 0 || percentile > 100) throw std::domain_error("percentile outside [0, 100]");
    std::sort(samples.begin(), samples.end());
    const auto n = static_cast<double>(samples.size());
    auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * n));
    rank = std::clamp<std::size_t>(rank, 1, samples.size());
    return samples[rank - 1];
}

Summary summarize(const std::vector<double>& samples, const std::vector<double>& percentiles) {
    Summary s;
    s.n = samples.size();
    s.median = nearest_rank(samples, 50);
    for (auto p : percentiles) s.percentiles[p] = nearest_rank(samples, p);
    return s;
}

const char* to_string(Experiment experiment) {
    switch (experiment) {
        case Experiment::Connect: return "connect";
        case Experiment::Throughput: return "throughput";
        case Experiment::Rtt: return "rtt";
    }
    return "?";
}

// ---------------------------------------------------------------- presets

Preset parse_preset(std::string name, std::string_view text) {
    Preset preset;
    preset.name = std::move(name);
    std::map<std::string, std::string> values;
    try {
        values = parse_key_values(text);
    } catch (const ConfigError& e) {
        throw BenchError(e.what());
    }
    RunConfig probe;
    for (const auto& [key, value] : values) {
        try {
            if (key == "experiment") {
                if (value == "connect") {
                    preset.experiment = Experiment::Connect;
                } else if (value == "throughput") {
                    preset.experiment = Experiment::Throughput;
                } else if (value == "rtt") {
                    preset.experiment = Experiment::Rtt;
                } else {
                    throw BenchError("unknown experiment '" + value + "'");
                }
            } else if (key == "trials") {
                preset.trials = std::stoul(value);
                if (preset.trials == 0) throw BenchError("trials must be positive");
            } else if (key == "bytes") {
                preset.bytes = sim::parse_size(value);
            } else if (key == "message_bits") {
                preset.message_bits = std::stod(value);
            } else if (key == "profiles") {
                preset.profiles.clear();
                std::stringstream in(value);
                std::string item;
                while (std::getline(in, item, ',')) {
                    item.erase(std::remove(item.begin(), item.end(), ' '), item.end());
                    if (item != "overlay" && item != "direct") throw BenchError("unknown profile '" + item + "'");
                    preset.profiles.push_back(item);
                }
                if (preset.profiles.empty()) throw BenchError("no profiles");
            } else {
                apply_setting(probe, key, value);
                preset.settings.emplace_back(key, value);
            }
        } catch (const BenchError&) {
            throw;
        } catch (const std::exception& e) {
            throw BenchError(key + ": " + e.what());
        }
    }
    return preset;
}

Preset load_preset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw BenchError("cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_preset(path.stem().string(), buffer.str());
}

// ---------------------------------------------------------------- tables

namespace {

std::string fixed(double value, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, value);
    return buf;
}

}  // namespace

std::string Table::text() const {
    std::vector<std::size_t> width(columns.size(), 0);
    for (std::size_t i = 0; i < columns.size(); ++i) width[i] = columns[i].size();
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size() && i < width.size(); ++i) width[i] = std::max(width[i], row[i].size());
    }
    std::ostringstream out;
    out << title << '\n';
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0) out << "  ";
            // Left-align the label column, right-align numbers.
            if (i == 0) {
                out << cells[i] << std::string(width[i] - cells[i].size(), ' ');
            } else {
                out << std::string(width[i] - cells[i].size(), ' ') << cells[i];
            }
        }
        out << '\n';
    };
    line(columns);
    std::vector<std::string> rule;
    for (auto w : width) rule.emplace_back(w, '-');
    line(rule);
    for (const auto& row : rows) line(row);
    return out.str();
}

std::string Table::csv() const {
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
        out << '\n';
    };
    line(columns);
    for (const auto& row : rows) line(row);
    return out.str();
}

// ---------------------------------------------------------------- experiments

namespace {

constexpr TimeMs kStartMs = 1'000;
constexpr TimeMs kTrialBudgetMs = 30ull * 60 * 1000;

sim::Scenario two_peers(sim::ServiceKind kind) {
    sim::Scenario sc;
    sc.peers = {{"A", "net-a", ""}, {"B", "net-b", ""}};
    sc.capabilities = {"svc"};
    sc.services = {{"B", "svc", kind}};
    sc.friendships = {{"A", "B"}};
    return sc;
}

/// Steps the world until `done` holds, the queue drains or the budget ends.
void run_until(sim::World& world, const std::function<bool()>& done) {
    auto& sim = world.sim();
    while (!done() && !sim.idle() && sim.now() < kTrialBudgetMs) sim.step();
}

std::optional<double> connect_trial(sim::World& world) {
    std::optional<double> result;
    world.sim().schedule_at(kStartMs, [&world] {
        auto app = world.open_app_stream("A", "B", "svc");
        if (!app) return;
        app->write(Bytes{0x01});
        app->shutdown_write();
    });
    const auto& times = world.node("A").client().connect_times();
    run_until(world, [&] { return !times.empty(); });
    if (!times.empty()) result = static_cast<double>(times.front()) / 1000.0;
    return result;
}

std::optional<double> throughput_trial(sim::World& world, std::uint64_t bytes) {
    world.sim().schedule_at(kStartMs, [&world, bytes] {
        world.start_transfer(sim::TransferStep{"bulk", "A", "B", "svc", bytes});
    });
    run_until(world, [&] {
        const auto* t = world.transfer("bulk");
        return t && (t->completed_at || t->client_reset);
    });
    const auto* t = world.transfer("bulk");
    if (!t || !t->ok() || !t->first_byte_at || *t->completed_at <= *t->first_byte_at) return std::nullopt;
    const auto elapsed = static_cast<double>(*t->completed_at - *t->first_byte_at) / 1000.0;
    // The first delivery marks the start of reading; its bytes were paid for
    // before the clock started.
    return throughput(static_cast<double>(t->received.size() - t->first_delivery_bytes), elapsed);
}

/// One-byte probes over an established stream; the first one warms it up.
std::vector<double> rtt_trial(sim::World& world, std::size_t probes) {
    struct State {
        StreamPtr app;
        TimeMs sent_at = 0;
        std::size_t sent = 0;
        std::vector<double> rtts;
    };
    auto state = std::make_shared<State>();
    auto& sim = world.sim();
    auto send = [state, &sim] {
        state->sent_at = sim.now();
        ++state->sent;
        state->app->write(Bytes{0x2A});
    };
    sim.schedule_at(kStartMs, [state, &world, &sim, probes, send] {
        state->app = world.open_app_stream("A", "B", "svc");
        if (!state->app) return;
        state->app->set_on_readable([state, &sim, probes, send] {
            const auto n = state->app->readable();
            if (n == 0) return;
            state->app->read(n);
            if (state->sent > 1) state->rtts.push_back(static_cast<double>(sim.now() - state->sent_at) / 1000.0);
            if (state->rtts.size() < probes) {
                send();
            } else {
                state->app->clear_handlers();
                state->app->shutdown_write();
            }
        });
        send();
    });
    run_until(world, [&] { return state->rtts.size() >= probes; });
    return state->rtts;
}

}  // namespace

BenchResult run(const Preset& preset, std::uint64_t seed, const RunConfig& base) {
    BenchResult result;
    result.preset = preset;
    Rng seeds(seed);

    auto& table = result.table;
    table.title = std::string(to_string(preset.experiment)) + " (" + preset.name + ", seed " + std::to_string(seed) +
                  ", simulated time)";
    switch (preset.experiment) {
        case Experiment::Connect:
            table.columns = {"profile", "n", "median_s", "p90_s"};
            break;
        case Experiment::Throughput:
            table.columns = {"profile", "n", "median_mbps", "p90_mbps", "transmission_time_us"};
            break;
        case Experiment::Rtt:
            table.columns = {"profile", "n", "rtt_median_s", "rtt_p90_s", "latency_s"};
            break;
    }

    for (const auto& profile : preset.profiles) {
        auto config = base;
        for (const auto& [key, value] : preset.settings) apply_setting(config, key, value);
        config.network.direct_links = profile == "direct";

        ProfileResult pr{profile, {}};
        if (preset.experiment == Experiment::Rtt) {
            // One long-lived stream, `trials` probes.
            sim::World world(two_peers(sim::ServiceKind::Echo), seeds.next_u64(), config);
            for (auto rtt : rtt_trial(world, preset.trials)) {
                MetricSample s;
                s.rtt_s = rtt;
                s.latency_s = latency_from_rtt(rtt);
                pr.samples.push_back(s);
            }
        } else {
            for (std::size_t i = 0; i < preset.trials; ++i) {
                const auto kind =
                    preset.experiment == Experiment::Connect ? sim::ServiceKind::Echo : sim::ServiceKind::Sink;
                sim::World world(two_peers(kind), seeds.next_u64(), config);
                MetricSample s;
                if (preset.experiment == Experiment::Connect) {
                    s.connect_time_s = connect_trial(world);
                    if (!s.connect_time_s) continue;
                } else {
                    s.throughput_bps = throughput_trial(world, preset.bytes);
                    if (!s.throughput_bps) continue;
                    s.transmission_time_s = transmission_time(preset.message_bits, *s.throughput_bps);
                }
                pr.samples.push_back(s);
            }
        }

        std::vector<double> values;
        std::vector<double> latencies;
        for (const auto& s : pr.samples) {
            if (s.connect_time_s) values.push_back(*s.connect_time_s);
            if (s.throughput_bps) values.push_back(*s.throughput_bps);
            if (s.rtt_s) values.push_back(*s.rtt_s);
            if (s.latency_s) latencies.push_back(*s.latency_s);
        }
        if (values.empty()) {
            std::vector<std::string> row{profile, "0"};
            row.resize(table.columns.size(), "-");
            table.rows.push_back(row);
        } else {
            const auto sum = summarize(values, {90});
            const auto n = std::to_string(sum.n);
            switch (preset.experiment) {
                case Experiment::Connect:
                    table.rows.push_back({profile, n, fixed(sum.median, 3), fixed(sum.percentiles.at(90), 3)});
                    break;
                case Experiment::Throughput:
                    table.rows.push_back({profile, n, fixed(sum.median / 1e6, 3),
                                          fixed(sum.percentiles.at(90) / 1e6, 3),
                                          fixed(transmission_time(preset.message_bits, sum.median) * 1e6, 3)});
                    break;
                case Experiment::Rtt:
                    table.rows.push_back({profile, n, fixed(sum.median, 3), fixed(sum.percentiles.at(90), 3),
                                          fixed(nearest_rank(latencies, 50), 4)});
                    break;
            }
        }
        result.profiles.push_back(std::move(pr));
    }
    return result;
}

}  // namespace f2f::bench
