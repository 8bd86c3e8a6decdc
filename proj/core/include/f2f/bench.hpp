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

#include "f2f/config.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace f2f::bench {

/// MessageSize / Bandwidth. Throws std::domain_error unless bandwidth > 0.
double transmission_time(double message_size_bits, double bandwidth_bps);
/// RTT / 2. Throws std::domain_error for negative input.
double latency_from_rtt(double rtt_s);
/// 8 * bytes / elapsed. Throws std::domain_error unless elapsed > 0.
double throughput(double bytes_read, double elapsed_s);

/// Smallest sample with at least p percent of the set at or below it.
/// Throws std::domain_error for an empty set or p outside [0, 100].
double nearest_rank(std::vector<double> samples, double percentile);

struct Summary {
    double median = 0;
    std::map<double, double> percentiles;
    std::size_t n = 0;
};

Summary summarize(const std::vector<double>& samples, const std::vector<double>& percentiles);

/// One measurement. Propagation, queuing and processing time are named for
/// completeness; nothing here measures them separately.
struct MetricSample {
    std::optional<double> connect_time_s;
    std::optional<double> throughput_bps;
    std::optional<double> rtt_s;
    std::optional<double> transmission_time_s;
    std::optional<double> latency_s;
    std::optional<double> propagation_time_s;
    std::optional<double> queuing_time_s;
    std::optional<double> processing_time_s;
};

enum class Experiment { Connect, Throughput, Rtt };

const char* to_string(Experiment experiment);

struct Preset {
    std::string name;
    Experiment experiment = Experiment::Rtt;
    std::size_t trials = 10;
    std::uint64_t bytes = 2 * 1024 * 1024;   // throughput transfer size
    double message_bits = 8;                 // for the transmission-time column
    std::vector<std::string> profiles{"overlay"};  // overlay and/or direct
    std::vector<std::pair<std::string, std::string>> settings;
};

class BenchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// key = value file; experiment, trials, bytes, message_bits and profiles are
/// bench keys, everything else is a run setting.
Preset parse_preset(std::string name, std::string_view text);
Preset load_preset(const std::filesystem::path& path);

struct Table {
    std::string title;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] std::string text() const;
    [[nodiscard]] std::string csv() const;
};

struct ProfileResult {
    std::string profile;
    std::vector<MetricSample> samples;
};

struct BenchResult {
    Preset preset;
    std::vector<ProfileResult> profiles;
    Table table;
};

/// Runs every trial in the simulator. Times are simulated, not wall clock.
BenchResult run(const Preset& preset, std::uint64_t seed, const RunConfig& base = {});

}  // namespace f2f::bench
