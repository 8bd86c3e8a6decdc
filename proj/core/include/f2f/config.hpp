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

#include "f2f/address.hpp"
#include "f2f/sim_network.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace f2f {

struct ProxyConfig {
    std::uint16_t port_low = 20000;
    std::uint16_t port_high = 20999;
    TimeMs connect_timeout_ms = 10'000;
    TimeMs handshake_timeout_ms = 10'000;
    /// How long the server proxy waits for the connection message. Longer
    /// than the nonce lifetime so late messages get an explicit 0x11.
    TimeMs inbound_timeout_ms = 60'000;
    TimeMs nonce_ttl_ms = 30'000;
};

struct ChannelConfig {
    bool enabled = true;
    std::size_t window = 64 * 1024;
    std::size_t trickle_bytes_per_s = 256;
    TimeMs grace_ms = 60'000;
    std::size_t overflow = 1024 * 1024;  // 0 disables the overflow queue
    TimeMs trickle_tick_ms = 1'000;
    TimeMs keepalive_ms = 2'000;
    TimeMs retry_ms = 1'000;
};

struct SysmsgConfig {
    TimeMs announce_timeout_ms = 10'000;
    TimeMs query_timeout_ms = 10'000;
};

struct FallbackConfig {
    TimeMs code_expiry_ms = 24ull * 60 * 60 * 1000;
    TimeMs resend_ms = 60'000;
};

struct NodeConfig {
    ProxyConfig proxy;
    ChannelConfig channel;
    SysmsgConfig sysmsg;
    FallbackConfig fallback;
};

struct MessengerConfig {
    TimeMs latency_ms = 5'000;
    TimeMs jitter_ms = 0;
    double loss = 0.0;       // drop probability per message
    double duplicate = 0.0;  // probability a delivered message arrives twice
};

/// Everything a run can be configured with.
struct RunConfig {
    std::string transport = "sim";
    NodeConfig node;
    sim::NetworkConfig network;
    MessengerConfig messenger;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Applies one `key = value` setting. Unknown keys and bad values throw.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

/// Parses a key=value file body ('#' comments, blank lines ignored).
std::map<std::string, std::string> parse_key_values(std::string_view text);

void apply_config_text(RunConfig& config, std::string_view text);
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

/// Applies the file named by F2F_CONFIG when the variable is set.
void apply_environment(RunConfig& config);

}  // namespace f2f
