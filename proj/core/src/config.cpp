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

#include "f2f/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace f2f {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::uint64_t to_u64(std::string_view key, std::string_view value) {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ConfigError("invalid integer for " + std::string(key) + ": " + std::string(value));
    }
    return out;
}

double to_double(std::string_view key, std::string_view value) {
    try {
        std::size_t used = 0;
        const std::string s(value);
        const double out = std::stod(s, &used);
        if (used != s.size() || out < 0) throw std::invalid_argument("");
        return out;
    } catch (const std::exception&) {
        throw ConfigError("invalid number for " + std::string(key) + ": " + std::string(value));
    }
}

bool to_bool(std::string_view key, std::string_view value) {
    if (value == "true" || value == "1" || value == "on") return true;
    if (value == "false" || value == "0" || value == "off") return false;
    throw ConfigError("invalid boolean for " + std::string(key) + ": " + std::string(value));
}

void apply_link(sim::LinkProfile& link, std::string_view field, std::string_view key, std::string_view value) {
    if (field == "latency") link.latency_ms = to_u64(key, value);
    else if (field == "jitter") link.jitter_ms = to_u64(key, value);
    else if (field == "bandwidth") link.bandwidth_bps = to_double(key, value);
    else if (field == "buffer") link.buffer_bytes = to_u64(key, value);
    else throw ConfigError("unknown configuration key " + std::string(key));
}

}  // namespace

void apply_setting(RunConfig& c, std::string_view key, std::string_view value) {
    using Setter = std::function<void(std::string_view)>;
    auto u64 = [key](auto& field) {
        return Setter([&field, key](std::string_view v) { field = static_cast<std::decay_t<decltype(field)>>(to_u64(key, v)); });
    };
    const std::map<std::string_view, Setter> setters = {
        {"transport",
         [&c](std::string_view v) {
             if (v != "sim" && v != "tcp-direct") throw ConfigError("transport must be sim or tcp-direct");
             c.transport = v;
         }},
        {"proxy.port_low", u64(c.node.proxy.port_low)},
        {"proxy.port_high", u64(c.node.proxy.port_high)},
        {"proxy.connect_timeout", u64(c.node.proxy.connect_timeout_ms)},
        {"proxy.handshake_timeout", u64(c.node.proxy.handshake_timeout_ms)},
        {"proxy.inbound_timeout", u64(c.node.proxy.inbound_timeout_ms)},
        {"proxy.nonce_ttl", u64(c.node.proxy.nonce_ttl_ms)},
        {"channel.enabled", [&c, key](std::string_view v) { c.node.channel.enabled = to_bool(key, v); }},
        {"channel.window", u64(c.node.channel.window)},
        {"channel.trickle", u64(c.node.channel.trickle_bytes_per_s)},
        {"channel.grace", u64(c.node.channel.grace_ms)},
        {"channel.overflow", u64(c.node.channel.overflow)},
        {"channel.trickle_tick", u64(c.node.channel.trickle_tick_ms)},
        {"channel.keepalive", u64(c.node.channel.keepalive_ms)},
        {"channel.retry", u64(c.node.channel.retry_ms)},
        {"sysmsg.announce_timeout", u64(c.node.sysmsg.announce_timeout_ms)},
        {"sysmsg.query_timeout", u64(c.node.sysmsg.query_timeout_ms)},
        {"fallback.code_expiry", u64(c.node.fallback.code_expiry_ms)},
        {"fallback.resend", u64(c.node.fallback.resend_ms)},
        {"messenger.latency", u64(c.messenger.latency_ms)},
        {"messenger.jitter", u64(c.messenger.jitter_ms)},
        {"messenger.loss",
         [&c, key](std::string_view v) {
             c.messenger.loss = to_double(key, v);
             if (c.messenger.loss > 1.0) throw ConfigError("messenger.loss must be <= 1");
         }},
        {"messenger.duplicate",
         [&c, key](std::string_view v) {
             c.messenger.duplicate = to_double(key, v);
             if (c.messenger.duplicate > 1.0) throw ConfigError("messenger.duplicate must be <= 1");
         }},
        {"network.direct_links", [&c, key](std::string_view v) { c.network.direct_links = to_bool(key, v); }},
        {"network.black_hole", [&c, key](std::string_view v) { c.network.black_hole_stale = to_bool(key, v); }},
    };
    if (auto it = setters.find(key); it != setters.end()) {
        it->second(value);
        return;
    }
    constexpr std::string_view kOverlay = "overlay.";
    constexpr std::string_view kDirect = "direct.";
    if (key.starts_with(kOverlay)) {
        apply_link(c.network.overlay, key.substr(kOverlay.size()), key, value);
    } else if (key.starts_with(kDirect)) {
        apply_link(c.network.direct, key.substr(kDirect.size()), key, value);
    } else {
        throw ConfigError("unknown configuration key " + std::string(key));
    }
}

std::map<std::string, std::string> parse_key_values(std::string_view text) {
    std::map<std::string, std::string> out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        auto nl = text.find('\n');
        auto line = trim(text.substr(0, nl));
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        if (line.empty() || line.front() == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        }
        out[std::string(trim(line.substr(0, eq)))] = std::string(trim(line.substr(eq + 1)));
    }
    return out;
}

void apply_config_text(RunConfig& config, std::string_view text) {
    for (const auto& [k, v] : parse_key_values(text)) apply_setting(config, k, v);
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read configuration file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    apply_config_text(config, buf.str());
}

void apply_environment(RunConfig& config) {
    if (const char* path = std::getenv("F2F_CONFIG"); path && *path) {
        apply_config_file(config, path);
    }
}

}  // namespace f2f
