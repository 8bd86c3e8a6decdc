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

#include "f2f/contacts.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace f2f {

namespace {

template <typename Id>
std::string join_ids(const std::vector<Id>& ids) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out.push_back(',');
        out += ids[i].hex();
    }
    return out;
}

template <typename Id>
std::vector<Id> split_ids(std::string_view text) {
    std::vector<Id> out;
    while (!text.empty()) {
        auto comma = text.find(',');
        out.push_back(Id::from_hex(text.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    return out;
}

std::uint64_t parse_u64(std::string_view text, std::string_view field) {
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ContactError(ContactError::Code::ParseError,
                           "invalid number for " + std::string(field));
    }
    return value;
}

bool has_line_break(std::string_view s) {
    return s.find('\n') != std::string_view::npos || s.find('\r') != std::string_view::npos;
}

void validate(const ContactRecord& record) {
    if (has_line_break(record.name) || has_line_break(record.secondary_address) ||
        has_line_break(record.address.value)) {
        throw ContactError(ContactError::Code::InvalidRecord, "contact fields must be single-line");
    }
}

// Field order of the persisted record. The loader insists on it so that
// load(save(d)) and save(load(text)) are both identities.
constexpr std::string_view kFields[] = {
    "name",          "peer_id",           "address",       "address_version",
    "secondary_address", "public_key",    "online_status", "last_contact_time",
    "known_friends", "capabilities",      "awaiting_answer",
};

}  // namespace

bool ContactRecord::knows(const PeerId& other) const {
    return std::find(known_friends.begin(), known_friends.end(), other) != known_friends.end();
}

bool ContactRecord::offers(const CapabilityId& capability) const {
    return std::find(capabilities.begin(), capabilities.end(), capability) != capabilities.end();
}

const char* to_string(ApplyResult result) {
    switch (result) {
        case ApplyResult::Applied: return "Applied";
        case ApplyResult::IgnoredStale: return "IgnoredStale";
        case ApplyResult::UnknownPeer: return "UnknownPeer";
    }
    return "?";
}

void ContactDirectory::upsert(const ContactRecord& record) {
    validate(record);
    if (!record.secondary_address.empty()) {
        for (const auto& other : records_) {
            if (other.peer_id != record.peer_id && other.secondary_address == record.secondary_address) {
                throw ContactError(ContactError::Code::DuplicatePhone,
                                   "secondary address already used by " + other.name);
            }
        }
    }
    auto it = index_.find(record.peer_id);
    if (it == index_.end()) {
        index_.emplace(record.peer_id, records_.size());
        records_.push_back(record);
        return;
    }
    auto& existing = records_[it->second];
    const auto address = existing.address;
    const auto version = existing.address_version;
    existing = record;
    existing.address = address;
    existing.address_version = version;
}

ApplyResult ContactDirectory::apply_address_update(const PeerId& peer, const OverlayAddress& address,
                                                   std::uint64_t version) {
    auto it = index_.find(peer);
    if (it == index_.end()) {
        return ApplyResult::UnknownPeer;
    }
    auto& record = records_[it->second];
    if (version <= record.address_version) {
        return ApplyResult::IgnoredStale;
    }
    record.address = address;
    record.address_version = version;
    record.online_status = OnlineStatus::Online;
    return ApplyResult::Applied;
}

const ContactRecord* ContactDirectory::find(const PeerId& peer) const {
    auto it = index_.find(peer);
    return it == index_.end() ? nullptr : &records_[it->second];
}

const ContactRecord& ContactDirectory::at(const PeerId& peer) const {
    if (const auto* r = find(peer)) return *r;
    throw ContactError(ContactError::Code::UnknownPeer, "unknown peer " + peer.hex());
}

ContactRecord& ContactDirectory::mutable_at(const PeerId& peer) {
    auto it = index_.find(peer);
    if (it == index_.end()) {
        throw ContactError(ContactError::Code::UnknownPeer, "unknown peer " + peer.hex());
    }
    return records_[it->second];
}

std::optional<ContactRecord> ContactDirectory::lookup_by_phone(std::string_view secondary_address) const {
    if (secondary_address.empty()) return std::nullopt;
    for (const auto& r : records_) {
        if (r.secondary_address == secondary_address) return r;
    }
    return std::nullopt;
}

std::vector<CapabilityId> ContactDirectory::match_capability(std::span<const CapabilityId> local_clients,
                                                             const ContactRecord& friend_record) {
    std::vector<CapabilityId> out;
    for (const auto& cap : friend_record.capabilities) {
        if (std::find(local_clients.begin(), local_clients.end(), cap) != local_clients.end()) {
            out.push_back(cap);
        }
    }
    return out;
}

std::vector<ContactRecord> ContactDirectory::mutual_friend_candidates(const PeerId& target) const {
    (void)at(target);
    std::vector<ContactRecord> out;
    for (const auto& r : records_) {
        if (r.peer_id != target && r.online() && r.knows(target)) {
            out.push_back(r);
        }
    }
    return out;
}

const ContactRecord& ContactDirectory::set_status(const PeerId& peer, OnlineStatus status, TimeMs contact_time) {
    auto& record = mutable_at(peer);
    record.online_status = status;
    if (status == OnlineStatus::Online) {
        record.last_contact_time = contact_time;
    }
    return record;
}

void ContactDirectory::set_awaiting_answer(const PeerId& peer, bool awaiting) {
    mutable_at(peer).awaiting_answer = awaiting;
}

std::string ContactDirectory::save() const {
    std::ostringstream out;
    out << kFileHeader << '\n';
    for (const auto& r : records_) {
        out << '\n';
        out << "name=" << r.name << '\n';
        out << "peer_id=" << r.peer_id.hex() << '\n';
        out << "address=" << r.address.value << '\n';
        out << "address_version=" << r.address_version << '\n';
        out << "secondary_address=" << r.secondary_address << '\n';
        out << "public_key=" << to_hex(r.public_key) << '\n';
        out << "online_status=" << (r.online() ? "online" : "offline") << '\n';
        out << "last_contact_time=" << r.last_contact_time << '\n';
        out << "known_friends=" << join_ids(r.known_friends) << '\n';
        out << "capabilities=" << join_ids(r.capabilities) << '\n';
        out << "awaiting_answer=" << (r.awaiting_answer ? 1 : 0) << '\n';
    }
    return out.str();
}

ContactDirectory ContactDirectory::load(std::string_view text) {
    std::vector<std::string_view> lines;
    while (!text.empty()) {
        auto nl = text.find('\n');
        lines.push_back(text.substr(0, nl));
        if (nl == std::string_view::npos) break;
        text.remove_prefix(nl + 1);
    }
    if (lines.empty() || lines[0] != kFileHeader) {
        throw ContactError(ContactError::Code::ParseError, "missing contacts file header");
    }

    ContactDirectory dir;
    std::size_t i = 1;
    while (i < lines.size()) {
        if (!lines[i].empty()) {
            throw ContactError(ContactError::Code::ParseError,
                               "expected blank line before record at line " + std::to_string(i + 1));
        }
        ++i;
        if (i >= lines.size()) break;
        ContactRecord r;
        for (auto field : kFields) {
            if (i >= lines.size()) {
                throw ContactError(ContactError::Code::ParseError, "truncated record");
            }
            auto line = lines[i++];
            auto eq = line.find('=');
            if (eq == std::string_view::npos || line.substr(0, eq) != field) {
                throw ContactError(ContactError::Code::ParseError,
                                   "expected field '" + std::string(field) + "' at line " + std::to_string(i));
            }
            auto value = line.substr(eq + 1);
            try {
                if (field == "name") r.name = value;
                else if (field == "peer_id") r.peer_id = PeerId::from_hex(value);
                else if (field == "address") r.address.value = value;
                else if (field == "address_version") r.address_version = parse_u64(value, field);
                else if (field == "secondary_address") r.secondary_address = value;
                else if (field == "public_key") r.public_key = public_key_from_hex(value);
                else if (field == "online_status") {
                    if (value == "online") r.online_status = OnlineStatus::Online;
                    else if (value == "offline") r.online_status = OnlineStatus::Offline;
                    else throw ContactError(ContactError::Code::ParseError, "invalid online_status");
                } else if (field == "last_contact_time") r.last_contact_time = parse_u64(value, field);
                else if (field == "known_friends") r.known_friends = split_ids<PeerId>(value);
                else if (field == "capabilities") r.capabilities = split_ids<CapabilityId>(value);
                else if (field == "awaiting_answer") {
                    if (value != "0" && value != "1") {
                        throw ContactError(ContactError::Code::ParseError, "invalid awaiting_answer");
                    }
                    r.awaiting_answer = value == "1";
                }
            } catch (const std::invalid_argument& e) {
                throw ContactError(ContactError::Code::ParseError,
                                   std::string(field) + ": " + e.what());
            }
        }
        if (dir.contains(r.peer_id)) {
            throw ContactError(ContactError::Code::ParseError, "duplicate peer_id " + r.peer_id.hex());
        }
        dir.upsert(r);
    }
    return dir;
}

void ContactDirectory::save_file(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << save();
}

ContactDirectory ContactDirectory::load_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return load(buf.str());
}

}  // namespace f2f
