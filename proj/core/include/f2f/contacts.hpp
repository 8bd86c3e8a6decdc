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
#include "f2f/identity.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace f2f {

enum class OnlineStatus { Online, Offline };

/// One friend's directory entry.
struct ContactRecord {
    std::string name;
    PeerId peer_id;
    OverlayAddress address;
    std::uint64_t address_version = 0;
    std::string secondary_address;  // phone number, used by the fallback protocol
    PublicKey public_key{};
    OnlineStatus online_status = OnlineStatus::Online;
    TimeMs last_contact_time = 0;
    std::vector<PeerId> known_friends;
    std::vector<CapabilityId> capabilities;
    bool awaiting_answer = false;

    [[nodiscard]] bool knows(const PeerId& other) const;
    [[nodiscard]] bool offers(const CapabilityId& capability) const;
    [[nodiscard]] bool online() const { return online_status == OnlineStatus::Online; }

    bool operator==(const ContactRecord&) const = default;
};

enum class ApplyResult { Applied, IgnoredStale, UnknownPeer };

const char* to_string(ApplyResult result);

class ContactError : public std::runtime_error {
public:
    enum class Code { UnknownPeer, DuplicatePhone, InvalidRecord, ParseError };

    ContactError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
    [[nodiscard]] Code code() const { return code_; }

private:
    Code code_;
};

/// The local directory of friends.
///
/// Operations are individually atomic with respect to the single event loop
/// that owns the directory; nothing here blocks or waits on the network.
class ContactDirectory {
public:
    static constexpr std::string_view kFileHeader = "f2fnet-contacts v1";

    /// Inserts a new record, or replaces every field of an existing one
    /// except address and address_version. A secondary address already used
    /// by a different peer is rejected.
    void upsert(const ContactRecord& record);

    /// Stores (address, version) iff the peer is known and version is
    /// strictly greater than the stored one; marks the peer Online on success.
    ApplyResult apply_address_update(const PeerId& peer, const OverlayAddress& address,
                                     std::uint64_t version);

    [[nodiscard]] const ContactRecord* find(const PeerId& peer) const;
    [[nodiscard]] const ContactRecord& at(const PeerId& peer) const;
    [[nodiscard]] bool contains(const PeerId& peer) const { return find(peer) != nullptr; }

    [[nodiscard]] std::optional<ContactRecord> lookup_by_phone(std::string_view secondary_address) const;

    /// Intersection of the local clients' capabilities with the friend's, in
    /// the friend's order.
    static std::vector<CapabilityId> match_capability(std::span<const CapabilityId> local_clients,
                                                      const ContactRecord& friend_record);

    /// Online friends that list `target` among their known friends. Throws
    /// ContactError(UnknownPeer) when target is not a friend.
    [[nodiscard]] std::vector<ContactRecord> mutual_friend_candidates(const PeerId& target) const;

    /// last_contact_time only moves when the new status is Online.
    const ContactRecord& set_status(const PeerId& peer, OnlineStatus status, TimeMs contact_time);

    void set_awaiting_answer(const PeerId& peer, bool awaiting);

    [[nodiscard]] std::size_t size() const { return records_.size(); }
    [[nodiscard]] bool empty() const { return records_.empty(); }
    [[nodiscard]] const std::vector<ContactRecord>& records() const { return records_; }

    [[nodiscard]] std::string save() const;
    static ContactDirectory load(std::string_view text);

    void save_file(const std::filesystem::path& path) const;
    static ContactDirectory load_file(const std::filesystem::path& path);

    bool operator==(const ContactDirectory& other) const { return records_ == other.records_; }

private:
    ContactRecord& mutable_at(const PeerId& peer);

    std::vector<ContactRecord> records_;
    std::unordered_map<PeerId, std::size_t> index_;
};

}  // namespace f2f
