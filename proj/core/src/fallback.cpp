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

#include "f2f/fallback.hpp"

#include "f2f/node.hpp"

namespace f2f {

const char* to_string(RejectReason reason) {
    switch (reason) {
        case RejectReason::UnknownNumber: return "UnknownNumber";
        case RejectReason::AuthFailure: return "AuthFailure";
        case RejectReason::Duplicate: return "Duplicate";
        case RejectReason::Malformed: return "Malformed";
        case RejectReason::CodeMismatch: return "CodeMismatch";
    }
    return "?";
}

namespace {

RequestResult rejected(RejectReason reason) {
    return RequestResult{RequestResult::Kind::Rejected, reason};
}

std::string short_code(const wire::OneTimeCodeValue& code) {
    return to_hex(ByteView{code}.first(4));
}

}  // namespace

Fallback::Fallback(Node& node) : node_(node) {
    if (!node.phone().empty()) {
        node.messenger().subscribe(node.phone(), [this](const OobMessage& message) { handle_request(message); });
    }
}

bool Fallback::expired(const OneTimeCode& code) const {
    return node_.scheduler().now() - code.issued_at > node_.config().fallback.code_expiry_ms;
}

std::optional<OneTimeCode> Fallback::outstanding(const PeerId& target) const {
    auto it = latest_.find(target);
    if (it == latest_.end() || expired(it->second.code) || !codes_.contains(it->second.code.value)) {
        return std::nullopt;
    }
    return it->second.code;
}

OneTimeCode Fallback::send_request(const ContactRecord& target) {
    if (target.secondary_address.empty()) {
        throw FallbackError(FallbackError::Code::FallbackUnavailable, target.name + " has no phone number");
    }
    if (auto code = outstanding(target.peer_id)) return *code;
    return issue(target);
}

OneTimeCode Fallback::issue(const ContactRecord& target) {
    OneTimeCode code;
    node_.rng().fill(code.value);
    code.issued_to = target.peer_id;
    code.issued_at = node_.scheduler().now();

    wire::FallbackRequest request;
    request.sender_id = node_.identity().id;
    request.sender_address = node_.address();
    request.sender_version = node_.version();
    request.code = code.value;
    auto payload = wire::encode_fallback_request(request, node_.identity().keys.private_key);

    codes_[code.value] = code;
    latest_[target.peer_id] = Outstanding{code, payload};
    node_.contacts().set_awaiting_answer(target.peer_id, true);
    node_.messenger().send(OobMessage{node_.phone(), target.secondary_address, std::move(payload)});
    ++counters_.requests_sent;
    ++counters_.codes_issued;
    node_.log("fallback request -> " + target.name + " code " + short_code(code.value));
    schedule_resend(target.peer_id, code.value);
    return code;
}

void Fallback::schedule_resend(const PeerId& target, const wire::OneTimeCodeValue& code) {
    node_.scheduler().schedule(node_.config().fallback.resend_ms, [this, target, code] {
        auto it = latest_.find(target);
        if (it == latest_.end() || it->second.code.value != code || expired(it->second.code)) return;
        const auto* record = node_.contacts().find(target);
        if (!record || !record->awaiting_answer || record->secondary_address.empty()) return;
        node_.messenger().send(OobMessage{node_.phone(), record->secondary_address, it->second.payload});
        ++counters_.requests_sent;
        node_.log("fallback request -> " + record->name + " resent");
        schedule_resend(target, code);
    });
}

RequestResult Fallback::handle_request(const OobMessage& message) {
    ++counters_.requests_handled;
    wire::FallbackRequest request;
    try {
        request = wire::decode_fallback_request(message.payload);
    } catch (const wire::WireError&) {
        node_.log("fallback request from " + message.from_number + " rejected: Malformed");
        return rejected(RejectReason::Malformed);
    }
    const auto record = node_.contacts().lookup_by_phone(message.from_number);
    if (!record) {
        node_.log("fallback request from " + message.from_number + " rejected: UnknownNumber");
        return rejected(RejectReason::UnknownNumber);
    }
    if (request.sender_id != record->peer_id || !wire::verify_fallback_request(request, record->public_key)) {
        node_.log("fallback request from " + record->name + " rejected: AuthFailure");
        return rejected(RejectReason::AuthFailure);
    }
    const auto peer = record->peer_id;
    if (!seen_.insert({peer, request.code}).second) {
        ++counters_.duplicates;
        node_.log("fallback request from " + record->name + " rejected: Duplicate");
        return rejected(RejectReason::Duplicate);
    }
    ++counters_.requests_accepted;
    const auto update = node_.apply_address(peer, request.sender_address, request.sender_version);
    node_.log("fallback request <- " + record->name + " v" + std::to_string(request.sender_version) + " " +
              to_string(update));
    if (node_.attached()) {
        send_reply(peer, request.code);
        return RequestResult{RequestResult::Kind::RepliedNow, std::nullopt};
    }
    pending_replies_[peer] = request.code;
    ++counters_.replies_queued;
    node_.log("fallback reply -> " + record->name + " queued until reattached");
    return RequestResult{RequestResult::Kind::ReplyQueued, std::nullopt};
}

void Fallback::send_reply(const PeerId& peer, const wire::OneTimeCodeValue& code) {
    pending_replies_.erase(peer);
    wire::FallbackReply reply{node_.address(), node_.version(), code};
    node_.log("fallback reply -> " + node_.name_of(peer) + " v" + std::to_string(node_.version()));
    node_.sysmsg().exchange(peer, reply, node_.config().sysmsg.query_timeout_ms,
                            [this, peer, code](DialOutcome outcome, std::optional<wire::SystemMessageBody> answer) {
        const auto* ack = answer ? std::get_if<wire::AnnounceAck>(&*answer) : nullptr;
        if (outcome == DialOutcome::Accepted && ack) {
            ++counters_.replies_sent;
            node_.log("fallback reply -> " + node_.name_of(peer) +
                      (ack->status == wire::AckStatus::Applied ? " applied" : " refused"));
            return;
        }
        // Keep it for the next attach or the next address we learn for peer.
        if (!pending_replies_.contains(peer)) pending_replies_[peer] = code;
        node_.log("fallback reply -> " + node_.name_of(peer) + " undeliverable, kept");
    });
}

ResponseResult Fallback::handle_response(const PeerId& sender, const wire::FallbackReply& body) {
    auto it = codes_.find(body.code);
    if (it == codes_.end() || it->second.issued_to != sender || expired(it->second)) {
        ++counters_.responses_rejected;
        node_.log("fallback reply <- " + node_.name_of(sender) + " rejected: CodeMismatch");
        return ResponseResult{ResponseResult::Kind::Rejected, RejectReason::CodeMismatch, std::nullopt};
    }
    std::erase_if(codes_, [&](const auto& kv) { return kv.second.issued_to == sender; });
    latest_.erase(sender);
    consumed_.push_back(body.code);
    ++counters_.responses_applied;
    const auto update = node_.apply_address(sender, body.address, body.version);
    node_.contacts().set_awaiting_answer(sender, false);
    node_.sysmsg().record_recovery(
        RecoveryRecord{sender, RecoveryPath::Fallback, std::nullopt, body.version, node_.scheduler().now()});
    node_.log("recovered " + node_.name_of(sender) + " v" + std::to_string(body.version) + " via fallback (" +
              to_string(update) + ")");
    return ResponseResult{ResponseResult::Kind::Applied, std::nullopt, update};
}

void Fallback::on_attached(bool address_changed) {
    if (address_changed) {
        std::vector<ContactRecord> reissue;
        for (const auto& [target, out] : latest_) {
            const auto* record = node_.contacts().find(target);
            if (record && record->awaiting_answer && !record->secondary_address.empty()) reissue.push_back(*record);
        }
        for (const auto& record : reissue) issue(record);
    }
    const auto pending = pending_replies_;
    for (const auto& [peer, code] : pending) send_reply(peer, code);
}

void Fallback::on_peer_address(const PeerId& peer) {
    if (!node_.attached()) return;
    auto it = pending_replies_.find(peer);
    if (it == pending_replies_.end()) return;
    const auto code = it->second;
    send_reply(peer, code);
}

}  // namespace f2f
