#!/usr/bin/env python3
"""Regenerates the golden wire vectors in this directory.

The encoder here is written from the byte layout alone and signs with the
`cryptography` package, so it shares no code with the C++ codec.

    python3 tests/vectors/generate.py [outdir]
"""

import pathlib
import struct
import sys

from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

KEY_SEED = bytes(range(0x20, 0x40))
SENDER = bytes.fromhex("0f1e2d3c4b5a69788796a5b4c3d2e1f0")
PEER_B = bytes.fromhex("b0b1b2b3b4b5b6b7b8b9babbbcbdbebf")
CAPABILITY = bytes.fromhex("c0ffee00c0ffee01c0ffee02c0ffee03")
CHANNEL = bytes.fromhex("11223344556677889900aabbccddeeff")
CODE = bytes.fromhex("5eed5eed000102030405060708090a0b")
ADDRESS = "k3v7qz2mwe5hnc4d.ovl"

ACK_STATUS = {"applied": 0, "ignored-stale": 1, "rejected": 2}


def u32(v):
    return struct.pack(">I", v)


def u64(v):
    return struct.pack(">Q", v)


def prefixed(b):
    if isinstance(b, str):
        b = b.encode()
    return u32(len(b)) + b


def frame(kind, body):
    return u32(len(body) + 5) + bytes([kind]) + body


def private_key():
    return Ed25519PrivateKey.from_private_bytes(KEY_SEED)


def public_key_hex():
    raw = private_key().public_key().public_bytes(
        serialization.Encoding.Raw, serialization.PublicFormat.Raw)
    return raw.hex()


def system_body(f):
    kind = f["system_kind"]
    if kind == "announce":
        return b"\x01" + bytes.fromhex(f["origin"]) + prefixed(f["address"]) + u64(int(f["version"]))
    if kind == "query":
        return b"\x02" + bytes.fromhex(f["target"])
    if kind == "reply":
        out = b"\x03" + bytes.fromhex(f["target"])
        if f["known"] == "true":
            return out + b"\x01" + prefixed(f["address"]) + u64(int(f["version"]))
        return out + b"\x00"
    if kind == "ack":
        return b"\x04" + bytes([ACK_STATUS[f["status"]]])
    if kind == "fallback-reply":
        return b"\x05" + prefixed(f["address"]) + u64(int(f["version"])) + bytes.fromhex(f["code"])
    raise ValueError(kind)


def connection_message(f):
    mtype = f["message_type"]
    unsigned = bytes.fromhex(f["sender_id"]) + u32(int(f["random_number"]))
    if mtype == "application":
        unsigned += b"\x01" + bytes.fromhex(f["destination"]) + bytes.fromhex(f["channel_id"])
    elif mtype == "system":
        unsigned += b"\x02" + system_body(f)
    elif mtype == "reconnect":
        unsigned += b"\x03" + bytes.fromhex(f["channel_id"]) + u64(int(f["received_count"]))
    else:
        raise ValueError(mtype)
    sig = private_key().sign(unsigned)
    f["signature"] = sig.hex()
    return frame(0x01, unsigned + prefixed(sig))


def fallback_request(f):
    unsigned = (bytes.fromhex(f["sender_id"]) + prefixed(f["sender_address"]) +
                u64(int(f["sender_version"])) + bytes.fromhex(f["code"]))
    sig = private_key().sign(unsigned)
    f["signature"] = sig.hex()
    return frame(0x03, unsigned + prefixed(sig))


def encode(f):
    kind = f["frame"]
    if kind == "challenge":
        return b"\x5a" + u32(int(f["nonce"]))
    if kind == "verdict":
        return bytes([0x10 if f["accept"] == "true" else 0x11])
    if kind == "connection-message":
        return connection_message(f)
    if kind == "system-reply":
        return frame(0x02, system_body(f))
    if kind == "fallback-request":
        return fallback_request(f)
    if kind == "resume-ack":
        return frame(0x04, bytes.fromhex(f["channel_id"]) + u64(int(f["received_count"])))
    raise ValueError(kind)


def signed(fields):
    return {"key_seed": KEY_SEED.hex(), "public_key": public_key_hex(), **fields}


def conn(fields):
    return signed({"frame": "connection-message", "sender_id": SENDER.hex(), **fields})


VECTORS = [
    ("challenge", "Server challenge: status byte then the nonce.",
     {"frame": "challenge", "nonce": "305419896"}),
    ("verdict_accept", "Accept verdict.", {"frame": "verdict", "accept": "true"}),
    ("verdict_reject", "Reject verdict.", {"frame": "verdict", "accept": "false"}),
    ("conn_application", "Application-layer connection message opening a channel.",
     conn({"random_number": "3735928559", "message_type": "application",
           "destination": CAPABILITY.hex(), "channel_id": CHANNEL.hex()})),
    ("conn_application_no_channel", "Application-layer connection message without a channel.",
     conn({"random_number": "1", "message_type": "application",
           "destination": CAPABILITY.hex(), "channel_id": "00" * 16})),
    ("conn_announce", "Address announcement.",
     conn({"random_number": "2864434397", "message_type": "system", "system_kind": "announce",
           "origin": SENDER.hex(), "address": ADDRESS, "version": "7"})),
    ("conn_query", "Mutual-friend address query.",
     conn({"random_number": "4294967295", "message_type": "system", "system_kind": "query",
           "target": PEER_B.hex()})),
    ("conn_fallback_reply", "Fallback reply carried over an authenticated connection.",
     conn({"random_number": "16909060", "message_type": "system", "system_kind": "fallback-reply",
           "address": ADDRESS, "version": "3", "code": CODE.hex()})),
    ("conn_reconnect", "Channel resume request.",
     conn({"random_number": "0", "message_type": "reconnect", "channel_id": CHANNEL.hex(),
           "received_count": "1048576"})),
    ("reply_known", "Query answer with a known address.",
     {"frame": "system-reply", "system_kind": "reply", "target": PEER_B.hex(), "known": "true",
      "address": ADDRESS, "version": "18446744073709551615"}),
    ("reply_unknown", "Query answer for an unknown target.",
     {"frame": "system-reply", "system_kind": "reply", "target": PEER_B.hex(), "known": "false"}),
    ("ack_ignored_stale", "Announcement acknowledgement.",
     {"frame": "system-reply", "system_kind": "ack", "status": "ignored-stale"}),
    ("fallback_request", "Out-of-band address request.",
     signed({"frame": "fallback-request", "sender_id": SENDER.hex(), "sender_address": ADDRESS,
             "sender_version": "2", "code": CODE.hex()})),
    ("resume_ack", "Acceptor's resume acknowledgement.",
     {"frame": "resume-ack", "channel_id": CHANNEL.hex(), "received_count": "65535"}),
]


def hexdump(data):
    lines = []
    for off in range(0, len(data), 16):
        chunk = data[off:off + 16]
        lines.append(f"{off:04x}  " + " ".join(f"{b:02x}" for b in chunk))
    return "\n".join(lines)


def main():
    outdir = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else pathlib.Path(__file__).parent
    for name, description, fields in VECTORS:
        fields = dict(fields)
        data = encode(fields)
        body = [f"# {description}"]
        body += [f"{k}: {v}" for k, v in fields.items()]
        body += ["--", hexdump(data), ""]
        (outdir / f"{name}.hex").write_text("\n".join(body))


if __name__ == "__main__":
    main()
