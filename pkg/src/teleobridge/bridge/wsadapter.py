"""Minimal WebSocket (RFC 6455) framing over an accepted socket.

The bridge listens on one port and sniffs the first bytes of each
connection: plain line-protocol clients send a digit, browsers send an
HTTP upgrade request.  This module implements just enough of the
protocol for that second case — server handshake, masked client frames,
ping/pong and the close exchange.  Payloads are opaque bytes; the bridge
feeds them to the same line parser either way.
"""

from __future__ import annotations

import base64
import hashlib
import os
import socket
import struct

from ..errors import ProtocolError

#: Fixed GUID appended to the client key when computing the accept token.
_ACCEPT_GUID = b"258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
_MAX_HEADER_BYTES = 8192
_MAX_PAYLOAD_BYTES = 1 << 20

OP_CONTINUATION = 0x0
OP_TEXT = 0x1
OP_BINARY = 0x2
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA


def accept_token(key: str) -> str:
    digest = hashlib.sha1(key.strip().encode("ascii") + _ACCEPT_GUID).digest()
    return base64.b64encode(digest).decode("ascii")


def _read_until_blank_line(sock: socket.socket, prefix: bytes) -> bytes:
    data = prefix
    while b"\r\n\r\n" not in data:
        if len(data) > _MAX_HEADER_BYTES:
            raise ProtocolError("handshake header too large")
        chunk = sock.recv(4096)
        if not chunk:
            raise ProtocolError("connection closed during handshake")
        data += chunk
    return data


def server_handshake(sock: socket.socket, prefix: bytes = b"") -> None:
    """Read the HTTP upgrade request and reply 101, or raise ProtocolError."""
    request = _read_until_blank_line(sock, prefix)
    head = request.split(b"\r\n\r\n", 1)[0].decode("latin-1")
    lines = head.split("\r\n")
    if not lines or not lines[0].startswith("GET "):
        raise ProtocolError("not a websocket upgrade request")
    headers = {}
    for line in lines[1:]:
        if ":" in line:
            name, value = line.split(":", 1)
            headers[name.strip().lower()] = value.strip()
    if "websocket" not in headers.get("upgrade", "").lower():
        raise ProtocolError("missing websocket upgrade header")
    key = headers.get("sec-websocket-key")
    if not key:
        raise ProtocolError("missing sec-websocket-key header")
    response = (
        "HTTP/1.1 101 Switching Protocols\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Accept: {accept_token(key)}\r\n"
        "\r\n"
    )
    sock.sendall(response.encode("ascii"))


def _recv_exact(sock: socket.socket, count: int) -> bytes:
    data = b""
    while len(data) < count:
        chunk = sock.recv(count - len(data))
        if not chunk:
            raise ConnectionError("connection closed mid-frame")
        data += chunk
    return data


def _encode_frame(opcode: int, payload: bytes, mask: bool) -> bytes:
    header = bytearray([0x80 | opcode])
    mask_bit = 0x80 if mask else 0x00
    length = len(payload)
    if length < 126:
        header.append(mask_bit | length)
    elif length < 1 << 16:
        header.append(mask_bit | 126)
        header += struct.pack(">H", length)
    else:
        header.append(mask_bit | 127)
        header += struct.pack(">Q", length)
    if mask:
        key = os.urandom(4)
        header += key
        payload = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
    return bytes(header) + payload


class WebSocketConnection:
    """Framed messages over an already-upgraded socket.

    ``is_client`` controls masking: clients must mask what they send,
    servers must not.  ``recv_payload`` returns one complete message or
    None once the peer has closed.
    """

    def __init__(self, sock: socket.socket, is_client: bool = False):
        self.sock = sock
        self._is_client = is_client
        self._closed = False

    def send_payload(self, payload: bytes, opcode: int = OP_TEXT) -> None:
        if self._closed:
            raise ConnectionError("websocket already closed")
        self.sock.sendall(_encode_frame(opcode, payload, self._is_client))

    def close(self, code: int = 1000) -> None:
        if not self._closed:
            try:
                self.send_payload(struct.pack(">H", code), OP_CLOSE)
            except OSError:
                pass
            self._closed = True

    def _read_frame(self) -> tuple[int, bool, bytes]:
        first, second = _recv_exact(self.sock, 2)
        if first & 0x70:
            raise ProtocolError("reserved websocket bits set")
        fin = bool(first & 0x80)
        opcode = first & 0x0F
        masked = bool(second & 0x80)
        length = second & 0x7F
        if length == 126:
            (length,) = struct.unpack(">H", _recv_exact(self.sock, 2))
        elif length == 127:
            (length,) = struct.unpack(">Q", _recv_exact(self.sock, 8))
        if length > _MAX_PAYLOAD_BYTES:
            raise ProtocolError("websocket payload too large")
        if masked == self._is_client:
            # clients must mask, servers must not (RFC 6455 §5.1)
            raise ProtocolError("wrong masking direction")
        key = _recv_exact(self.sock, 4) if masked else None
        payload = _recv_exact(self.sock, length) if length else b""
        if key:
            payload = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
        return opcode, fin, payload

    def recv_payload(self) -> bytes | None:
        """Return the next data message, handling control frames inline."""
        message = b""
        expecting_continuation = False
        while True:
            try:
                opcode, fin, payload = self._read_frame()
            except ConnectionError:
                self._closed = True
                return None
            if opcode == OP_CLOSE:
                self.close()
                return None
            if opcode == OP_PING:
                self.send_payload(payload, OP_PONG)
                continue
            if opcode == OP_PONG:
                continue
            if opcode in (OP_TEXT, OP_BINARY):
                if expecting_continuation:
                    raise ProtocolError("new message inside a fragmented one")
                message = payload
                if fin:
                    return message
                expecting_continuation = True
            elif opcode == OP_CONTINUATION:
                if not expecting_continuation:
                    raise ProtocolError("continuation without a message")
                message += payload
                if fin:
                    return message
            else:
                raise ProtocolError(f"unsupported websocket opcode {opcode}")


def client_handshake(sock: socket.socket, host: str, path: str = "/") -> None:
    """Issue an upgrade request and verify the accept token (for tools/tests)."""
    key = base64.b64encode(os.urandom(16)).decode("ascii")
    request = (
        f"GET {path} HTTP/1.1\r\n"
        f"Host: {host}\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Key: {key}\r\n"
        "Sec-WebSocket-Version: 13\r\n"
        "\r\n"
    )
    sock.sendall(request.encode("ascii"))
    response = _read_until_blank_line(sock, b"")
    status = response.split(b"\r\n", 1)[0]
    if b"101" not in status:
        raise ProtocolError(f"upgrade refused: {status.decode('latin-1')}")
    for line in response.split(b"\r\n"):
        if line.lower().startswith(b"sec-websocket-accept:"):
            got = line.split(b":", 1)[1].strip().decode("ascii")
            if got != accept_token(key):
                raise ProtocolError("bad accept token")
            return
    raise ProtocolError("missing accept token")
