"""TCP session server with a browser bridge.

One listener serves two transports on the same port: the raw line-delimited
JSON protocol, and HTTP-upgraded WebSocket at /ws carrying the same message
lines (one message per text frame). The first bytes of a connection select
the transport.

Concurrency contract: reader threads only enqueue into the session inbox; the
tick loop is the single writer of session state; writers drain per-client
bounded queues (drop-oldest) so a slow client never blocks the tick.
"""

from __future__ import annotations

import base64
import hashlib
import logging
import socket
import struct
import threading
import time
from collections import deque

from . import PROTOCOL_VERSION
from .board import SlideDeck
from .config import EngineConfig
from .errors import GlassboardError, PortInUse
from .protocol import Message, decode, encode, error_msg, hello_msg
from .session import Session, SessionClock

log = logging.getLogger("glassboard.server")

WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
OUTBOX_LIMIT = 64  # snapshots+events buffered per client before drop-oldest


class _Client:
    def __init__(self, sock: socket.socket, addr, mode: str):
        self.sock = sock
        self.addr = addr
        self.mode = mode  # "line" | "ws"
        self.outbox: deque[bytes] = deque(maxlen=OUTBOX_LIMIT)
        self.cond = threading.Condition()
        self.alive = True
        self.expected_seq: int | None = None
        self.clock_offset_us = 0
        self.helloed = False

    def push(self, data: bytes) -> None:
        with self.cond:
            if not self.alive:
                return
            self.outbox.append(data)  # deque maxlen drops the oldest
            self.cond.notify()

    def close(self) -> None:
        with self.cond:
            self.alive = False
            self.cond.notify()
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self.sock.close()
        except OSError:
            pass


# -- minimal RFC 6455 framing ----------------------------------------------------


def ws_accept_value(key: str) -> str:
    digest = hashlib.sha1((key + WS_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def ws_encode_text(payload: bytes) -> bytes:
    n = len(payload)
    header = bytearray([0x81])  # FIN + text
    if n < 126:
        header.append(n)
    elif n < (1 << 16):
        header.append(126)
        header += struct.pack(">H", n)
    else:
        header.append(127)
        header += struct.pack(">Q", n)
    return bytes(header) + payload


class _WsReader:
    """Incremental WebSocket frame parser over a blocking socket."""

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self._buf = b""

    def _read_exact(self, n: int) -> bytes | None:
        while len(self._buf) < n:
            chunk = self.sock.recv(4096)
            if not chunk:
                return None
            self._buf += chunk
        out, self._buf = self._buf[:n], self._buf[n:]
        return out

    def next_message(self) -> bytes | None:
        """Returns the next complete text/binary message payload, handling
        ping/pong and fragmentation; None when the peer closes."""
        fragments: list[bytes] = []
        while True:
            head = self._read_exact(2)
            if head is None:
                return None
            b0, b1 = head
            fin = bool(b0 & 0x80)
            opcode = b0 & 0x0F
            masked = bool(b1 & 0x80)
            length = b1 & 0x7F
            if length == 126:
                ext = self._read_exact(2)
                if ext is None:
                    return None
                length = struct.unpack(">H", ext)[0]
            elif length == 127:
                ext = self._read_exact(8)
                if ext is None:
                    return None
                length = struct.unpack(">Q", ext)[0]
            mask = b""
            if masked:
                mask = self._read_exact(4)
                if mask is None:
                    return None
            payload = self._read_exact(length) if length else b""
            if payload is None:
                return None
            if masked:
                payload = bytes(c ^ mask[i % 4] for i, c in enumerate(payload))
            if opcode == 0x8:  # close
                return None
            if opcode == 0x9:  # ping -> pong
                pong = bytes([0x8A, len(payload)]) + payload
                try:
                    self.sock.sendall(pong)
                except OSError:
                    return None
                continue
            if opcode == 0xA:  # pong
                continue
            fragments.append(payload)
            if fin:
                return b"".join(fragments)


# -- the server -------------------------------------------------------------------


class BoardServer:
    def __init__(self, config: EngineConfig, deck: SlideDeck | None = None,
                 record_path: str | None = None):
        self.config = config
        self.session = Session(config, deck)
        self.clock = SessionClock()
        self.record_path = record_path
        self._listener: socket.socket | None = None
        self._clients: list[_Client] = []
        self._clients_lock = threading.Lock()
        self._running = threading.Event()
        self._accept_thread: threading.Thread | None = None
        self.port: int | None = None

    # -- lifecycle -----------------------------------------------------------------

    def start(self, host: str = "127.0.0.1") -> int:
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            sock.bind((host, self.config.port))
        except OSError as e:
            sock.close()
            raise PortInUse(f"port {self.config.port} unavailable: {e}") from e
        sock.listen(16)
        self._listener = sock
        self.port = sock.getsockname()[1]
        self._running.set()
        self._accept_thread = threading.Thread(
            target=self._accept_loop, name="gb-accept", daemon=True)
        self._accept_thread.start()
        log.info("listening on %s:%d", host, self.port)
        return self.port

    def serve_forever(self) -> None:
        """Run the fixed-rate tick loop until interrupted."""
        period = 1.0 / self.config.tick_rate_hz
        start = time.monotonic()
        k = 0
        try:
            while self._running.is_set():
                k += 1
                target = start + k * period
                delay = target - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
                self.tick_once()
        except KeyboardInterrupt:
            log.info("interrupt: shutting down")
        finally:
            self.shutdown()

    def tick_once(self) -> None:
        result = self.session.tick(self.clock.now_us())
        frames = [encode(ev) for ev in result.events]
        frames.append(encode(result.snapshot))
        self.broadcast(frames)

    def broadcast(self, frames: list[bytes]) -> None:
        with self._clients_lock:
            clients = list(self._clients)
        for client in clients:
            for frame in frames:
                payload = frame if client.mode == "line" else ws_encode_text(frame.rstrip(b"\n"))
                client.push(payload)

    def shutdown(self) -> None:
        if getattr(self, "_shut", False):
            return
        self._shut = True
        self._running.clear()
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass
        with self._clients_lock:
            clients = list(self._clients)
            self._clients.clear()
        for c in clients:
            c.close()
        if self.record_path:
            with open(self.record_path, "wb") as fh:
                fh.writelines(self.session.event_log)
            log.info("event log flushed to %s (%d events)",
                     self.record_path, len(self.session.event_log))

    # -- connection handling ----------------------------------------------------------

    def _accept_loop(self) -> None:
        assert self._listener is not None
        while self._running.is_set():
            try:
                sock, addr = self._listener.accept()
            except OSError:
                return
            threading.Thread(target=self._handle_conn, args=(sock, addr),
                             name=f"gb-conn-{addr[1]}", daemon=True).start()

    def _handle_conn(self, sock: socket.socket, addr) -> None:
        try:
            first = sock.recv(4, socket.MSG_PEEK)
        except OSError:
            sock.close()
            return
        if not first:
            sock.close()
            return
        if first.startswith(b"GET"):
            self._serve_ws(sock, addr)
        else:
            self._serve_line(sock, addr)

    def _register(self, client: _Client) -> None:
        with self._clients_lock:
            self._clients.append(client)
        threading.Thread(target=self._writer_loop, args=(client,),
                         name="gb-writer", daemon=True).start()
        self.session.external_event(
            "client_connected", self.clock.now_us(),
            {"transport": client.mode})

    def _unregister(self, client: _Client) -> None:
        with self._clients_lock:
            if client in self._clients:
                self._clients.remove(client)
        client.close()

    def _writer_loop(self, client: _Client) -> None:
        while True:
            with client.cond:
                while client.alive and not client.outbox:
                    client.cond.wait(timeout=1.0)
                if not client.alive:
                    return
                if not client.outbox:
                    continue
                data = client.outbox.popleft()
            try:
                client.sock.sendall(data)
            except OSError:
                self._unregister(client)
                return

    def _send_now(self, client: _Client, frame: bytes) -> None:
        client.push(frame if client.mode == "line" else ws_encode_text(frame.rstrip(b"\n")))

    def _process_inbound(self, client: _Client, raw: bytes) -> bool:
        """Decode one inbound line; returns False when the connection should
        close (version mismatch)."""
        try:
            msg = decode(raw)
        except GlassboardError as e:
            self._send_now(client, encode(error_msg(
                0, type(e).__name__, str(e))))
            return True
        if client.expected_seq is not None and msg.seq > client.expected_seq:
            self.session.submit(Message("event", msg.seq, {
                "name": "seq_gap", "at_us": self.clock.now_us(),
                "data": {"expected": client.expected_seq, "got": msg.seq}}))
        client.expected_seq = msg.seq + 1

        if msg.type == "hello":
            version = msg.payload.get("version")
            if version != PROTOCOL_VERSION:
                frame = encode(error_msg(
                    0, "version_mismatch",
                    f"server speaks version {PROTOCOL_VERSION}, client sent {version}"))
                try:  # synchronous: the reply must land before we close
                    client.sock.sendall(
                        frame if client.mode == "line" else ws_encode_text(frame.rstrip(b"\n")))
                except OSError:
                    pass
                return False
            device_clock = msg.payload.get("device_clock_us")
            if isinstance(device_clock, int) and not isinstance(device_clock, bool):
                client.clock_offset_us = self.clock.now_us() - device_clock
            client.helloed = True
            self._send_now(client, encode(hello_msg(0, server="glassboard")))
            return True
        if msg.type == "pose_update" and client.clock_offset_us:
            payload = dict(msg.payload)
            payload["timestamp_us"] = payload["timestamp_us"] + client.clock_offset_us
            msg = Message(msg.type, msg.seq, payload)
        self.session.submit(msg)
        return True

    def _serve_line(self, sock: socket.socket, addr) -> None:
        client = _Client(sock, addr, "line")
        self._register(client)
        buf = b""
        try:
            while self._running.is_set():
                chunk = sock.recv(4096)
                if not chunk:
                    break
                buf += chunk
                while b"\n" in buf:
                    line, buf = buf.split(b"\n", 1)
                    if line.strip() and not self._process_inbound(client, line):
                        return self._unregister(client)
        except OSError:
            pass
        finally:
            self._unregister(client)

    def _serve_ws(self, sock: socket.socket, addr) -> None:
        try:
            request = b""
            while b"\r\n\r\n" not in request:
                chunk = sock.recv(4096)
                if not chunk:
                    sock.close()
                    return
                request += chunk
                if len(request) > 65536:
                    sock.close()
                    return
            head, _, rest = request.partition(b"\r\n\r\n")
            lines = head.decode("latin-1").split("\r\n")
            path = lines[0].split(" ")[1] if len(lines[0].split(" ")) > 1 else "/"
            headers = {}
            for line in lines[1:]:
                if ":" in line:
                    k, v = line.split(":", 1)
                    headers[k.strip().lower()] = v.strip()
            key = headers.get("sec-websocket-key")
            if path != "/ws" or headers.get("upgrade", "").lower() != "websocket" or not key:
                sock.sendall(b"HTTP/1.1 400 Bad Request\r\nConnection: close\r\n\r\n")
                sock.close()
                return
            response = (
                "HTTP/1.1 101 Switching Protocols\r\n"
                "Upgrade: websocket\r\n"
                "Connection: Upgrade\r\n"
                f"Sec-WebSocket-Accept: {ws_accept_value(key)}\r\n\r\n"
            )
            sock.sendall(response.encode("latin-1"))
        except OSError:
            sock.close()
            return

        client = _Client(sock, addr, "ws")
        self._register(client)
        reader = _WsReader(sock)
        reader._buf = rest
        try:
            while self._running.is_set():
                payload = reader.next_message()
                if payload is None:
                    break
                for line in payload.split(b"\n"):
                    if line.strip() and not self._process_inbound(client, line):
                        return self._unregister(client)
        except OSError:
            pass
        finally:
            self._unregister(client)
