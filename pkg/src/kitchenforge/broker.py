"""Topic broker: an in-process log and a TCP transport with the same interface.

Each topic is an append-only log; a subscriber replays it from the start and
then follows new messages.  Delivery is per-topic FIFO.

TCP frames are ``<topic-length> <topic> <payload-length>\\n<payload>`` with
lengths in bytes.  Topics starting with ``$`` are control frames:

* ``$publish-ack`` with the message offset, sent after each publish
* ``$subscribe`` whose payload is the topic to follow; the server then
  streams that topic's frames on the connection
"""
from __future__ import annotations

import logging
import socket
import socketserver
import threading
from typing import Iterator, Optional, Protocol

log = logging.getLogger(__name__)

ACK = "$publish-ack"
SUBSCRIBE = "$subscribe"


class BrokerError(RuntimeError):
    pass


def check_topic(topic: str) -> str:
    if not topic or any(ch.isspace() for ch in topic):
        raise ValueError(f"invalid topic {topic!r}")
    return topic


class Broker(Protocol):
    def publish(self, topic: str, payload: bytes) -> int: ...

    def subscribe(self, topic: str, timeout: Optional[float] = None) -> Iterator[bytes]: ...

    def close(self) -> None: ...


class InProcessBroker:
    def __init__(self):
        self._logs: dict[str, list[bytes]] = {}
        self._cond = threading.Condition()
        self._closed = False

    def publish(self, topic: str, payload: bytes) -> int:
        check_topic(topic)
        with self._cond:
            if self._closed:
                raise BrokerError("broker is stopped")
            msgs = self._logs.setdefault(topic, [])
            msgs.append(bytes(payload))
            self._cond.notify_all()
            return len(msgs) - 1

    def subscribe(self, topic: str, timeout: Optional[float] = None) -> Iterator[bytes]:
        """Replay ``topic`` from the start, then follow it.

        Ends when the broker closes, or after ``timeout`` seconds without a
        new message.
        """
        check_topic(topic)
        pos = 0
        while True:
            with self._cond:
                ok = self._cond.wait_for(
                    lambda: self._closed or len(self._logs.get(topic, ())) > pos, timeout)
                msgs = self._logs.get(topic, [])
                if len(msgs) > pos:
                    msg = msgs[pos]
                elif not ok or self._closed:
                    return
            pos += 1
            yield msg

    def messages(self, topic: str) -> list[bytes]:
        with self._cond:
            return list(self._logs.get(topic, ()))

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    @property
    def closed(self) -> bool:
        return self._closed


# ------------------------------------------------------------------ framing

def encode_frame(topic: str, payload: bytes) -> bytes:
    t = topic.encode("utf-8")
    return b"%d %s %d\n" % (len(t), t, len(payload)) + payload


def _read_exact(f, n: int) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise EOFError("connection closed mid-frame")
    return data


def read_frame(f) -> Optional[tuple[str, bytes]]:
    """Read one frame from a binary file object; None on clean EOF."""
    head = b""
    while True:
        ch = f.read(1)
        if not ch:
            if head:
                raise EOFError("connection closed mid-header")
            return None
        if ch == b" ":
            break
        head += ch
        if len(head) > 10:
            raise ValueError("bad frame header")
    tlen = int(head)
    topic = _read_exact(f, tlen).decode("utf-8")
    if _read_exact(f, 1) != b" ":
        raise ValueError("bad frame header")
    size = b""
    while True:
        ch = _read_exact(f, 1)
        if ch == b"\n":
            break
        size += ch
        if len(size) > 12:
            raise ValueError("bad frame header")
    return topic, _read_exact(f, int(size))


def parse_addr(addr: str) -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"broker address must be host:port, got {addr!r}")
    return host, int(port)


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        broker: InProcessBroker = self.server.broker
        try:
            while True:
                frame = read_frame(self.rfile)
                if frame is None:
                    return
                topic, payload = frame
                if topic == SUBSCRIBE:
                    for msg in broker.subscribe(payload.decode("utf-8")):
                        self.wfile.write(encode_frame(payload.decode("utf-8"), msg))
                        self.wfile.flush()
                    return
                offset = broker.publish(topic, payload)
                self.wfile.write(encode_frame(ACK, str(offset).encode()))
                self.wfile.flush()
        except (OSError, EOFError, ValueError, BrokerError) as e:
            log.debug("connection ended: %s", e)


class _Server(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class TcpBrokerServer:
    """Serves an InProcessBroker over TCP in a background thread."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0, broker: Optional[InProcessBroker] = None):
        self.broker = broker or InProcessBroker()
        self._server = _Server((host, port), _Handler)
        self._server.broker = self.broker
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def address(self) -> str:
        host, port = self._server.server_address[:2]
        return f"{host}:{port}"

    def start(self) -> "TcpBrokerServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self.broker.close()
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


class TcpBrokerClient:
    """Broker interface backed by a remote TcpBrokerServer."""

    def __init__(self, addr: str, connect_timeout: float = 5.0):
        self.host, self.port = parse_addr(addr)
        self.connect_timeout = connect_timeout
        self._lock = threading.Lock()
        self._pub = None
        self._closed = False
        self._subs: list[socket.socket] = []

    def _connect(self) -> socket.socket:
        try:
            return socket.create_connection((self.host, self.port), timeout=self.connect_timeout)
        except OSError as e:
            raise BrokerError(f"cannot reach broker at {self.host}:{self.port}: {e}") from None

    def publish(self, topic: str, payload: bytes) -> int:
        check_topic(topic)
        with self._lock:
            if self._closed:
                raise BrokerError("client is closed")
            if self._pub is None:
                sock = self._connect()
                sock.settimeout(None)
                self._pub = (sock, sock.makefile("rb"))
            sock, rfile = self._pub
            try:
                sock.sendall(encode_frame(topic, bytes(payload)))
                reply = read_frame(rfile)
            except (OSError, EOFError) as e:
                self._pub = None
                raise BrokerError(f"publish failed: {e}") from None
            if reply is None or reply[0] != ACK:
                self._pub = None
                raise BrokerError("broker closed the connection")
            return int(reply[1])

    def subscribe(self, topic: str, timeout: Optional[float] = None) -> Iterator[bytes]:
        check_topic(topic)
        sock = self._connect()
        sock.settimeout(timeout)
        self._subs.append(sock)
        sock.sendall(encode_frame(SUBSCRIBE, topic.encode("utf-8")))
        rfile = sock.makefile("rb")
        try:
            while True:
                try:
                    frame = read_frame(rfile)
                except (OSError, EOFError, ValueError):
                    return
                if frame is None:
                    return
                yield frame[1]
        finally:
            rfile.close()
            sock.close()

    def close(self) -> None:
        with self._lock:
            self._closed = True
            if self._pub is not None:
                self._pub[1].close()
                self._pub[0].close()
                self._pub = None
        for s in self._subs:
            try:
                s.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            s.close()
