"""
Localization Server
Business-logic layer: request handlers over the fingerprint store, served on a TCP line protocol
"""

import logging
import socket
import socketserver
import threading
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from ips.errors import EmptyMapError, OrderingError, PositioningError, SessionError, ShapeError
from ips.fingerprint import RadioMap, build_radio_map
from ips.locators.knn_locator import locate
from ips.service.protocol import (
    Request, Response, decode_request, decode_response, encode_request, encode_response
)
from ips.stores.csv_store import CsvFingerprintStore, records_to_fingerprints
from ips.trackers.pdr_tracker import pdr_step
from schemas.positioning_schema import (
    Algorithm, FingerprintRecord, LocateConfig, PdrConfig, Position, RequestKind, StepEvent
)


@dataclass
class TrackerSession:
    """Per-connection dead-reckoning state"""
    position: Position
    t: float = 0.0


@dataclass
class ConnectionContext:
    session: Optional[TrackerSession] = None
    closing: bool = False


class ServerState:
    """
    Shared server state: the store, and the radio map snapshot built from it.
    The snapshot is replaced wholesale on ingest; readers never see a partial map.
    """

    def __init__(
        self,
        store: CsvFingerprintStore,
        locate_config: LocateConfig = LocateConfig(),
        pdr_config: PdrConfig = PdrConfig(),
        grid_spacing: float = 1.0,
    ):
        self.store = store
        self.locate_config = locate_config
        self.pdr_config = pdr_config
        self.grid_spacing = grid_spacing
        self.logger = logging.getLogger("ServerState")
        self.shutdown_requested = threading.Event()
        self._ingest_lock = threading.Lock()
        self._records: List[FingerprintRecord] = store.load() if store.exists() else []
        self.ap_count: Optional[int] = store.ap_count
        self._map: Optional[RadioMap] = self._build(self._records)
        self.logger.info(
            f"Server state ready: {len(self._records)} records, "
            f"{len(self._map) if self._map else 0} reference points"
        )

    def _build(self, records: List[FingerprintRecord]) -> Optional[RadioMap]:
        if not records:
            return None
        return build_radio_map(records_to_fingerprints(records), len(records[0].ap_rss), self.grid_spacing)

    def snapshot(self) -> RadioMap:
        radio_map = self._map
        if radio_map is None:
            raise EmptyMapError("empty map")
        return radio_map

    def check_width(self, width: int) -> None:
        if self.ap_count is not None and width != self.ap_count:
            raise ShapeError(f"payload has {width} RSS values, server map has {self.ap_count} APs")

    def ingest(self, record: FingerprintRecord) -> int:
        """
        Append to the store and swap in a rebuilt map; returns the new point count
        """
        with self._ingest_lock:
            self.check_width(len(record.ap_rss))
            self.store.append([record])
            records = self._records + [record]
            radio_map = self._build(records)
            self._records = records
            self.ap_count = len(record.ap_rss)
            self._map = radio_map
        self.logger.debug(f"Ingested ({record.x}, {record.y}); map has {len(radio_map)} points")
        return len(radio_map)


def handle_request(
    state: ServerState,
    request: Request,
    connection: Optional[ConnectionContext] = None,
) -> Response:
    """
    Execute one request against the server state.
    Library errors propagate; the connection loop turns them into Error responses.
    """
    connection = connection if connection is not None else ConnectionContext()
    kind = request.kind

    if request.width is not None:
        state.check_width(request.width)

    if kind == RequestKind.INGEST:
        return Response.ok(state.ingest(request.record))

    if kind == RequestKind.LOCATE:
        position = locate(state.snapshot(), request.rss, request.locate_config)
        return Response.ok(position.x, position.y)

    if kind == RequestKind.TRACK_START:
        config = request.locate_config or state.locate_config
        fix = locate(
            state.snapshot(),
            request.rss,
            LocateConfig(algorithm=Algorithm.WKNN, k=config.k, epsilon=state.locate_config.epsilon),
        )
        connection.session = TrackerSession(position=fix, t=0.0)
        return Response.ok(0.0, fix.x, fix.y)

    if kind == RequestKind.TRACK_STEP:
        session = connection.session
        if session is None:
            raise SessionError("TRACKSTEP before TRACKSTART")
        step: StepEvent = request.step
        if step.t <= session.t:
            raise OrderingError(f"step time {step.t} does not follow {session.t}")
        session.position = pdr_step(session.position, state.pdr_config.step_length, step.heading)
        session.t = step.t
        return Response.ok(session.t, session.position.x, session.position.y)

    connection.closing = True
    state.shutdown_requested.set()
    return Response.ok()


def respond(state: ServerState, line: str, connection: ConnectionContext) -> Response:
    """
    Decode, handle and always produce exactly one response
    """
    logger = logging.getLogger("LocalizationServer")
    try:
        request = decode_request(line)
        return handle_request(state, request, connection)
    except PositioningError as e:
        logger.error(f"Request failed: {e}")
        return Response.error(str(e))
    except Exception as e:
        logger.error(f"Unexpected failure handling request: {e!r}")
        return Response.error(f"internal error: {e.__class__.__name__}")


class _LineHandler(socketserver.StreamRequestHandler):
    def handle(self):
        server: LocalizationServer = self.server
        connection = ConnectionContext()
        server.logger.info(f"Connection opened: {self.client_address}")
        try:
            while not connection.closing:
                raw = self.rfile.readline(server.max_line_bytes)
                if not raw:
                    break
                line = raw.decode("utf-8", errors="replace")
                if not line.endswith("\n") and len(raw) >= server.max_line_bytes:
                    # drain the rest of an oversized line so it yields a single response
                    while raw and not raw.endswith(b"\n"):
                        raw = self.rfile.readline(server.max_line_bytes)
                    response = Response.error("request line too long")
                else:
                    response = respond(server.state, line, connection)
                self.wfile.write((encode_response(response) + "\n").encode("utf-8"))
                self.wfile.flush()
        except (ConnectionError, OSError) as e:
            server.logger.warning(f"Connection {self.client_address} dropped: {e}")
        finally:
            server.logger.info(f"Connection closed: {self.client_address}")
        if server.state.shutdown_requested.is_set():
            threading.Thread(target=server.shutdown, daemon=True).start()


class LocalizationServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True
    max_line_bytes = 65536

    def __init__(self, address: Tuple[str, int], state: ServerState):
        self.state = state
        self.logger = logging.getLogger("LocalizationServer")
        super().__init__(address, _LineHandler)

    @property
    def port(self) -> int:
        return self.server_address[1]


def start_server(state: ServerState, host: str = "127.0.0.1", port: int = 0) -> Tuple[LocalizationServer, threading.Thread]:
    """
    Serve in a background thread; port 0 picks a free port
    """
    server = LocalizationServer((host, port), state)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    server.logger.info(f"Listening on {host}:{server.port}")
    return server, thread


def serve(state: ServerState, host: str = "127.0.0.1", port: int = 8765) -> None:
    """
    Serve in the foreground until a SHUTDOWN request or Ctrl-C
    """
    with LocalizationServer((host, port), state) as server:
        server.logger.info(f"Listening on {host}:{server.port}")
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            server.logger.info("Interrupted, shutting down")


class LocateClient:
    """
    Blocking client for the line protocol
    """

    def __init__(self, host: str, port: int, timeout: float = 10.0):
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._reader = self._sock.makefile("r", encoding="utf-8", newline="\n")
        self._writer = self._sock.makefile("w", encoding="utf-8", newline="\n")

    def send_line(self, line: str) -> str:
        self._writer.write(line.rstrip("\n") + "\n")
        self._writer.flush()
        reply = self._reader.readline()
        if not reply:
            raise ConnectionError("server closed the connection")
        return reply.rstrip("\n")

    def request(self, request: Request) -> Response:
        return decode_response(self.send_line(encode_request(request)))

    def ingest(self, record: FingerprintRecord) -> Response:
        return self.request(Request(kind=RequestKind.INGEST, record=record))

    def locate(self, rss: Sequence[float], config: LocateConfig = LocateConfig()) -> Response:
        return self.request(Request(kind=RequestKind.LOCATE, rss=tuple(rss), locate_config=config))

    def track_start(self, rss: Sequence[float], k: int = 5) -> Response:
        return self.request(
            Request(kind=RequestKind.TRACK_START, rss=tuple(rss), locate_config=LocateConfig(k=k))
        )

    def track_step(self, t: float, heading: float) -> Response:
        return self.request(Request(kind=RequestKind.TRACK_STEP, step=StepEvent(t=t, heading=heading)))

    def shutdown(self) -> Response:
        return self.request(Request(kind=RequestKind.SHUTDOWN))

    def close(self) -> None:
        for closable in (self._reader, self._writer, self._sock):
            try:
                closable.close()
            except OSError:
                pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
