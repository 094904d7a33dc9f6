import math
import random
import socket

import pytest

from ips.errors import EmptyMapError, ProtocolError, SessionError, ShapeError
from ips.locators import locate
from ips.service.protocol import (
    Request, Response, decode_request, decode_response, encode_request, encode_response
)
from ips.service.server import (
    ConnectionContext, LocateClient, ServerState, handle_request, respond, start_server
)
from ips.stores.csv_store import CsvFingerprintStore
from schemas.positioning_schema import (
    Algorithm, FingerprintRecord, LocateConfig, PdrConfig, RequestKind, StepEvent
)

TABLE_ORIGIN = (-46.0, -41.0, -55.0, -68.0, -67.0)
SQUARE = [0.0, math.pi / 2, math.pi, 3 * math.pi / 2]
NN = LocateConfig(algorithm=Algorithm.NN, k=1)


@pytest.fixture
def state(tmp_path):
    return ServerState(CsvFingerprintStore(tmp_path / "db.csv"), pdr_config=PdrConfig(step_length=1.0))


@pytest.fixture
def loaded_state(state, field_records):
    for r in field_records:
        state.ingest(r)
    return state


@pytest.fixture
def running(loaded_state):
    server, thread = start_server(loaded_state)
    yield server
    server.shutdown()
    server.server_close()
    thread.join(timeout=5)


def client_for(server):
    return LocateClient("127.0.0.1", server.port)


class TestProtocol:
    def test_decode_locate(self):
        request = decode_request("LOCATE,knn,3,-40,-50.5\n")
        assert request.kind == RequestKind.LOCATE
        assert request.locate_config == LocateConfig(algorithm=Algorithm.KNN, k=3)
        assert request.rss == (-40.0, -50.5)

    def test_decode_ingest(self):
        request = decode_request("INGEST,1,2,-40,-50")
        assert request.record == FingerprintRecord(x=1.0, y=2.0, ap_rss=(-40.0, -50.0))

    def test_decode_track_step_wraps_heading(self):
        request = decode_request("TRACKSTEP,1.5,-1.5707963267948966")
        assert request.step.heading == pytest.approx(3 * math.pi / 2)

    def test_encode_then_decode(self):
        request = Request(kind=RequestKind.LOCATE, rss=(-40.1, -52.3), locate_config=NN)
        assert decode_request(encode_request(request)) == request

    @pytest.mark.parametrize("line", [
        "", "   ", "HELLO", "LOCATE,nn,1", "LOCATE,best,1,-40", "LOCATE,nn,0,-40", "LOCATE,nn,two,-40",
        "INGEST,1,2", "INGEST,1,nan,-40", "INGEST,1,2,loud", "TRACKSTART,3", "TRACKSTEP,1",
        "TRACKSTEP,1,2,3", "TRACKSTEP,inf,0", "SHUTDOWN,now",
    ])
    def test_malformed(self, line):
        with pytest.raises(ProtocolError):
            decode_request(line)

    def test_response_encoding(self):
        assert encode_response(Response.ok(0.5, 2.0)) == "OK,0.5,2.0"
        assert encode_response(Response.ok()) == "OK,BYE"
        assert encode_response(Response.error("bad\nthing  here")) == "ERROR,bad thing here"

    def test_response_decoding_is_exact(self):
        value = 1 / 3
        assert decode_response(encode_response(Response.ok(value))).values == (value,)


class TestHandleRequest:
    def test_locate_on_empty_map(self, state):
        with pytest.raises(EmptyMapError):
            handle_request(state, Request(kind=RequestKind.LOCATE, rss=TABLE_ORIGIN, locate_config=NN))
        assert encode_response(respond(state, "LOCATE,nn,1,-46,-41,-55,-68,-67", ConnectionContext())) == \
            "ERROR,empty map"

    def test_ingest_then_locate(self, state, field_records):
        for r in field_records:
            response = handle_request(state, Request(kind=RequestKind.INGEST, record=r))
            assert response.is_ok
        assert response.values == (9.0,)
        assert state.store.count() == 15
        located = handle_request(state, Request(kind=RequestKind.LOCATE, rss=TABLE_ORIGIN, locate_config=NN))
        assert located.values == (0.0, 0.0)

    def test_closed_square(self, loaded_state):
        connection = ConnectionContext()
        start = handle_request(
            loaded_state,
            Request(kind=RequestKind.TRACK_START, rss=TABLE_ORIGIN, locate_config=LocateConfig(k=1)),
            connection,
        )
        assert start.values == (0.0, 0.0, 0.0)
        for i, heading in enumerate(SQUARE):
            response = handle_request(
                loaded_state, Request(kind=RequestKind.TRACK_STEP, step=StepEvent(t=i + 1.0, heading=heading)), connection
            )
        t, x, y = response.values
        assert t == 4.0
        assert x == pytest.approx(0.0, abs=1e-9)
        assert y == pytest.approx(0.0, abs=1e-9)

    def test_step_before_start(self, loaded_state):
        with pytest.raises(SessionError):
            handle_request(loaded_state, Request(kind=RequestKind.TRACK_STEP, step=StepEvent(t=1.0, heading=0.0)))

    def test_width_mismatch(self, loaded_state):
        with pytest.raises(ShapeError):
            handle_request(loaded_state, Request(kind=RequestKind.LOCATE, rss=(-40.0,), locate_config=NN))
        with pytest.raises(ShapeError):
            loaded_state.ingest(FingerprintRecord(x=0.0, y=0.0, ap_rss=(-40.0, -50.0)))

    def test_state_reloads_existing_store(self, loaded_state):
        reopened = ServerState(CsvFingerprintStore(loaded_state.store.location))
        assert len(reopened.snapshot()) == 9
        assert reopened.ap_count == 5

    def test_shutdown_marks_connection(self, state):
        connection = ConnectionContext()
        assert handle_request(state, Request(kind=RequestKind.SHUTDOWN), connection) == Response.ok()
        assert connection.closing
        assert state.shutdown_requested.is_set()


class TestServer:
    def test_wire_locate_equals_library(self, running, loaded_state):
        queries = [TABLE_ORIGIN, (-50.0, -45.0, -60.0, -60.0, -70.0), (-38.3, -29.9, -45.1, -60.2, -70.7)]
        with client_for(running) as client:
            for query in queries:
                for config in (NN, LocateConfig(algorithm=Algorithm.KNN, k=3), LocateConfig(k=5)):
                    expected = locate(loaded_state.snapshot(), query, config)
                    assert client.locate(query, config).values == (expected.x, expected.y)

    def test_ingest_is_visible_to_other_connections(self, running):
        unique = (-10.0, -11.0, -12.0, -13.0, -14.0)
        with client_for(running) as writer, client_for(running) as reader:
            assert writer.ingest(FingerprintRecord(x=10.0, y=10.0, ap_rss=unique)).values == (10.0,)
            assert reader.locate(unique, NN).values == (10.0, 10.0)

    def test_track_over_the_wire(self, running):
        with client_for(running) as client:
            assert client.track_start(TABLE_ORIGIN, k=1).values == (0.0, 0.0, 0.0)
            for i, heading in enumerate(SQUARE):
                response = client.track_step(i + 1.0, heading)
            assert response.values[1] == pytest.approx(0.0, abs=1e-9)
            assert response.values[2] == pytest.approx(0.0, abs=1e-9)

    def test_sessions_are_per_connection(self, running):
        with client_for(running) as first, client_for(running) as second:
            first.track_start(TABLE_ORIGIN, k=1)
            response = second.track_step(1.0, 0.0)
            assert not response.is_ok
            assert "TRACKSTART" in response.message

    def test_malformed_input_never_crashes(self, running):
        rng = random.Random(1234)
        templates = [
            "LOCATE,nn,1,-40", "LOCATE,wknn,0,-40,-41,-42,-43,-44", "LOCATE,best,1,-40,-41,-42,-43,-44",
            "INGEST,1,2", "INGEST,nan,1,-40,-41,-42,-43,-44", "INGEST,1,2,-40", "TRACKSTEP,1,0",
            "TRACKSTEP,a,b", "TRACKSTART,0,-40", "SHUTDOWN,please", "LOCATE", ",,,", "OK,1,2",
        ]
        alphabet = [bytes([b]) for b in range(256) if b != 0x0A]
        with socket.create_connection(("127.0.0.1", running.port), timeout=10) as sock:
            reader = sock.makefile("rb")
            for i in range(10_000):
                if i % 2:
                    line = rng.choice(templates).encode()
                else:
                    line = b"".join(rng.choice(alphabet) for _ in range(rng.randint(0, 80)))
                sock.sendall(line + b"\n")
                reply = reader.readline()
                assert reply.startswith(b"ERROR,"), (line, reply)
                assert reply.endswith(b"\n")
        with client_for(running) as client:
            assert client.locate(TABLE_ORIGIN, NN).values == (0.0, 0.0)

    def test_oversized_line_gets_one_error(self, running):
        with client_for(running) as client:
            assert client.send_line("LOCATE,nn,1," + "-40," * 40_000).startswith("ERROR,")
            assert client.locate(TABLE_ORIGIN, NN).is_ok

    def test_shutdown_request_stops_the_server(self, loaded_state):
        server, thread = start_server(loaded_state)
        with client_for(server) as client:
            assert client.send_line("SHUTDOWN") == "OK,BYE"
        thread.join(timeout=5)
        assert not thread.is_alive()
        server.server_close()
