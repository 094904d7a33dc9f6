"""
Line Protocol
One request per line, one response line per request.

  INGEST,x,y,rss1,...,rssN          -> OK,<reference point count>
  LOCATE,<nn|knn|wknn>,k,rss1,...   -> OK,x,y
  TRACKSTART,k,rss1,...,rssN        -> OK,t,x,y   (WKNN fix, t = 0)
  TRACKSTEP,t,heading               -> OK,t,x,y
  SHUTDOWN                          -> OK,BYE
  anything else                     -> ERROR,<message>

Floats are written with repr so the receiving side decodes the exact same double.
"""

import math
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, ValidationError

from ips.errors import ProtocolError
from schemas.positioning_schema import (
    Algorithm, FingerprintRecord, LocateConfig, RequestKind, ResponseStatus, RssVector, StepEvent
)

MAX_LINE_LENGTH = 65536


class Request(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: RequestKind
    record: Optional[FingerprintRecord] = None
    rss: Optional[RssVector] = None
    locate_config: Optional[LocateConfig] = None
    step: Optional[StepEvent] = None

    @property
    def width(self) -> Optional[int]:
        if self.record is not None:
            return len(self.record.ap_rss)
        if self.rss is not None:
            return len(self.rss)
        return None


class Response(BaseModel):
    model_config = ConfigDict(frozen=True)

    status: ResponseStatus
    values: Tuple[float, ...] = ()
    message: str = ""

    @classmethod
    def ok(cls, *values: float) -> "Response":
        return cls(status=ResponseStatus.OK, values=tuple(float(v) for v in values))

    @classmethod
    def error(cls, message: str) -> "Response":
        return cls(status=ResponseStatus.ERROR, message=message)

    @property
    def is_ok(self) -> bool:
        return self.status == ResponseStatus.OK


def _numbers(fields: List[str], what: str) -> List[float]:
    values = []
    for text in fields:
        try:
            value = float(text)
        except ValueError:
            raise ProtocolError(f"{what}: {text.strip()[:32]!r} is not a number")
        if not math.isfinite(value):
            raise ProtocolError(f"{what}: {text.strip()[:32]!r} is not finite")
        values.append(value)
    return values


def _positive_int(text: str) -> int:
    try:
        k = int(text)
    except ValueError:
        raise ProtocolError(f"k must be a positive integer, got {text.strip()[:32]!r}")
    if k < 1:
        raise ProtocolError(f"k must be a positive integer, got {k}")
    return k


def decode_request(line: str) -> Request:
    """
    Parse one request line; raises ProtocolError on anything malformed
    """
    if len(line) > MAX_LINE_LENGTH:
        raise ProtocolError("request line too long")
    text = line.strip()
    if not text:
        raise ProtocolError("empty request")
    fields = text.split(",")
    tag = fields[0].strip().upper()
    args = fields[1:]

    try:
        kind = RequestKind(tag)
    except ValueError:
        raise ProtocolError(f"unknown request kind {tag[:32]!r}")

    try:
        if kind == RequestKind.INGEST:
            if len(args) < 3:
                raise ProtocolError("INGEST needs x, y and at least one RSS value")
            x, y, *rss = _numbers(args, "INGEST")
            return Request(kind=kind, record=FingerprintRecord(x=x, y=y, ap_rss=rss))

        if kind == RequestKind.LOCATE:
            if len(args) < 3:
                raise ProtocolError("LOCATE needs algorithm, k and at least one RSS value")
            try:
                algorithm = Algorithm(args[0].strip().lower())
            except ValueError:
                raise ProtocolError(f"unknown algorithm {args[0].strip()[:32]!r}")
            k = _positive_int(args[1])
            rss = _numbers(args[2:], "LOCATE")
            return Request(kind=kind, rss=tuple(rss), locate_config=LocateConfig(algorithm=algorithm, k=k))

        if kind == RequestKind.TRACK_START:
            if len(args) < 2:
                raise ProtocolError("TRACKSTART needs k and at least one RSS value")
            k = _positive_int(args[0])
            rss = _numbers(args[1:], "TRACKSTART")
            return Request(
                kind=kind, rss=tuple(rss), locate_config=LocateConfig(algorithm=Algorithm.WKNN, k=k)
            )

        if kind == RequestKind.TRACK_STEP:
            if len(args) != 2:
                raise ProtocolError("TRACKSTEP needs exactly t and heading")
            t, heading = _numbers(args, "TRACKSTEP")
            return Request(kind=kind, step=StepEvent(t=t, heading=heading))

        if args and any(a.strip() for a in args):
            raise ProtocolError("SHUTDOWN takes no arguments")
        return Request(kind=kind)
    except ValidationError as e:
        raise ProtocolError(f"invalid {kind.value} payload: {e.errors()[0].get('msg', 'validation failed')}")


def encode_request(request: Request) -> str:
    kind = request.kind
    if kind == RequestKind.INGEST:
        r = request.record
        fields = [repr(r.x), repr(r.y)] + [repr(v) for v in r.ap_rss]
    elif kind == RequestKind.LOCATE:
        c = request.locate_config
        fields = [c.algorithm.value, str(c.k)] + [repr(float(v)) for v in request.rss]
    elif kind == RequestKind.TRACK_START:
        fields = [str(request.locate_config.k)] + [repr(float(v)) for v in request.rss]
    elif kind == RequestKind.TRACK_STEP:
        fields = [repr(request.step.t), repr(request.step.heading)]
    else:
        fields = []
    return ",".join([kind.value] + fields)


def encode_response(response: Response) -> str:
    if response.is_ok:
        if not response.values:
            return "OK,BYE"
        return ",".join(["OK"] + [repr(v) for v in response.values])
    message = " ".join(response.message.split()) or "error"
    return f"ERROR,{message}"


def decode_response(line: str) -> Response:
    text = line.rstrip("\r\n")
    tag, _, rest = text.partition(",")
    if tag == "ERROR":
        return Response.error(rest)
    if tag != "OK":
        raise ProtocolError(f"malformed response {text[:64]!r}")
    if rest == "BYE":
        return Response.ok()
    return Response.ok(*_numbers(rest.split(","), "response"))
