"""Client side of the external-predictor wire protocol.

The black box runs as a child process speaking one JSON object per line
over stdin/stdout: a handshake advertising its input dimension, then
id-matched request/response pairs.  Requests are serialized through a lock,
so concurrent callers share one ordered stream; responses are matched to
their own inputs by id.
"""

from __future__ import annotations

import json
import math
import queue
import subprocess
import threading

import numpy as np

from anovadistill.predictor import Predictor, PredictorError

PROTOCOL = "meta-anova-predictor"
PROTOCOL_VERSION = 1


class ExternalPredictor(Predictor):
    """Predictor served by a child process over stdin/stdout JSON lines."""

    def __init__(self, command: list[str], p: int, timeout: float = 60.0,
                 cache: bool = False):
        self._proc = subprocess.Popen(
            list(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self._timeout = timeout
        self._next_id = 0
        self._io_lock = threading.Lock()

        hello = self._read_line()
        if hello is None:
            raise PredictorError("predictor terminated before handshake")
        try:
            hs = json.loads(hello)
        except json.JSONDecodeError:
            raise PredictorError(f"malformed handshake line: {hello!r}") from None
        if hs.get("protocol") != PROTOCOL or hs.get("version") != PROTOCOL_VERSION:
            raise PredictorError(f"handshake mismatch: {hs}")
        if int(hs.get("p", -1)) != int(p):
            raise PredictorError(
                f"dimension mismatch: bridge advertises p={hs.get('p')}, expected p={p}"
            )
        super().__init__(p, cache=cache)

    def _pump(self) -> None:
        try:
            for line in self._proc.stdout:
                self._lines.put(line)
        finally:
            self._lines.put(None)  # EOF sentinel

    def _read_line(self) -> str | None:
        try:
            return self._lines.get(timeout=self._timeout)
        except queue.Empty:
            raise PredictorError(
                f"predictor timed out after {self._timeout}s"
            ) from None

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        with self._io_lock:
            req_id = self._next_id
            self._next_id += 1
            request = json.dumps(
                {"id": req_id, "x": points.tolist()}, allow_nan=False
            )
            try:
                self._proc.stdin.write(request + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, ValueError):
                raise PredictorError("predictor terminated") from None
            line = self._read_line()
        if line is None:
            raise PredictorError("predictor terminated")
        try:
            reply = json.loads(line)
        except json.JSONDecodeError:
            raise PredictorError(f"malformed reply: {line[:200]!r}") from None
        if reply.get("id") != req_id:
            raise PredictorError(
                f"reply id {reply.get('id')} does not match request id {req_id}"
            )
        if "error" in reply:
            raise PredictorError(f"predictor error: {reply['error']}")
        y = reply.get("y")
        if not isinstance(y, list) or len(y) != points.shape[0]:
            raise PredictorError(
                f"reply length {len(y) if isinstance(y, list) else '?'} "
                f"!= request length {points.shape[0]}"
            )
        vals = np.asarray(y, dtype=float)
        if not np.all([isinstance(v, (int, float)) and math.isfinite(v) for v in y]):
            raise PredictorError("protocol violation: non-finite value in reply")
        return vals

    def close(self) -> int:
        """Close stdin and wait for the child; returns its exit code."""
        if self._proc.stdin and not self._proc.stdin.closed:
            try:
                self._proc.stdin.close()
            except BrokenPipeError:
                pass
        return self._proc.wait(timeout=self._timeout)

    def __enter__(self) -> "ExternalPredictor":
        return self

    def __exit__(self, *exc) -> None:
        try:
            self.close()
        except Exception:
            self._proc.kill()


def spawn_external(command: list[str], p: int, timeout: float = 60.0,
                   cache: bool = False) -> ExternalPredictor:
    """Spawn a child predictor and validate its handshake."""
    return ExternalPredictor(command, p, timeout=timeout, cache=cache)
