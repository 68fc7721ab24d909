"""HTTP+JSON service used by annotators during the two-stage study.

Endpoints (all bodies UTF-8 JSON, errors as ``{"error": message}``):

* ``GET /api/tasks/next?annotator=ID&stage=N`` -> task payload or
  ``{"status": "done"}``
* ``POST /api/labels`` with ``{task_id, annotator_id, stage, value}``
* ``GET /api/progress``
* ``GET /api/agreement``
* ``GET /api/veracity_stats``

Task payloads never include the hidden gold origin. When a UI directory
is configured, anything outside ``/api`` is served from it.
"""

from __future__ import annotations

import json
import logging
import mimetypes
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Iterable
from urllib.parse import parse_qs, urlparse

from .store import LabelStore, LabelStoreError
from .study import (
    AnnotationTask,
    agreement_report,
    veracity_change_rate,
)

log = logging.getLogger(__name__)

MAX_BODY_BYTES = 1 << 20


class ServiceState:
    """Task queue plus label store; the single source of truth for the UI."""

    def __init__(
        self,
        tasks: Iterable[AnnotationTask],
        store: LabelStore,
        pair: tuple[str, str] | None = None,
        ui_dir: str | Path | None = None,
    ):
        self.tasks = list(tasks)
        self.store = store
        self.pair = pair
        self.ui_dir = Path(ui_dir).resolve() if ui_dir else None

    def next_task(self, annotator: str, stage: int) -> AnnotationTask | None:
        done = {(lab.task_id, lab.stage)
                for lab in self.store.labels()
                if lab.annotator_id == annotator}
        for task in self.tasks:
            if task.stage == stage and (task.task_id, stage) not in done:
                return task
        return None

    def progress(self) -> dict:
        out = {}
        for stage in (1, 2):
            total = sum(1 for t in self.tasks if t.stage == stage)
            out[f"stage{stage}"] = {
                "total": total,
                "by_annotator": dict(sorted(
                    self.store.annotator_counts(stage).items())),
            }
        return out

    def agreement(self) -> dict:
        return agreement_report(self.store.labels(), pair=self.pair).to_dict()

    def veracity(self) -> dict:
        pos_of = {t.task_id: t.pos_of_manipulation
                  for t in self.tasks if t.stage == 2}
        items = [(pos_of[lab.task_id], lab.value)
                 for lab in self.store.labels()
                 if lab.stage == 2 and lab.task_id in pos_of]
        return veracity_change_rate(items).to_dict()


class _Handler(BaseHTTPRequestHandler):
    # Set by make_server:
    state: ServiceState = None  # type: ignore[assignment]

    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # noqa: N802 (stdlib name)
        log.debug("%s - %s", self.address_string(), fmt % args)

    # -- helpers ------------------------------------------------------

    def _send_json(self, payload: dict, status: int = 200) -> None:
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self._send_cors_headers()
        self.end_headers()
        self.wfile.write(body)

    def _send_cors_headers(self) -> None:
        # The UI is usually served same-origin via --ui-dir, but a UI dev
        # server on another port must be able to reach the API too.
        self.send_header("Access-Control-Allow-Origin", "*")

    def _send_error_json(self, message: str, status: int = 400) -> None:
        self._send_json({"error": message}, status=status)

    # -- routing ------------------------------------------------------

    def do_GET(self) -> None:  # noqa: N802
        url = urlparse(self.path)
        if url.path == "/api/tasks/next":
            query = parse_qs(url.query)
            annotator = (query.get("annotator") or [""])[0]
            stage_raw = (query.get("stage") or [""])[0]
            if not annotator:
                return self._send_error_json("missing annotator parameter")
            if stage_raw not in ("1", "2"):
                return self._send_error_json("stage must be 1 or 2")
            task = self.state.next_task(annotator, int(stage_raw))
            if task is None:
                return self._send_json({"status": "done"})
            return self._send_json(task.public_dict())
        if url.path == "/api/progress":
            return self._send_json(self.state.progress())
        if url.path == "/api/agreement":
            return self._send_json(self.state.agreement())
        if url.path == "/api/veracity_stats":
            return self._send_json(self.state.veracity())
        if url.path.startswith("/api/"):
            return self._send_error_json("not found", status=404)
        return self._serve_static(url.path)

    def do_OPTIONS(self) -> None:  # noqa: N802
        self.send_response(204)
        self._send_cors_headers()
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_POST(self) -> None:  # noqa: N802
        url = urlparse(self.path)
        if url.path != "/api/labels":
            return self._send_error_json("not found", status=404)
        try:
            length = int(self.headers.get("Content-Length", "0"))
        except ValueError:
            return self._send_error_json("bad Content-Length")
        if length <= 0 or length > MAX_BODY_BYTES:
            return self._send_error_json("missing or oversized body")
        try:
            payload = json.loads(self.rfile.read(length).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            return self._send_error_json("body must be UTF-8 JSON")
        if not isinstance(payload, dict):
            return self._send_error_json("body must be a JSON object")
        missing = [k for k in ("task_id", "annotator_id", "stage", "value")
                   if k not in payload]
        if missing:
            return self._send_error_json(
                f"missing fields: {', '.join(missing)}")
        try:
            ack = self.state.store.record_label(
                task_id=payload["task_id"],
                annotator_id=payload["annotator_id"],
                stage=payload["stage"],
                value=payload["value"],
            )
        except LabelStoreError as exc:
            return self._send_error_json(str(exc))
        return self._send_json(ack)

    # -- static UI ----------------------------------------------------

    def _serve_static(self, path: str) -> None:
        root = self.state.ui_dir
        if root is None:
            return self._send_error_json("not found", status=404)
        rel = path.lstrip("/") or "index.html"
        target = (root / rel).resolve()
        if root not in target.parents and target != root:
            return self._send_error_json("not found", status=404)
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            return self._send_error_json("not found", status=404)
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def make_server(state: ServiceState, host: str, port: int) -> ThreadingHTTPServer:
    """Bind a threading HTTP server; caller drives ``serve_forever``."""
    handler = type("BoundHandler", (_Handler,), {"state": state})
    return ThreadingHTTPServer((host, port), handler)
