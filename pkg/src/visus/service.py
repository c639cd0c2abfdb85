"""Local HTTP/JSON service: corpus browsing, on-demand prediction, WSL
statistics, and append-only expert annotations.

Persistence is a flat JSON-lines annotation log plus an in-memory index;
replaying the log reconstructs the annotation state exactly. GET handlers
are side-effect-free; annotation appends are serialized through a single
writer lock. The corpus and models are immutable while serving.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .cohort import WslLabel, wsl_distribution
from .errors import IndexTooEarly, UnknownPatient
from .features import MIN_WINDOW
from .ingest.corpus import Corpus, canonicalize
from .predict import predict_series

_LABELS = {lbl.value: lbl for lbl in WslLabel}

MIME_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
}


@dataclass
class Annotation:
    annotation_id: int
    timestamp: str
    annotator_id: str
    pseudo_id: str
    eye: str
    index: int
    label: str
    va_decimal: float | None = None
    note: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.annotation_id,
            "timestamp": self.timestamp,
            "annotator": self.annotator_id,
            "patient": self.pseudo_id,
            "eye": self.eye,
            "index": self.index,
            "label": self.label,
            "va_decimal": self.va_decimal,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Annotation":
        return cls(
            annotation_id=d["id"],
            timestamp=d["timestamp"],
            annotator_id=d["annotator"],
            pseudo_id=d["patient"],
            eye=d["eye"],
            index=d["index"],
            label=d["label"],
            va_decimal=d.get("va_decimal"),
            note=d.get("note"),
        )


class AnnotationLog:
    """Append-only JSON-lines store with an in-memory replica."""

    def __init__(self, path: str):
        self.path = path
        self._lock = threading.Lock()
        self.entries: list = []
        if os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        self.entries.append(Annotation.from_dict(json.loads(line)))

    def append(self, annotator_id, pseudo_id, eye, index, label,
               va_decimal=None, note=None, timestamp=None) -> Annotation:
        with self._lock:
            annotation = Annotation(
                annotation_id=len(self.entries) + 1,
                timestamp=timestamp
                or datetime.now(timezone.utc).isoformat(timespec="seconds"),
                annotator_id=annotator_id,
                pseudo_id=pseudo_id,
                eye=eye,
                index=index,
                label=label,
                va_decimal=va_decimal,
                note=note,
            )
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(annotation.to_dict(), sort_keys=True))
                fh.write("\n")
            self.entries.append(annotation)
            return annotation

    def query(self, pseudo_id=None, eye=None) -> list:
        return [
            a
            for a in self.entries
            if (pseudo_id is None or a.pseudo_id == pseudo_id)
            and (eye is None or a.eye == eye)
        ]


@dataclass
class ServiceState:
    corpus: Corpus
    models: dict
    annotations: AnnotationLog
    ui_dir: str | None = None
    patients_by_id: dict = field(init=False)

    def __post_init__(self):
        self.patients_by_id = {p.pseudo_id: p for p in self.corpus.patients}

    # -- API operations ----------------------------------------------------

    def list_patients(self, page: int = 0, size: int = 50) -> dict:
        patients = self.corpus.patients
        start = page * size
        chunk = patients[start : start + size]
        return {
            "total": len(patients),
            "page": page,
            "size": size,
            "models": sorted(self.models),
            "patients": [self._patient_summary(p) for p in chunk],
        }

    @staticmethod
    def _patient_summary(patient) -> dict:
        diseases = set()
        eyes = {}
        for side, eye in sorted(patient.eyes.items()):
            for diag in eye.diagnoses:
                diseases.update(k for k, v in diag.flags.items() if v and diag.explicit.get(k))
            eyes[side] = {
                "examinations": len(eye.va_series),
                "treatments": len(eye.treatments),
                "oct_scans": len(eye.oct_scans),
            }
        return {
            "pseudo_id": patient.pseudo_id,
            "sex": patient.sex,
            "birth_year": patient.birth_year,
            "diseases": sorted(diseases),
            "eyes": eyes,
        }

    def timeline(self, pseudo_id: str, eye_side: str, upto: int | None = None) -> dict:
        patient = self.patients_by_id.get(pseudo_id)
        if patient is None:
            raise UnknownPatient(pseudo_id)
        if eye_side not in patient.eyes:
            raise UnknownPatient(f"{pseudo_id} has no {eye_side} eye data")
        eye = patient.eyes[eye_side]
        points = list(enumerate(eye.va_series.points))
        total = len(points)
        if upto is not None:
            points = points[: upto + 1]
        limit_date = points[-1][1].date if points else None
        return {
            "patient": pseudo_id,
            "eye": eye_side,
            "sex": patient.sex,
            "birth_year": patient.birth_year,
            "total_examinations": total,
            "upto": upto,
            "va": [
                {"index": i, "date": p.date.isoformat(),
                 "decimal": p.va_decimal, "logmar": p.va_logmar}
                for i, p in points
            ],
            "treatments": [
                {"date": t.date.isoformat(), "medication": t.medication, "source": t.source}
                for t in eye.treatments
                if limit_date is None or t.date <= limit_date
            ],
            "diagnoses": [
                {"date": d.date.isoformat(), "text": d.text,
                 "flags": {k: v for k, v in sorted(d.flags.items()) if d.explicit.get(k)}}
                for d in eye.diagnoses
                if limit_date is None or d.date <= limit_date
            ],
            "oct": [
                {
                    "date": s.date.isoformat(),
                    "scan_id": s.scan_id,
                    "biomarkers": {
                        b: {"label": st.label, "provenance": st.provenance,
                            "confidence": st.confidence}
                        for b, st in sorted(s.biomarkers.items())
                    },
                }
                for s in eye.oct_scans
                if limit_date is None or s.date <= limit_date
            ],
        }

    def predict(self, pseudo_id: str, eye_side: str, index: int, model_name: str) -> dict:
        patient = self.patients_by_id.get(pseudo_id)
        if patient is None:
            raise UnknownPatient(pseudo_id)
        if model_name not in self.models:
            raise KeyError(f"unknown model {model_name!r}")
        results = predict_series(self.models[model_name], patient, eye_side)
        for res in results:
            if res.index == index:
                return res.to_dict()
        raise IndexTooEarly(f"no prediction for examination {index}")

    def record_annotation(self, payload: dict) -> Annotation:
        pseudo_id = payload["patient"]
        eye_side = payload["eye"]
        index = int(payload["index"])
        label = payload["label"]
        patient = self.patients_by_id.get(pseudo_id)
        if patient is None:
            raise UnknownPatient(pseudo_id)
        if eye_side not in patient.eyes:
            raise UnknownPatient(f"{pseudo_id} has no {eye_side} eye data")
        if index < MIN_WINDOW:
            raise IndexTooEarly(f"annotations start at examination {MIN_WINDOW}")
        if index >= len(patient.eyes[eye_side].va_series):
            raise IndexTooEarly(f"examination {index} does not exist")
        if label not in _LABELS:
            raise ValueError(f"label must be one of {sorted(_LABELS)}")
        return self.annotations.append(
            annotator_id=payload.get("annotator", "anonymous"),
            pseudo_id=pseudo_id,
            eye=eye_side,
            index=index,
            label=label,
            va_decimal=payload.get("va_decimal"),
            note=payload.get("note"),
        )

    def stats(self, disease=None, comorbidity=None) -> dict:
        dist = wsl_distribution(self.corpus, disease, comorbidity)
        return {
            "disease": disease,
            "comorbidity": comorbidity,
            "buckets": dist.to_dict(),
        }


class _Handler(BaseHTTPRequestHandler):
    state: ServiceState = None  # injected by make_server

    # -- plumbing -----------------------------------------------------------

    def log_message(self, *_args):  # quiet by default
        pass

    def _send_json(self, payload, status: int = 200) -> None:
        body = json.dumps(payload, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error_json(self, status: int, message: str) -> None:
        self._send_json({"error": message}, status=status)

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length", "0"))
        raw = self.rfile.read(length) if length else b"{}"
        return json.loads(raw.decode("utf-8"))

    # -- routing ------------------------------------------------------------

    def do_GET(self):
        url = urlparse(self.path)
        query = {k: v[0] for k, v in parse_qs(url.query).items()}
        parts = [p for p in url.path.split("/") if p]
        try:
            if url.path == "/" or (parts and parts[0] == "ui"):
                self._serve_ui(parts[1:] if parts else [])
            elif parts == ["patients"]:
                self._send_json(
                    self.state.list_patients(
                        page=int(query.get("page", 0)), size=int(query.get("size", 50))
                    )
                )
            elif len(parts) == 3 and parts[0] == "patients" and parts[2] == "timeline":
                upto = int(query["upto"]) if "upto" in query else None
                self._send_json(self.state.timeline(parts[1], query.get("eye", "right"), upto))
            elif parts == ["annotations"]:
                rows = self.state.annotations.query(query.get("patient"), query.get("eye"))
                self._send_json({"annotations": [a.to_dict() for a in rows]})
            elif parts == ["stats", "wsl"]:
                self._send_json(
                    self.state.stats(query.get("disease"), query.get("with"))
                )
            elif parts == ["models"]:
                self._send_json({"models": sorted(self.state.models)})
            else:
                self._send_error_json(404, f"unknown path {url.path}")
        except UnknownPatient as exc:
            self._send_error_json(404, str(exc))
        except (IndexTooEarly, ValueError, KeyError) as exc:
            self._send_error_json(422, str(exc))

    def do_POST(self):
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        try:
            payload = self._read_body()
            if parts == ["predict"]:
                self._send_json(
                    self.state.predict(
                        payload["patient"],
                        payload["eye"],
                        int(payload["index"]),
                        payload.get("model", "mlp_lda"),
                    )
                )
            elif parts == ["annotations"]:
                annotation = self.state.record_annotation(payload)
                self._send_json(annotation.to_dict(), status=201)
            else:
                self._send_error_json(404, f"unknown path {url.path}")
        except UnknownPatient as exc:
            self._send_error_json(404, str(exc))
        except (IndexTooEarly, ValueError, KeyError) as exc:
            self._send_error_json(422, str(exc))

    def _serve_ui(self, parts) -> None:
        if self.state.ui_dir is None:
            self._send_error_json(404, "no UI bundle configured")
            return
        rel = "/".join(parts) or "index.html"
        path = os.path.normpath(os.path.join(self.state.ui_dir, rel))
        if not path.startswith(os.path.abspath(self.state.ui_dir)):
            self._send_error_json(404, "not found")
            return
        if not os.path.isfile(path):
            self._send_error_json(404, f"no such file {rel}")
            return
        ext = os.path.splitext(path)[1]
        with open(path, "rb") as fh:
            body = fh.read()
        self.send_response(200)
        self.send_header("Content-Type", MIME_TYPES.get(ext, "application/octet-stream"))
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def make_server(corpus: Corpus, models: dict, annotations_path: str,
                port: int = 0, ui_dir: str | None = None) -> ThreadingHTTPServer:
    """Build (but do not start) the HTTP server; port 0 picks a free port."""
    canonicalize(corpus)
    state = ServiceState(
        corpus=corpus,
        models=models,
        annotations=AnnotationLog(annotations_path),
        ui_dir=os.path.abspath(ui_dir) if ui_dir else None,
    )
    handler = type("BoundHandler", (_Handler,), {"state": state})
    server = ThreadingHTTPServer(("127.0.0.1", port), handler)
    server.state = state
    return server


def serve(corpus: Corpus, models: dict, annotations_path: str,
          port: int = 8077, ui_dir: str | None = None) -> None:
    """Run the service until interrupted."""
    server = make_server(corpus, models, annotations_path, port, ui_dir)
    host, bound_port = server.server_address
    print(f"serving on http://{host}:{bound_port}/ (ui: {'yes' if ui_dir else 'no'})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
