"""HTTP/JSON facade over ingestion, partitioning, what-if metrics, and runs.

Sessions are in-memory snapshots: every upload or partition change bumps a
version counter and swaps immutable state, so concurrent what-if reads never
observe a half-updated session. Restarting the server drops all sessions.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field
from typing import Mapping

from fastapi import Body, FastAPI, HTTPException, Query, Response
from fastapi.middleware.cors import CORSMiddleware

from .discrimination import find_dominating, pairwise_scores
from .errors import ConfigError, DatasetError, EmptyInputError, FairthreshError, PartitionError
from .ingest import parse_dataset_text, parse_manifest, parse_optimizer_config, parse_partition_spec, build_partition
from .metrics import ConfusionCounts, Dataset, ScoreIndex, UtilityKind, index_subgroups, utility
from .optimizer import optimize
from .partition import SubgroupPartition
from .reporting import serialize_report

DEFAULT_SESSION_CAP = 64
DEFAULT_MAX_ROWS = 1_000_000


@dataclass
class Session:
    id: str
    dataset: Dataset
    version: int = 1
    partition: SubgroupPartition | None = None
    indexes: Mapping[str, ScoreIndex] | None = None
    chosen_k: int | None = None
    report_bytes: bytes | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


def create_app(
    session_cap: int = DEFAULT_SESSION_CAP, max_rows: int = DEFAULT_MAX_ROWS
) -> FastAPI:
    app = FastAPI(title="fairthresh", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    sessions: dict[str, Session] = {}
    store_lock = threading.Lock()

    def get_session(session_id: str) -> Session:
        try:
            return sessions[session_id]
        except KeyError:
            raise HTTPException(404, f"unknown session {session_id!r}") from None

    @app.post("/sessions", status_code=201)
    def create_session(payload: dict = Body(...)):
        csv_text = payload.get("csv")
        manifest_doc = payload.get("manifest")
        if not isinstance(csv_text, str) or not csv_text.strip():
            raise HTTPException(400, "body must include a non-empty 'csv' string")
        if not isinstance(manifest_doc, dict):
            raise HTTPException(400, "body must include a 'manifest' object")
        try:
            manifest = parse_manifest(manifest_doc)
            dataset = parse_dataset_text(csv_text, manifest, max_rows=max_rows)
        except (DatasetError, EmptyInputError) as err:
            raise HTTPException(400, str(err)) from None
        with store_lock:
            if len(sessions) >= session_cap:
                raise HTTPException(429, f"session cap of {session_cap} reached")
            session_id = uuid.uuid4().hex[:12]
            sessions[session_id] = Session(id=session_id, dataset=dataset)
        return {"session": session_id, "instances": len(dataset)}

    @app.get("/sessions/{session_id}")
    def describe_session(session_id: str):
        session = get_session(session_id)
        return {
            "session": session.id,
            "instances": len(session.dataset),
            "version": session.version,
            "subgroups": session.partition.sizes() if session.partition else None,
            "chosen_k": session.chosen_k,
            "has_report": session.report_bytes is not None,
        }

    @app.post("/sessions/{session_id}/partition")
    def set_partition(session_id: str, payload: dict = Body(...)):
        session = get_session(session_id)
        try:
            spec = parse_partition_spec(payload)
        except ConfigError as err:
            raise HTTPException(422, str(err)) from None
        with session.lock:
            try:
                partition, elbow = build_partition(session.dataset, spec)
                indexes = index_subgroups(session.dataset, partition)
            except (PartitionError, DatasetError) as err:
                raise HTTPException(422, str(err)) from None
            session.partition = partition
            session.indexes = indexes
            session.chosen_k = elbow.chosen_k if elbow else None
            session.report_bytes = None
            session.version += 1
        return {
            "subgroups": partition.sizes(),
            "chosen_k": session.chosen_k,
            "version": session.version,
        }

    @app.get("/sessions/{session_id}/whatif")
    def whatif(
        session_id: str,
        thresholds: str = Query(...),
        utility_kind: str = Query("ppv", alias="utility"),
    ):
        session = get_session(session_id)
        with session.lock:  # snapshot the (partition, indexes, version) triple
            partition, indexes, version = session.partition, session.indexes, session.version
        if partition is None or indexes is None:
            raise HTTPException(409, "no partition set for this session")
        try:
            kind = UtilityKind(utility_kind)
        except ValueError:
            raise HTTPException(422, f"unknown utility {utility_kind!r}") from None
        per_tau = _parse_thresholds(thresholds, partition.subgroup_ids)
        return _whatif_payload(partition, indexes, per_tau, kind, version)

    @app.post("/sessions/{session_id}/optimize")
    def run_optimize(session_id: str, payload: dict = Body(...)):
        session = get_session(session_id)
        with session.lock:
            if session.partition is None:
                raise HTTPException(409, "no partition set for this session")
            try:
                config = parse_optimizer_config(payload)
            except ConfigError as err:
                raise HTTPException(422, str(err)) from None
            try:
                report = optimize(session.dataset, session.partition, config)
                body = serialize_report(report)
            except FairthreshError as err:
                raise HTTPException(422, str(err)) from None
            session.report_bytes = body
        return Response(content=body, media_type="application/json")

    return app


def _parse_thresholds(text: str, subgroup_ids: tuple[str, ...]) -> dict[str, float]:
    """Either one global threshold ("0.5") or one per subgroup ("A:0.5,B:0.6").

    Subgroup ids containing ':' or ',' cannot be addressed in this query form.
    """
    text = text.strip()
    if not text:
        raise HTTPException(422, "thresholds parameter is empty")
    if ":" not in text:
        value = _parse_tau(text)
        return {g: value for g in subgroup_ids}
    per_tau: dict[str, float] = {}
    for pair in text.split(","):
        name, sep, raw = pair.rpartition(":")
        if not sep or not name:
            raise HTTPException(422, f"malformed threshold pair {pair!r}")
        if name not in subgroup_ids:
            raise HTTPException(422, f"unknown subgroup {name!r}")
        per_tau[name] = _parse_tau(raw)
    missing = [g for g in subgroup_ids if g not in per_tau]
    if missing:
        raise HTTPException(422, f"no threshold supplied for subgroups: {missing}")
    return per_tau


def _parse_tau(raw: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise HTTPException(422, f"cannot parse threshold {raw!r}") from None
    if not 0.0 <= value <= 1.0:
        raise HTTPException(422, f"threshold {value} outside [0, 1]")
    return value


def _counts_doc(counts: ConfusionCounts) -> dict:
    return {"tp": counts.tp, "fp": counts.fp, "tn": counts.tn, "fn": counts.fn}


def _whatif_payload(
    partition: SubgroupPartition,
    indexes: Mapping[str, ScoreIndex],
    per_tau: Mapping[str, float],
    kind: UtilityKind,
    version: int,
) -> dict:
    """Metrics at the requested thresholds, computed fresh from counts.

    Undefined utilities come back as null (never coerced to a number); the
    dominant is the defined-utility argmax with ties broken by support then id.
    """
    per_subgroup: dict[str, dict] = {}
    utilities: dict[str, float] = {}
    support: dict[str, int] = {}
    total = ConfusionCounts(0, 0, 0, 0, tau=float("nan"))
    for g in sorted(partition.subgroup_ids):
        counts = indexes[g].counts_at(per_tau[g])
        total = ConfusionCounts(
            tp=total.tp + counts.tp,
            fp=total.fp + counts.fp,
            tn=total.tn + counts.tn,
            fn=total.fn + counts.fn,
            tau=total.tau,
        )
        value = _try_utility(counts, kind)
        if value is not None:
            utilities[g] = value
            support[g] = counts.tp + counts.fp
        per_subgroup[g] = {
            "threshold": per_tau[g],
            "size": indexes[g].size,
            "utility": value,
            "counts": _counts_doc(counts),
        }
    dominant = None
    discrimination: dict[str, float | None] = {}
    if len(utilities) >= 2:
        dominant = find_dominating(utilities, support=support).dominating_subgroup
        scores = pairwise_scores(utilities, per_tau, dominant)
        for g in sorted(partition.subgroup_ids):
            if g == dominant:
                continue
            discrimination[g] = scores[g].value if g in scores else None
    return {
        "version": version,
        "utility": kind.value,
        "per_subgroup": per_subgroup,
        "overall": {"utility": _try_utility(total, kind), "counts": _counts_doc(total)},
        "dominant": dominant,
        "discrimination": discrimination,
    }


def _try_utility(counts: ConfusionCounts, kind: UtilityKind) -> float | None:
    try:
        return utility(counts, kind)
    except FairthreshError:
        return None
