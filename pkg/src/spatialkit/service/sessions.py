"""In-memory analysis sessions with a strict stage dependency chain.

Stages: dataset -> spec -> scan -> group -> local -> region. Setting any
stage clears everything downstream, so a payload can never mix results from
two different upstream choices. Long computations run as background jobs;
while one is running the session rejects further mutations.
"""

from __future__ import annotations

import itertools
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from ..diagnostics import GroupScan
from ..geodata import SpatialFrame, SubgroupDataset
from ..groups import GroupKey, GroupSeries
from ..models import LocalFit, ModelSpec
from ..regionalize import Regionalization
from ..spillover import ClusterSpillover, SpilloverField
from ..weights import WeightsMatrix

STAGES = ("dataset", "spec", "scan", "group", "local", "region")

__all__ = ["STAGES", "StageError", "BusyError", "Session", "SessionStore"]


class StageError(RuntimeError):
    """A request arrived before its prerequisite stage completed."""

    def __init__(self, missing: str, message: str | None = None):
        self.missing = missing
        super().__init__(message or f"stage {missing!r} required first")


class BusyError(RuntimeError):
    def __init__(self, job_id: str):
        self.job_id = job_id
        super().__init__(f"session is busy with job {job_id}")


@dataclass
class Job:
    job_id: str
    stage: str
    status: str = "running"  # running | done | failed
    error: str | None = None

    def to_json(self) -> dict:
        return {"job_id": self.job_id, "stage": self.stage, "status": self.status, "error": self.error}


@dataclass
class Session:
    session_id: str
    dataset_name: str | None = None
    frame: SpatialFrame | None = None
    frame_aug: SpatialFrame | None = None
    sd: SubgroupDataset | None = None
    behavior: str | None = None
    spec: ModelSpec | None = None
    weights_config: dict = field(default_factory=dict)
    w: WeightsMatrix | None = None
    scan: GroupScan | None = None
    scan_params: dict = field(default_factory=dict)
    group: GroupKey | None = None
    series: GroupSeries | None = None
    local: LocalFit | None = None
    bandwidth: int | None = None
    spill_field: SpilloverField | None = None
    region: Regionalization | None = None
    cluster_spill: ClusterSpillover | None = None
    jobs: dict[str, Job] = field(default_factory=dict)
    active_job: str | None = None
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    _STAGE_FIELDS = {
        "dataset": ("dataset_name", "frame", "sd", "behavior"),
        "spec": ("spec", "w", "weights_config"),
        "scan": ("scan", "scan_params"),
        "group": ("group", "series", "frame_aug"),
        "local": ("local", "bandwidth", "spill_field"),
        "region": ("region", "cluster_spill"),
    }

    def stage_done(self, stage: str) -> bool:
        probe = {
            "dataset": self.frame,
            "spec": self.spec,
            "scan": self.scan,
            "group": self.series,
            "local": self.local,
            "region": self.region,
        }[stage]
        return probe is not None

    def require(self, stage: str) -> None:
        if not self.stage_done(stage):
            raise StageError(stage)

    def clear_downstream(self, stage: str) -> None:
        """Drop results of every stage strictly after ``stage``."""
        idx = STAGES.index(stage)
        for later in STAGES[idx + 1 :]:
            for name in self._STAGE_FIELDS[later]:
                default = {} if name in ("weights_config", "scan_params") else None
                setattr(self, name, default)

    def completed_stages(self) -> list[str]:
        return [s for s in STAGES if self.stage_done(s)]

    def status_json(self) -> dict:
        return {
            "session_id": self.session_id,
            "dataset": self.dataset_name,
            "stages": self.completed_stages(),
            "active_job": self.active_job,
        }


class SessionStore:
    """Thread-safe registry of sessions; one writer per session at a time."""

    def __init__(self, data_root: Path):
        self.data_root = Path(data_root)
        self._sessions: dict[str, Session] = {}
        self._guard = threading.Lock()
        self._counter = itertools.count(1)

    def create(self) -> Session:
        with self._guard:
            sid = f"s{next(self._counter):06d}-{uuid.uuid4().hex[:8]}"
            session = Session(session_id=sid)
            self._sessions[sid] = session
            return session

    def get(self, session_id: str) -> Session:
        session = self._sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        return session

    def submit_job(self, session: Session, stage: str, work, background: bool = True) -> Job:
        """Run ``work()`` under the session lock, inline or on a thread."""
        with session.lock:
            if session.active_job is not None:
                raise BusyError(session.active_job)
            job = Job(job_id=uuid.uuid4().hex[:12], stage=stage)
            session.jobs[job.job_id] = job
            session.active_job = job.job_id

        def runner():
            try:
                work()
                job.status = "done"
            except Exception as exc:  # surfaced via the job status endpoint
                job.status = "failed"
                job.error = str(exc)
            finally:
                with session.lock:
                    session.active_job = None

        if background:
            threading.Thread(target=runner, daemon=True).start()
        else:
            runner()
        return job
