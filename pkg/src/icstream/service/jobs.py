"""In-process background jobs for long runs.

One daemon thread per job; results are kept in memory until the process
exits. This is deliberately not a durable queue: the service is a single
process and restarting it forfeits unfinished work.
"""

from __future__ import annotations

import threading
import traceback
import uuid
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

QUEUED = "queued"
RUNNING = "running"
DONE = "done"
FAILED = "failed"


@dataclass
class Job:
    id: str
    kind: str
    status: str = QUEUED
    result: Optional[dict] = None
    error: Optional[str] = None
    error_kind: Optional[str] = None
    _done: threading.Event = field(default_factory=threading.Event, repr=False)

    def wait(self, timeout: Optional[float] = None) -> bool:
        return self._done.wait(timeout)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "status": self.status,
            "result": self.result,
            "error": self.error,
            "error_kind": self.error_kind,
        }


class JobStore:
    def __init__(self):
        self._jobs: Dict[str, Job] = {}
        self._lock = threading.Lock()

    def submit(self, kind: str, fn: Callable[[], dict]) -> Job:
        job = Job(id=uuid.uuid4().hex, kind=kind)
        with self._lock:
            self._jobs[job.id] = job

        def target() -> None:
            job.status = RUNNING
            try:
                job.result = fn()
                job.status = DONE
            except Exception as exc:
                job.error = str(exc) or traceback.format_exc(limit=1)
                job.error_kind = type(exc).__name__
                job.status = FAILED
            finally:
                job._done.set()

        thread = threading.Thread(target=target, name=f"job-{job.id[:8]}", daemon=True)
        thread.start()
        return job

    def get(self, job_id: str) -> Optional[Job]:
        with self._lock:
            return self._jobs.get(job_id)
