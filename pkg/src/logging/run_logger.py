"""
Run Logger for tracking experiment runs and their per-cell results
Writes JSON lines locally and, when credentials are set, to Supabase
Uses a background thread so that logging never slows the replications
"""

import json
import logging
import threading
import uuid
from datetime import datetime
from pathlib import Path
from queue import Empty, Queue
from typing import Any, Dict, Optional

import numpy as np

from src.config import RUN_LOG_PATH, SUPABASE_KEY, SUPABASE_URL

logger = logging.getLogger(__name__)


class RunLogger:
    """Logs runs and cell results to a JSON-lines file and/or Supabase"""

    def __init__(self, path: Optional[str] = None, supabase_url: Optional[str] = None,
                 supabase_key: Optional[str] = None):
        """
        Initialize the run logger

        Args:
            path: JSON-lines file (defaults to SAR_RUN_LOG)
            supabase_url: Supabase project URL (defaults to env var)
            supabase_key: Supabase API key (defaults to env var)
        """
        path = path or RUN_LOG_PATH
        self.path: Optional[Path] = Path(path) if path else None
        url = supabase_url or SUPABASE_URL
        key = supabase_key or SUPABASE_KEY
        self.supabase = None
        if url and key:
            # imported lazily: the remote sink is optional
            from supabase import create_client
            self.supabase = create_client(url, key)
        if self.path is None and self.supabase is None:
            raise ValueError("RunLogger needs a file path or Supabase credentials")

        self.current_run_id: Optional[uuid.UUID] = None
        self.sequence_number: int = 0
        self.start_time: Optional[datetime] = None

        self._shutdown = False  # must exist before the worker starts
        self._file_lock = threading.Lock()
        self._log_queue: Queue = Queue()
        self._worker_thread = threading.Thread(target=self._log_worker, daemon=True)
        self._worker_thread.start()

    def _log_worker(self):
        """Background worker that drains the log queue"""
        while True:
            try:
                task = self._log_queue.get(timeout=1)
            except Empty:
                if self._shutdown:
                    break
                continue
            try:
                if task is None:
                    break
                task_type, data = task
                self._write_file(task_type, data)
                self._write_remote(task_type, data)
            except Exception as e:
                # the worker must survive sink errors
                logger.warning("RUN LOG: background worker error - %s", e)
            finally:
                self._log_queue.task_done()

    def start_run(self, command: str, settings: Dict[str, Any]) -> uuid.UUID:
        """
        Start tracking a new run

        Args:
            command: CLI command or experiment kind
            settings: Resolved configuration of the run

        Returns:
            UUID of the run
        """
        self.current_run_id = uuid.uuid4()
        self.sequence_number = 0
        self.start_time = datetime.now()
        data = {
            'run_id': str(self.current_run_id),
            'command': command,
            'start_time': self.start_time.isoformat(),
            'status': 'in_progress',
            'settings': self._clean_for_json(settings),
        }
        self._log_queue.put(('start_run', data))
        logger.debug("RUN LOG: queued start of run %s", self.current_run_id)
        return self.current_run_id

    def log_cell(self, record: Dict[str, Any]):
        """Queue one cell result of the active run"""
        if not self.current_run_id:
            logger.warning("RUN LOG: no active run to log a cell to")
            return
        self.sequence_number += 1
        data = {
            'run_id': str(self.current_run_id),
            'timestamp': datetime.now().isoformat(),
            'sequence_number': self.sequence_number,
            'record': self._clean_for_json(record),
        }
        self._log_queue.put(('log_cell', data))

    def end_run(self, status: str = 'completed'):
        """
        End the active run

        Args:
            status: completed, failed or interrupted
        """
        if not self.current_run_id:
            logger.warning("RUN LOG: no active run to end")
            return
        end_time = datetime.now()
        duration = (end_time - self.start_time).total_seconds() if self.start_time else 0.0
        data = {
            'run_id': str(self.current_run_id),
            'end_time': end_time.isoformat(),
            'status': status,
            'duration_seconds': round(duration, 3),
            'cells_logged': self.sequence_number,
        }
        self._log_queue.put(('end_run', data))
        logger.debug("RUN LOG: queued end of run %s (%s)", self.current_run_id, status)
        self.current_run_id = None
        self.sequence_number = 0
        self.start_time = None

    def close(self):
        """Flush pending records and stop the worker"""
        self._log_queue.join()
        self._shutdown = True
        self._log_queue.put(None)
        self._worker_thread.join(timeout=5)

    def _write_file(self, task_type: str, data: Dict[str, Any]):
        if self.path is None:
            return
        line = json.dumps({'event': task_type, **data}, sort_keys=True)
        with self._file_lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, 'a') as f:
                f.write(line + "\n")

    def _write_remote(self, task_type: str, data: Dict[str, Any]):
        if self.supabase is None:
            return
        try:
            if task_type == 'start_run':
                self.supabase.table('runs').insert(data).execute()
            elif task_type == 'log_cell':
                self.supabase.table('cells').insert(data).execute()
            elif task_type == 'end_run':
                payload = dict(data)
                run_id = payload.pop('run_id')
                self.supabase.table('runs').update(payload).eq('run_id', run_id).execute()
        except Exception as e:
            logger.warning("RUN LOG: Supabase write failed for %s - %s", task_type, e)

    def _clean_for_json(self, data: Any) -> Any:
        """Convert numpy values and enums to plain JSON types"""
        if data is None or isinstance(data, (bool, int, float, str)):
            return data
        if isinstance(data, dict):
            return {str(k): self._clean_for_json(v) for k, v in data.items()}
        if isinstance(data, (list, tuple)):
            return [self._clean_for_json(v) for v in data]
        if isinstance(data, np.ndarray):
            return data.tolist()
        if isinstance(data, np.generic):
            return data.item()
        if hasattr(data, 'value'):
            return self._clean_for_json(data.value)
        return str(data)[:100]


# Global instance (optional)
_global_logger: Optional[RunLogger] = None


def get_run_logger() -> Optional[RunLogger]:
    """Get the global run logger instance"""
    return _global_logger


def initialize_run_logger(path: Optional[str] = None, supabase_url: Optional[str] = None,
                          supabase_key: Optional[str] = None) -> RunLogger:
    """Initialize and return the global run logger"""
    global _global_logger
    _global_logger = RunLogger(path, supabase_url, supabase_key)
    return _global_logger
