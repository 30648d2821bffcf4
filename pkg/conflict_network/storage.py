"""
Output directory storage: manifests, JSON Lines streams and CSV tables
"""
import logging
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterator, List, Optional

import pandas as pd
import yaml
from pydantic import ValidationError

from conflict_network.config import settings
from conflict_network.config_loader import dump_manifest
from conflict_network.models import RunManifest, RunRecord, Snapshot

logger = logging.getLogger(__name__)


class RunStore:
    """Output directory manager for one run, sweep or analysis"""

    def __init__(self, path: Path):
        self.path = Path(path)

    @property
    def manifest_path(self) -> Path:
        return self.path / settings.MANIFEST_FILE

    # ============= MANIFEST =============

    def read_manifest(self) -> Optional[RunManifest]:
        """Manifest of the directory, or None when there is none"""
        if not self.manifest_path.is_file():
            return None
        document = yaml.safe_load(self.manifest_path.read_text())
        return RunManifest.model_validate(document)

    def prepare(self, manifest: RunManifest) -> RunManifest:
        """
        Claim the directory for `manifest`.

        An existing manifest with the same config digest is reused (re-run or
        resume); any other non-empty directory is refused.

        Returns:
            The manifest now stored in the directory
        """
        self.path.mkdir(parents=True, exist_ok=True)
        existing = self.read_manifest()
        if existing is not None:
            if existing.config_digest != manifest.config_digest:
                raise ValueError(
                    f"{self.path} already holds a different config (digest {existing.config_digest[:12]})"
                )
            logger.info(f"Reusing output directory {self.path}")
            manifest = existing
        elif any(self.path.iterdir()):
            raise ValueError(f"{self.path} is not empty and has no manifest")
        self.write_manifest(manifest)
        return manifest

    def write_manifest(self, manifest: RunManifest) -> None:
        self.manifest_path.write_text(dump_manifest(manifest))

    def finish(self, manifest: RunManifest) -> None:
        """Stamp the manifest with a finish time"""
        self.write_manifest(manifest.model_copy(update={"finished_at": datetime.now(timezone.utc)}))
        logger.info(f"Outputs written to {self.path}")

    # ============= SNAPSHOTS =============

    @contextmanager
    def snapshot_stream(self) -> Iterator[Callable[[Snapshot], None]]:
        """Yield a writer that appends one JSON line per snapshot"""
        path = self.path / settings.SNAPSHOT_FILE
        with path.open("w") as stream:

            def write(snapshot: Snapshot) -> None:
                stream.write(snapshot.model_dump_json())
                stream.write("\n")
                stream.flush()
                logger.debug(f"Snapshot at round {snapshot.round} written")

            yield write

    def iter_snapshots(self) -> Iterator[Snapshot]:
        """Read snapshots back in round order"""
        path = self.path / settings.SNAPSHOT_FILE
        if not path.is_file():
            raise ValueError(f"No snapshot stream in {self.path}")
        with path.open() as stream:
            for line_number, line in enumerate(stream, start=1):
                if not line.strip():
                    continue
                try:
                    yield Snapshot.model_validate_json(line)
                except ValidationError as e:
                    raise ValueError(f"Corrupt snapshot stream at line {line_number}: {e}") from e

    # ============= SWEEP RECORDS =============

    def append_record(self, record: RunRecord) -> None:
        with (self.path / settings.RECORDS_FILE).open("a") as stream:
            stream.write(record.model_dump_json())
            stream.write("\n")

    def read_records(self) -> List[RunRecord]:
        """Records of earlier attempts; a truncated last line is dropped"""
        path = self.path / settings.RECORDS_FILE
        if not path.is_file():
            return []
        records = []
        for line in path.read_text().splitlines():
            if not line.strip():
                continue
            try:
                records.append(RunRecord.model_validate_json(line))
            except ValidationError:
                logger.warning(f"Ignoring unreadable record line in {path}")
        return records

    # ============= TABLES =============

    def write_table(self, frame: pd.DataFrame, name: str) -> Path:
        path = self.path / name
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=settings.FLOAT_FORMAT)
        return path

    def read_table(self, name: str) -> pd.DataFrame:
        return pd.read_csv(self.path / name)
