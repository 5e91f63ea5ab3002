"""
Result files of a run: CSV series with a provenance line, gnuplot scripts and summary.json.
"""
import hashlib
import json
import logging
import os
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

PROVENANCE = "# billiard-lab %(version)s config=%(config_hash)s seed=%(seed)d\n"

LOG_LOG_SCRIPT = """# billiard-lab %(version)s config=%(config_hash)s seed=%(seed)d
set datafile separator ","
set datafile commentschars "#"
set logscale xy
set xlabel "%(x)s"
set ylabel "%(y)s"
set title "%(title)s"
set terminal pngcairo size 800,600
set output "%(png)s"
plot "%(infile)s" using "%(x)s":(abs(column("%(y)s"))) skip 1 with linespoints title "%(y)s"
"""

LINEAR_SCRIPT = """# billiard-lab %(version)s config=%(config_hash)s seed=%(seed)d
set datafile separator ","
set datafile commentschars "#"
set xlabel "%(x)s"
set ylabel "%(y)s"
set title "%(title)s"
set terminal pngcairo size 800,600
set output "%(png)s"
plot "%(infile)s" using "%(x)s":"%(y)s" skip 1 with points pointtype 7 pointsize 0.3 title "%(y)s"
"""


def sha256_of(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def to_json_safe(value: Any) -> Any:
    """
    Converts numpy scalars and arrays, tuples and non-finite floats into plain JSON values.
    """
    if isinstance(value, dict):
        return {str(k): to_json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_json_safe(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


class RunOutput:
    """
    Writes the files of one run into its output directory and keeps the list of outputs.
    """

    def __init__(self, directory: str, version: str, config_hash: str, seed: int, plot: bool = True):
        self.directory = directory
        self.provenance = {"version": version, "config_hash": config_hash, "seed": int(seed)}
        self.plot = plot
        self.files: List[str] = []
        os.makedirs(directory, exist_ok=True)

    def path(self, name: str) -> str:
        return os.path.join(self.directory, name)

    def write_csv(self, name: str, frame: pd.DataFrame) -> str:
        """
        Writes a frame as CSV. The first line is the provenance comment; floats are written
        with 17 significant digits so the files are bit-reproducible.
        """
        path = self.path(name)
        with open(path, "w", encoding="UTF-8", newline="") as f:
            f.write(PROVENANCE % self.provenance)
            frame.to_csv(f, index=False, float_format="%.17g", lineterminator="\n")
        self.files.append(name)
        logger.debug("wrote %s (%d rows)", path, len(frame))
        return path

    def write_gnuplot(self, csv_name: str, x: str, y: str, title: str, log_log: bool = True) -> Optional[str]:
        """
        Writes `<csv stem>.gp`, a gnuplot script plotting column y against column x of the CSV.
        """
        if not self.plot:
            return None
        stem = os.path.splitext(csv_name)[0]
        script = (LOG_LOG_SCRIPT if log_log else LINEAR_SCRIPT) % dict(
            self.provenance, x=x, y=y, title=title, infile=csv_name, png=stem + ".png")
        name = stem + ".gp"
        with open(self.path(name), "w", encoding="UTF-8", newline="") as f:
            f.write(script)
        self.files.append(name)
        return name

    def write_json(self, name: str, content: Dict[str, Any]) -> str:
        path = self.path(name)
        with open(path, "w", encoding="UTF-8") as f:
            json.dump(to_json_safe(content), f, indent=2, sort_keys=True)
        return path

    def write_summary(self, config: Dict[str, Any], results: Dict[str, Any]) -> str:
        """
        summary.json: tool version, config echo and hash, seed, results and the digest of
        every output file.
        """
        summary = dict(self.provenance)
        summary.update({
            "config": config,
            "results": results,
            "outputs": [{"file": name, "sha256": sha256_of(self.path(name))} for name in self.files],
        })
        return self.write_json("summary.json", summary)


def write_error(directory: str, error: Dict[str, Any]) -> str:
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, "error.json")
    with open(path, "w", encoding="UTF-8") as f:
        json.dump(to_json_safe(error), f, indent=2, sort_keys=True)
    return path
