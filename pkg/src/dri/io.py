"""
File formats.

Datasets are wide CSV, one row per respondent::

    respondent_id[,wave],cons_1,...,cons_C,pref_1,...,pref_P

``pref_k`` holds the rank given to alternative k (1 = most preferred). With a
``wave`` column (values ``pre``/``post``) the file describes a case.

Results are JSON documents carrying a run manifest; every CSV table is a
pure function of such a document, so ``dri report`` reproduces them exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import re
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .core import DriConfig
from .datagen import LIKERT_SCALES, ResponseDataset, is_permutation_rows
from .empirical import CaseData, CaseReport
from .errors import ParseError, UsageError, ValidationError
from .experiments import ScenarioResult, ThresholdCriteria

_CONS = re.compile(r"^cons_(\d+)$")
_PREF = re.compile(r"^pref_(\d+)$")

# values reported in the source study, printed next to simulated ones
STUDY_STANDARD_FLOORS = {30: 0.394, 100: 0.677}
STUDY_MODIFIED_FLOORS = {30: 0.132, 100: -0.094}
STUDY_TABLE1 = {
    0.1: (0.545, 0.429),
    0.2: (1.065, -0.096),
    0.3: (1.521, -0.552),
    0.4: (1.825, -0.855),
}


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------


def _parse_header(header: list[str]) -> tuple[bool, int, int]:
    cols = [h.strip() for h in header]
    if not cols or cols[0] != "respondent_id":
        raise ParseError("first column must be 'respondent_id'", line=1)
    has_wave = len(cols) > 1 and cols[1] == "wave"
    rest = cols[2:] if has_wave else cols[1:]
    n_cons = 0
    while n_cons < len(rest) and _CONS.match(rest[n_cons]):
        n_cons += 1
    prefs = rest[n_cons:]
    if n_cons == 0:
        raise ParseError("no cons_* columns found", line=1)
    if not prefs:
        raise ParseError("no pref_* columns found", line=1)
    for i, name in enumerate(rest[:n_cons], start=1):
        if name != f"cons_{i}":
            raise ParseError(f"expected column 'cons_{i}', found {name!r}", line=1)
    for i, name in enumerate(prefs, start=1):
        if name != f"pref_{i}":
            raise ParseError(f"expected column 'pref_{i}', found {name!r}", line=1)
    return has_wave, n_cons, len(prefs)


def parse_dataset(text: str, likert_max: int | None = None, name: str = "case"):
    """Parse CSV text into a :class:`ResponseDataset` or :class:`CaseData`."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise ParseError("file is empty", line=1)
    has_wave, n_cons, n_pref = _parse_header(header)
    width = len(header)
    ids, waves, lines, values = [], [], [], []
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != width:
            raise ParseError(f"expected {width} fields, found {len(row)}", line=line)
        ids.append(row[0].strip())
        lines.append(line)
        offset = 1
        if has_wave:
            waves.append(row[1].strip().lower())
            offset = 2
        try:
            values.append([int(c.strip()) for c in row[offset:]])
        except ValueError:
            raise ParseError("rating and ranking cells must be integers", line=line) from None
    if not values:
        raise ParseError("no data rows", line=2)
    arr = np.array(values, dtype=np.int64)
    ratings, rankings = arr[:, :n_cons], arr[:, n_cons:]

    perm_ok = is_permutation_rows(rankings)
    if not perm_ok.all():
        i = int(np.flatnonzero(~perm_ok)[0])
        raise ValidationError(
            f"respondent {ids[i]!r} (line {lines[i]}): ranking {rankings[i].tolist()} is not a permutation of 1..{n_pref}"
        )
    if likert_max is None:
        likert_max = 5 if ratings.max() <= 5 else 7
    if likert_max not in LIKERT_SCALES:
        raise UsageError(f"likert_max must be one of {LIKERT_SCALES}, got {likert_max}")
    bad = np.argwhere((ratings < 1) | (ratings > likert_max))
    if bad.size:
        i, c = (int(v) for v in bad[0])
        raise ValidationError(
            f"respondent {ids[i]!r} (line {lines[i]}): rating {ratings[i, c]} for cons_{c + 1} "
            f"outside [1, {likert_max}]"
        )

    if not has_wave:
        return ResponseDataset(ratings, rankings, likert_max)
    unknown = sorted(set(waves) - {"pre", "post"})
    if unknown:
        raise ValidationError(f"wave column holds {unknown}; expected 'pre' and 'post'")
    mask = np.array([w == "pre" for w in waves])
    if mask.all() or not mask.any():
        raise ValidationError("a case file needs both 'pre' and 'post' rows")
    return CaseData(
        name,
        ResponseDataset(ratings[mask], rankings[mask], likert_max),
        ResponseDataset(ratings[~mask], rankings[~mask], likert_max),
    )


def load_dataset(path, likert_max: int | None = None, name: str | None = None):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8-sig")
    except FileNotFoundError:
        raise UsageError(f"input file not found: {path}") from None
    return parse_dataset(text, likert_max, name or path.stem)


def dataset_to_csv(data) -> str:
    """Inverse of :func:`parse_dataset`."""
    if isinstance(data, CaseData):
        waves = [("pre", data.pre), ("post", data.post)]
        C, P = data.pre.n_considerations, data.pre.n_preferences
    else:
        waves = [(None, data)]
        C, P = data.n_considerations, data.n_preferences
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = ["respondent_id"] + (["wave"] if waves[0][0] else [])
    w.writerow(head + [f"cons_{i}" for i in range(1, C + 1)] + [f"pref_{i}" for i in range(1, P + 1)])
    rid = 0
    for wave, ds in waves:
        for i in range(ds.n):
            rid += 1
            lead = [str(rid)] + ([wave] if wave else [])
            w.writerow(lead + ds.ratings[i].tolist() + ds.rankings[i].tolist())
    return buf.getvalue()


def save_dataset(data, path) -> None:
    Path(path).write_text(dataset_to_csv(data), encoding="utf-8")


# ---------------------------------------------------------------------------
# Manifest and JSON documents
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunManifest:
    command: str
    config: DriConfig
    master_seed: int | None
    artifact_version: str = __version__
    timestamp: str | None = None

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config.to_dict(),
            "master_seed": self.master_seed,
            "artifact_version": self.artifact_version,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        return cls(d["command"], DriConfig.from_dict(d["config"]), d["master_seed"], d["artifact_version"], d["timestamp"])


def run_timestamp(stamp: bool) -> str | None:
    """UTC timestamp for a manifest, or None to keep output reproducible.

    ``SOURCE_DATE_EPOCH`` pins the clock when set.
    """
    if not stamp:
        return None
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return when.strftime("%Y-%m-%dT%H:%M:%SZ")


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(doc: dict, path) -> None:
    Path(path).write_text(dumps(doc), encoding="utf-8")


def read_json(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"input file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(doc, dict) or "kind" not in doc or "manifest" not in doc:
        raise ValidationError("not a result document (missing 'kind' or 'manifest')")
    return doc


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------


def fmt(x, places: int = 6) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "Yes" if x else "No"
    if isinstance(x, float):
        out = f"{x:.{places}f}"
        # avoid "-0.000000"
        return out[1:] if out.startswith("-") and float(out) == 0 else out
    return str(x)


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def render_text(header: Sequence[str], rows: Sequence[Sequence], places: int = 3) -> str:
    cells = [list(header)] + [[fmt(v, places) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


SCENARIO_HEADER = ("formula", "adjustment_mode", "tau", "n", "C", "P", "likert_max", "noise", "mean_dri", "sd_dri", "reps", "n_undefined")


def scenario_rows(results: Sequence[ScenarioResult]) -> list[tuple]:
    return [
        (r.formula, r.adjustment_mode or "", r.tau, r.design.n, r.design.C, r.design.P,
         r.design.likert_max, r.design.noise, r.mean_dri, r.sd_dri, r.reps, r.n_undefined)
        for r in results
    ]


FIGURE1_HEADER = ("formula", "group_size", "noise", "mean_dri", "sd_dri", "reps")


def figure1_rows(results: Sequence[ScenarioResult], adjustment_mode: str = "floor-referenced") -> list[tuple]:
    """Design-averaged index per (formula, group size, noise).

    ``sd_dri`` pools every replication of the cell across designs.
    """
    cells: dict[tuple, list[ScenarioResult]] = defaultdict(list)
    for r in results:
        if r.formula == "modified" and r.adjustment_mode != adjustment_mode:
            continue
        cells[(r.formula, r.design.n, r.design.noise)].append(r)
    sizes = sorted({r.design.n for r in results})
    noises = sorted({r.design.noise for r in results})
    missing = [
        f"{f}/n={n}/noise={nz:g}"
        for f in ("modified", "standard")
        for n in sizes
        for nz in noises
        if (f, n, nz) not in cells
    ]
    if missing:
        raise ValidationError("missing Figure 1 cells: " + ", ".join(missing))
    rows = []
    for key in sorted(cells):
        group = cells[key]
        reps = [g.reps for g in group]
        total = sum(reps)
        grand = math.fsum(g.mean_dri * g.reps for g in group) / total
        ss = math.fsum((g.reps - 1) * g.sd_dri**2 + g.reps * (g.mean_dri - grand) ** 2 for g in group)
        sd = math.sqrt(ss / (total - 1)) if total > 1 else 0.0
        rows.append((key[0], key[1], key[2], grand, sd, total))
    return rows


def emit_figure1_data(results: Sequence[ScenarioResult], adjustment_mode: str = "floor-referenced") -> str:
    return _csv(FIGURE1_HEADER, figure1_rows(results, adjustment_mode))


CRITERIA_HEADER = ("tau", "discrimination", "noise_floor", "fidelity_gap", "floor_near_zero", "monotone")


def criteria_rows(criteria: Sequence[ThresholdCriteria]) -> list[tuple]:
    return [(c.tau, c.discrimination, c.noise_floor, c.fidelity_gap, c.floor_near_zero, c.monotone) for c in criteria]


CASE_HEADER = (
    "case", "N", "pre_standard", "post_standard", "delta_standard", "sig_standard",
    "pre_modified", "post_modified", "delta_modified", "sig_modified",
    "delta_indexes_pre", "delta_indexes_post",
)


def case_rows(reports: Sequence[CaseReport]) -> list[tuple]:
    return [
        (r.name, r.n, r.dri_pre_standard, r.dri_post_standard, r.delta_standard, r.significance_standard,
         r.dri_pre_modified, r.dri_post_modified, r.delta_modified, r.significance_modified,
         r.delta_indexes_pre, r.delta_indexes_post)
        for r in reports
    ]


WAVE_HEADER = ("method", "value", "mean_adjusted_distance", "n_pairs_total", "n_pairs_valid", "n_pairs_penalized", "mean_penalty")


def wave_rows(doc: dict) -> list[tuple]:
    rows = []
    for method in ("standard", "modified"):
        d = doc["results"][method]
        rows.append((method, d["value"], d["mean_adjusted_distance"], d["n_pairs_total"],
                     d["n_pairs_valid"], d["n_pairs_penalized"], d["mean_penalty"]))
    return rows


def document_tables(doc: dict) -> dict[str, tuple[tuple, list[tuple]]]:
    """Every table derivable from a result document, keyed by table name."""
    kind = doc.get("kind")
    if kind == "component_a":
        results = [ScenarioResult.from_dict(r) for r in doc["results"]]
        mode = doc["manifest"]["config"]["adjustment_mode"]
        tables = {"scenarios": (SCENARIO_HEADER, scenario_rows(results))}
        try:
            tables["figure1"] = (FIGURE1_HEADER, figure1_rows(results, mode))
        except ValidationError:
            pass
        return tables
    if kind == "component_b":
        criteria = [ThresholdCriteria.from_dict(c) for c in doc["criteria"]]
        results = [ScenarioResult.from_dict(r) for r in doc["scenarios"]]
        return {
            "criteria": (CRITERIA_HEADER, criteria_rows(criteria)),
            "scenarios": (SCENARIO_HEADER, scenario_rows(results)),
        }
    if kind == "case":
        return {"cases": (CASE_HEADER, case_rows([CaseReport.from_dict(doc["report"])]))}
    if kind == "wave":
        return {"wave": (WAVE_HEADER, wave_rows(doc))}
    raise ValidationError(f"unknown document kind {kind!r}")


def table_csv(doc: dict, name: str) -> str:
    tables = document_tables(doc)
    if name not in tables:
        raise UsageError(f"document of kind {doc.get('kind')!r} has no table {name!r}; available: {sorted(tables)}")
    header, rows = tables[name]
    return _csv(header, rows)
