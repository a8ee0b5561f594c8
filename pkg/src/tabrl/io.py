"""Plain-text persistence: Q tables, sample models, curves, summaries, reports."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .envs.model import SampleModel
from .learning import QTable


class FormatError(ValueError):
    pass


def _open_write(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline="")


# Q tables -----------------------------------------------------------------
# "# qtable <n_states> <n_actions> <task>" then one CSV row of repr floats per state


def write_q_table(path, q: QTable, task: str = "-"):
    with _open_write(path) as fh:
        fh.write(f"# qtable {q.n_states} {q.n_actions} {task}\n")
        for row in q.values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_q_table(path) -> tuple[QTable, str]:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or not lines[0].startswith("# qtable "):
        raise FormatError(f"{path}: missing '# qtable' header")
    try:
        _, _, ns, na, task = lines[0].split(maxsplit=4)
        ns, na = int(ns), int(na)
    except ValueError:
        raise FormatError(f"{path}:1: malformed header {lines[0]!r}") from None
    rows = lines[1:]
    if len(rows) != ns:
        raise FormatError(f"{path}: {len(rows)} rows for {ns} states")
    values = np.empty((ns, na))
    for i, ln in enumerate(rows):
        parts = ln.split(",")
        if len(parts) != na:
            raise FormatError(f"{path}:{i + 2}: {len(parts)} values, expected {na}")
        try:
            values[i] = [float(x) for x in parts]
        except ValueError:
            raise FormatError(f"{path}:{i + 2}: non-numeric value") from None
    return QTable(ns, na, values), task


# sample models ----------------------------------------------------------------
# "# <task> <n_states> <n_actions>" then "s,a,s',count,mean_reward" records


def write_sample_model(path, model: SampleModel):
    with _open_write(path) as fh:
        fh.write(f"# {model.task} {model.n_states} {model.n_actions}\n")
        for s, a, sn, n, r in model.records():
            fh.write(f"{s},{a},{sn},{n},{r!r}\n")


def read_sample_model(path) -> SampleModel:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as e:
        raise FormatError(f"{path}: cannot read model: {e.strerror}") from None
    if not lines or not lines[0].startswith("#"):
        raise FormatError(f"{path}: missing '# task n_states n_actions' header")
    try:
        task, ns, na = lines[0][1:].split()
        ns, na = int(ns), int(na)
    except ValueError:
        raise FormatError(f"{path}:1: malformed header {lines[0]!r}") from None
    records = []
    for i, ln in enumerate(lines[1:], 2):
        if not ln.strip():
            continue
        parts = ln.split(",")
        if len(parts) != 5:
            raise FormatError(f"{path}:{i}: expected 5 fields, got {len(parts)}")
        try:
            records.append((int(parts[0]), int(parts[1]), int(parts[2]), int(parts[3]), float(parts[4])))
        except ValueError:
            raise FormatError(f"{path}:{i}: malformed record {ln!r}") from None
    try:
        return SampleModel.from_records(ns, na, records, task)
    except ValueError as e:
        raise FormatError(f"{path}: {e}") from None


# curves, summaries, reports -----------------------------------------------------


def write_curve_csv(path, mean_curve, curves, labels=None):
    """One row per step: step, mean, then one column per repetition."""
    labels = labels or [f"rep{i}" for i in range(len(curves))]
    with _open_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "mean", *labels])
        cols = [np.asarray(c) for c in curves]
        for k, m in enumerate(mean_curve):
            w.writerow([k + 1, repr(float(m)), *(repr(float(c[k])) for c in cols)])


def write_json(path, data):
    with _open_write(path) as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_side_by_side(path, names, mean_curves):
    with _open_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", *names])
        for k, row in enumerate(zip(*mean_curves)):
            w.writerow([k + 1, *(repr(float(v)) for v in row)])


def anova_rows(res):
    return [
        ["between", repr(res.ss_between), res.df_between, repr(res.ms_between), repr(res.f), repr(res.p)],
        ["within", repr(res.ss_within), res.df_within, repr(res.ms_within), "", ""],
        ["total", repr(res.ss_total), res.df_between + res.df_within, "", "", ""],
    ]


def write_compare_csv(path, anova, tukey):
    with _open_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source", "sum_sq", "df", "mean_sq", "F", "p"])
        w.writerows(anova_rows(anova))
        w.writerow([])
        w.writerow(["pair", "Q statistic", "p", "inference"])
        for p in tukey.pairs:
            w.writerow([f"{p.first} vs {p.second}", repr(p.q), repr(p.p), p.inference])


def format_report(anova, tukey) -> str:
    out = ["ANOVA",
           f"{'source':<10}{'sum sq':>12}{'df':>6}{'mean sq':>12}{'F':>10}{'p':>12}"]
    out.append(f"{'between':<10}{anova.ss_between:>12.4f}{anova.df_between:>6}{anova.ms_between:>12.4f}"
               f"{anova.f:>10.3f}{anova.p:>12.3g}")
    out.append(f"{'within':<10}{anova.ss_within:>12.4f}{anova.df_within:>6}{anova.ms_within:>12.4f}")
    out.append(f"{'total':<10}{anova.ss_total:>12.4f}{anova.df_between + anova.df_within:>6}")
    out.append("")
    out.append("Tukey HSD")
    width = max([len("pair")] + [len(f"{p.first} vs {p.second}") for p in tukey.pairs]) + 2
    out.append(f"{'pair':<{width}}{'Q statistic':>12}{'p':>12}  inference")
    for p in tukey.pairs:
        out.append(f"{p.first + ' vs ' + p.second:<{width}}{p.q:>12.4f}{p.p:>12.3g}  {p.inference}")
    return "\n".join(out) + "\n"
