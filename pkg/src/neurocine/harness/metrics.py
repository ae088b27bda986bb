"""JSON-lines training metrics and fold report tables."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

METRIC_KEYS = ("fold", "epoch", "train_loss", "val_loss", "val_err")


class MetricsLog:
    """Buffers metric records; ``write`` emits them sorted by (fold, epoch)."""

    def __init__(self):
        self.records: list[dict] = []

    def add(self, fold: int, epoch: int, train_loss: float, val_loss: float, val_err: float) -> None:
        self.records.append({"fold": int(fold), "epoch": int(epoch), "train_loss": float(train_loss),
                             "val_loss": float(val_loss), "val_err": float(val_err)})

    def callback(self, fold: int):
        return lambda epoch, tl, vl, ve: self.add(fold, epoch, tl, vl, ve)

    def dumps(self) -> str:
        rows = sorted(self.records, key=lambda r: (r["fold"], r["epoch"]))
        return "".join(json.dumps(r) + "\n" for r in rows)

    def write(self, path) -> None:
        Path(path).write_text(self.dumps())


def read_metrics(path) -> list[dict]:
    out = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            rec = json.loads(line)
            missing = set(METRIC_KEYS) - set(rec)
            if missing:
                raise ValueError(f"metrics record missing {sorted(missing)}")
            out.append(rec)
    return out


def fold_table(reports, label: str = "model") -> str:
    """Per-subject accuracy row, one column per held-out subject."""
    subs = [r.held_out_subject for r in reports]
    head = ["Test Subject"] + [f"S{s + 1}" for s in subs] + ["Mean"]
    accs = [100.0 - r.error_pct for r in reports]
    row = [label] + [f"{a:.1f}" for a in accs] + [f"{np.mean(accs):.1f}" if accs else "-"]
    widths = [max(len(a), len(b)) for a, b in zip(head, row)]
    fmt = lambda cells: "  ".join(c.rjust(w) for c, w in zip(cells, widths))
    return fmt(head) + "\n" + fmt(row) + "\n"
