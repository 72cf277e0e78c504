"""Convergence-rate sweeps over N, log-log slope fits and report output."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .counting import spectrum_to_law, tv_integer, w1_integer
from .haar import mc_count_law
from .kernels import Ensemble, KernelSpec
from .opcalc import DEFAULT_GRID, discretize, gauss_legendre, trace_norm

__all__ = [
    "SweepConfig",
    "RateRow",
    "RateReport",
    "SlopeFit",
    "bound_shape",
    "rate_sweep",
    "slope_fit",
    "emit_report",
    "load_config",
    "DEFAULT_N_VALUES",
    "CSV_COLUMNS",
]

DEFAULT_N_VALUES = (16, 32, 64, 128, 256)
CSV_COLUMNS = ("ensemble", "N", "s", "w1", "dtv", "trace_norm", "bound_shape", "ratio")
CHAIN_SLACK = 1e-9


def bound_shape(ensemble: "Ensemble | str", N: int, s: float) -> float:
    """Right-hand side of the rate bound with its unknown constant set to 1.

    Unitary: N^2 max(s^2, s^3) / (N^4 - 16 s^4).  Other ensembles: max(s, s^2) / N.
    Only its dependence on N is meaningful.
    """
    ens = Ensemble.parse(ensemble)
    if ens is Ensemble.SINE:
        raise ValueError("no rate bound for the sine process itself")
    if not 2.0 * s / N < 1.0:
        raise ValueError(f"bulk restriction 2s/N < 1 violated (s={s}, N={N})")
    if ens is Ensemble.U:
        return N**2 * max(s**2, s**3) / (N**4 - 16.0 * s**4)
    return max(s, s**2) / N


@dataclass
class SweepConfig:
    ensemble: Ensemble
    N_values: Tuple[int, ...] = DEFAULT_N_VALUES
    s: float = 1.0
    grid_size: int = DEFAULT_GRID
    seed: int = 0
    mc_samples: int = 0

    def __post_init__(self) -> None:
        self.ensemble = Ensemble.parse(self.ensemble)
        if self.ensemble is Ensemble.SINE:
            raise ValueError("sweep needs a matrix ensemble, not SINE")
        self.N_values = tuple(int(n) for n in self.N_values)
        if not self.N_values:
            raise ValueError("N_values is empty")
        if any(b <= a for a, b in zip(self.N_values, self.N_values[1:])):
            raise ValueError(f"N_values must be strictly increasing, got {self.N_values}")
        if self.s <= 0:
            raise ValueError(f"s must be positive, got {self.s}")
        bad = [n for n in self.N_values if not 2.0 * self.s / n < 1.0]
        if bad:
            raise ValueError(f"bulk restriction 2s/N < 1 fails for N in {bad} (s={self.s})")
        if self.grid_size < 1 or self.mc_samples < 0:
            raise ValueError("grid_size must be >= 1 and mc_samples >= 0")


@dataclass
class RateRow:
    N: int
    w1: float
    dtv: float
    trace_norm: float
    bound_shape: float
    mean: float
    variance: float
    mc_tv: Optional[float] = None
    mc_mean: Optional[float] = None
    mc_mean_se: Optional[float] = None

    @property
    def ratio(self) -> float:
        return self.w1 / self.bound_shape

    @property
    def chain_holds(self) -> bool:
        return self.dtv <= self.w1 and self.w1 <= self.trace_norm + CHAIN_SLACK


class SlopeFit(NamedTuple):
    slope: float
    intercept: float
    r_squared: float


@dataclass
class RateReport:
    ensemble: Ensemble
    s: float
    rows: List[RateRow] = field(default_factory=list)
    fit_w1: Optional[SlopeFit] = None
    fit_tnorm: Optional[SlopeFit] = None

    @property
    def slope_w1(self) -> float:
        return self.fit_w1.slope if self.fit_w1 else math.nan

    @property
    def slope_tnorm(self) -> float:
        return self.fit_tnorm.slope if self.fit_tnorm else math.nan

    def failures(self) -> List[str]:
        """Invariant violations; an empty list means the report is sound."""
        out = []
        for row in self.rows:
            if not row.chain_holds:
                out.append(
                    f"N={row.N}: chain dtv <= w1 <= trace_norm fails "
                    f"({row.dtv:.3e}, {row.w1:.3e}, {row.trace_norm:.3e})"
                )
        if len(self.rows) >= 2 and self.rows[-1].ratio > 2.0 * self.rows[0].ratio:
            out.append(
                f"w1 / bound_shape grows with N: {self.rows[0].ratio:.3e} at N={self.rows[0].N} "
                f"-> {self.rows[-1].ratio:.3e} at N={self.rows[-1].N}"
            )
        return out


def slope_fit(xs: Sequence[float], ys: Sequence[float]) -> SlopeFit:
    """Least-squares line through (log x, log y)."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.size < 3:
        raise ValueError("slope_fit needs at least 3 paired points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("slope_fit needs strictly positive data")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot <= 1e-30 else 1.0 - ss_res / ss_tot
    return SlopeFit(float(slope), float(intercept), r2)


def _one_row(config: SweepConfig, N: int) -> RateRow:
    grid = gauss_legendre(config.grid_size, config.s)
    op = discretize(KernelSpec(config.ensemble, N, "bulk"), grid)
    ref = discretize(KernelSpec(Ensemble.SINE), grid)
    law = spectrum_to_law(op.eigenvalues())
    ref_law = spectrum_to_law(ref.eigenvalues())
    row = RateRow(
        N=N,
        w1=w1_integer(law, ref_law),
        dtv=tv_integer(law, ref_law),
        trace_norm=trace_norm(op - ref),
        bound_shape=bound_shape(config.ensemble, N, config.s),
        mean=law.mean,
        variance=law.variance,
    )
    if config.mc_samples:
        mc = mc_count_law(config.ensemble, N, (-config.s, config.s), config.mc_samples, config.seed + N)
        row.mc_tv = tv_integer(mc.law, law)
        row.mc_mean = mc.mean
        row.mc_mean_se = mc.mean_se
    return row


def rate_sweep(config: SweepConfig) -> RateReport:
    """Measure W1, d_TV and trace norm against the sine process for each N."""
    workers = max(1, int(os.environ.get("BULKRATE_THREADS", "1") or 1))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(lambda n: _one_row(config, n), config.N_values))
    else:
        rows = [_one_row(config, n) for n in config.N_values]
    report = RateReport(config.ensemble, config.s, rows)
    if len(rows) >= 3:
        Ns = [r.N for r in rows]
        if all(r.w1 > 0 for r in rows):
            report.fit_w1 = slope_fit(Ns, [r.w1 for r in rows])
        if all(r.trace_norm > 0 for r in rows):
            report.fit_tnorm = slope_fit(Ns, [r.trace_norm for r in rows])
    return report


# -- output ---------------------------------------------------------------


def _csv(report: RateReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report.rows:
        w.writerow(
            [report.ensemble.value, r.N, repr(report.s), repr(r.w1), repr(r.dtv),
             repr(r.trace_norm), repr(r.bound_shape), repr(r.ratio)]
        )
    return buf.getvalue()


def _json(report: RateReport) -> str:
    def fit(f: Optional[SlopeFit]):
        return None if f is None else f._asdict()

    doc = {
        "ensemble": report.ensemble.value,
        "s": report.s,
        "rows": [dict(asdict(r), ratio=r.ratio) for r in report.rows],
        "fit_w1": fit(report.fit_w1),
        "fit_trace_norm": fit(report.fit_tnorm),
        "failures": report.failures(),
    }
    return json.dumps(doc, indent=2)


_SERIES_STYLE = (("w1", "#1f77b4"), ("dtv", "#2ca02c"), ("trace_norm", "#d62728"))


def _svg(report: RateReport, width: int = 640, height: int = 440) -> str:
    pad_l, pad_r, pad_t, pad_b = 70, 160, 30, 50
    rows = report.rows
    head = f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">\n'
    title = f'<text x="{pad_l}" y="18">{report.ensemble.value}, s={report.s:g}: distance to sine process vs N</text>\n'
    if not rows:
        return head + title + "</svg>\n"
    xs = np.log10([r.N for r in rows])
    ys_all = [np.log10([max(getattr(r, name), 1e-300) for r in rows]) for name, _ in _SERIES_STYLE]
    x0, x1 = float(xs.min()) - 0.1, float(xs.max()) + 0.1
    lo = min(float(y.min()) for y in ys_all)
    hi = max(float(y.max()) for y in ys_all)
    y0, y1 = lo - 0.2, hi + 0.2

    def px(x: float) -> float:
        return pad_l + (x - x0) / (x1 - x0) * (width - pad_l - pad_r)

    def py(y: float) -> float:
        return height - pad_b - (y - y0) / (y1 - y0) * (height - pad_t - pad_b)

    parts = [head, title]
    parts.append(
        f'<rect x="{pad_l}" y="{pad_t}" width="{width - pad_l - pad_r}" '
        f'height="{height - pad_t - pad_b}" fill="none" stroke="#444"/>\n'
    )
    parts.append(f'<text x="{(width - pad_r + pad_l) / 2:.0f}" y="{height - 12}" text-anchor="middle">log10 N</text>\n')
    parts.append(f'<text x="14" y="{(height) / 2:.0f}" transform="rotate(-90 14 {height / 2:.0f})" text-anchor="middle">log10 distance</text>\n')
    for i, ((name, color), ys) in enumerate(zip(_SERIES_STYLE, ys_all)):
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline class="series" data-series="{name}" points="{pts}" fill="none" stroke="{color}"/>\n')
        for x, y in zip(xs, ys):
            parts.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="{color}"/>\n')
        label = name
        if len(rows) >= 3 and np.all(np.isfinite(ys)):
            # log10 and natural-log fits share the slope
            slope, icpt = np.polyfit(xs, ys, 1)
            parts.append(
                f'<line class="fit" x1="{px(x0):.2f}" y1="{py(slope * x0 + icpt):.2f}" '
                f'x2="{px(x1):.2f}" y2="{py(slope * x1 + icpt):.2f}" stroke="{color}" stroke-dasharray="4 3"/>\n'
            )
            label = f"{name}: slope {slope:.3f}"
        parts.append(f'<text x="{width - pad_r + 10}" y="{pad_t + 20 + 18 * i}" fill="{color}">{label}</text>\n')
    parts.append("</svg>\n")
    return "".join(parts)


def emit_report(report: RateReport, fmt: str = "csv", path: Optional[str] = None) -> str:
    """Render the report as csv, json or svg; also write it to ``path`` if given."""
    try:
        render = {"csv": _csv, "json": _json, "svg": _svg}[fmt]
    except KeyError:
        raise ValueError(f"unknown report format {fmt!r}") from None
    text = render(report)
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


# -- config ---------------------------------------------------------------

_CONFIG_KEYS = {f.name for f in fields(SweepConfig)}
_CONFIG_ALIASES = {"n_values": "N_values", "n-list": "N_values", "n_list": "N_values", "grid": "grid_size"}


def load_config(path: str) -> Dict[str, object]:
    """Parse a flat ``key = value`` file into SweepConfig keyword arguments.

    Blank lines and ``#`` comments are ignored; ``N_values`` is comma-separated.
    """
    out: Dict[str, object] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value, got {raw.strip()!r}")
            key, value = (p.strip() for p in line.split("=", 1))
            key = _CONFIG_ALIASES.get(key, key)
            if key not in _CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            if key == "N_values":
                out[key] = tuple(int(v) for v in value.split(",") if v.strip())
            elif key == "s":
                out[key] = float(value)
            elif key == "ensemble":
                out[key] = Ensemble.parse(value)
            else:
                out[key] = int(value)
    return out
