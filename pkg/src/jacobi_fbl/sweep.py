"""Grid sweeps over dimensions and SNR, with CSV/JSON output.

A sweep configuration is an INI document::

    [dims]
    n_rx = 4
    n_tx = 6
    n_avail = 12, 14, 16
    beta = 2, 6, 10          ; or: blocklen = 12, 36, 60

    [snr]
    snr_db = 5
    normalized = false       ; true: sigma^2 = (M/n) * 10^(-snr_db/10)

    [rate]
    rate = 0.37              ; or: fraction = 0.9 (multiples of C̄)

    [mc]                     ; optional
    n_trials = 10000
    master_seed = 1

    [outputs]
    quantities = cbar, xi_plus, upper, outage
"""
from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from ._seeding import derive_seed
from .bounds import (
    dispersion_components,
    error_probability_bounds,
    gallager_comparison,
)
from .errors import ConfigError, DimensionError, JacobiFBLError, SweepFailure
from .montecarlo import empirical_cdf, run_clt_campaign
from .spectral import (
    ChannelDims,
    capacity_approx,
    make_dims,
    normalized_noise_power,
    snr_db_to_noise_power,
)

QUANTITIES = (
    "cbar", "v1", "v2", "v3", "xi_minus", "xi_plus", "lower", "upper",
    "outage", "empirical_cdf", "empirical_pe", "gallager",
)
MC_QUANTITIES = frozenset({"empirical_cdf", "empirical_pe"})
CSV_HEADER = ("N", "M", "n", "L", "snr_db", "rate", "quantity", "value", "std_err", "error")
MAX_FAILED_FRACTION = 0.10


@dataclass(frozen=True)
class McSettings:
    n_trials: int
    master_seed: int


@dataclass(frozen=True)
class SweepConfig:
    dims_grid: tuple[ChannelDims, ...]
    snr_grid_db: tuple[float, ...]
    outputs: tuple[str, ...]
    rate: float | None = None
    rate_fraction: float | None = None
    normalized_snr: bool = False
    mc: McSettings | None = None
    name: str = "custom"

    def __post_init__(self):
        if not self.dims_grid or not self.snr_grid_db or not self.outputs:
            raise ConfigError("dims, snr and outputs grids must be non-empty")
        unknown = [q for q in self.outputs if q not in QUANTITIES]
        if unknown:
            raise ConfigError(f"unknown quantities {unknown}; allowed: {', '.join(QUANTITIES)}")
        if (self.rate is None) == (self.rate_fraction is None):
            raise ConfigError("give exactly one of rate or rate fraction")
        if MC_QUANTITIES.intersection(self.outputs) and self.mc is None:
            raise ConfigError("Monte-Carlo outputs requested without an [mc] section")

    def with_seed(self, seed: int) -> "SweepConfig":
        mc = None if self.mc is None else McSettings(self.mc.n_trials, seed)
        return SweepConfig(
            self.dims_grid, self.snr_grid_db, self.outputs, self.rate, self.rate_fraction,
            self.normalized_snr, mc, self.name,
        )

    def canonical(self) -> dict:
        return {
            "name": self.name,
            "dims": [[d.n_rx, d.n_tx, d.n_avail, d.blocklen] for d in self.dims_grid],
            "snr_db": list(self.snr_grid_db),
            "normalized_snr": self.normalized_snr,
            "rate": self.rate,
            "rate_fraction": self.rate_fraction,
            "mc": None if self.mc is None else asdict(self.mc),
            "outputs": list(self.outputs),
        }

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class Cell:
    value: float | None
    std_err: float | None = None
    error: str = ""


@dataclass(frozen=True)
class SweepRow:
    dims: ChannelDims
    snr_db: float
    rate: float | None
    cells: dict[str, Cell] = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return any(c.error for c in self.cells.values())


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    provenance: dict


# ---------------------------------------------------------------- presets


def _fig2() -> SweepConfig:
    m = 6
    dims = tuple(
        make_dims(4, m, n, int(round(beta * m))) for n in (12, 14, 16) for beta in range(2, 23)
    )
    return SweepConfig(
        dims_grid=dims,
        snr_grid_db=(5.0,),
        outputs=("cbar", "xi_minus", "xi_plus", "lower", "upper", "outage"),
        rate=0.37,
        name="fig2",
    )


def _fig3() -> SweepConfig:
    dims = tuple(make_dims(16, 8, n, 36) for n in (32, 64, 128))
    return SweepConfig(
        dims_grid=dims,
        snr_grid_db=tuple(0.5 * k for k in range(1, 11)),
        outputs=("cbar", "xi_minus", "xi_plus", "lower", "upper", "outage"),
        rate=1.0,
        normalized_snr=True,
        name="fig3",
    )


PRESETS = {"fig2": _fig2, "fig3": _fig3}


def preset(name: str) -> SweepConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


# ---------------------------------------------------------------- parsing


def _line_of(text: str, section: str, key: str | None = None) -> int | None:
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            if key is None and current == section:
                return lineno
        elif current == section and key is not None:
            name = line.split("=", 1)[0].split(":", 1)[0].strip().lower()
            if name == key:
                return lineno
    return None


def _fail(text: str, section: str, key: str | None, msg: str):
    lineno = _line_of(text, section, key)
    where = f"[{section}]" + (f" {key}" if key else "")
    prefix = f"line {lineno}: " if lineno else ""
    raise ConfigError(f"{prefix}{where}: {msg}")


def _get(cp, text, section, key, conv, default=None, required=True):
    if not cp.has_option(section, key):
        if required:
            _fail(text, section, key, "missing")
        return default
    raw = cp.get(section, key)
    try:
        return conv(raw)
    except (ValueError, TypeError) as exc:
        _fail(text, section, key, f"cannot parse {raw!r} ({exc})")


def _list_of(conv):
    def parse(raw: str):
        items = [s.strip() for s in raw.replace("\n", ",").split(",") if s.strip()]
        if not items:
            raise ValueError("empty list")
        return [conv(s) for s in items]
    return parse


def _integer(raw: str) -> int:
    value = float(raw)
    if value != int(value):
        raise ValueError("not an integer")
    return int(value)


def _boolean(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError("not a boolean")


def parse_config(text: str) -> SweepConfig:
    """Parse an INI sweep description, or return a preset when ``text`` names one."""
    if text.strip() in PRESETS:
        return preset(text.strip())
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    for section in ("dims", "snr", "rate", "outputs"):
        if not cp.has_section(section):
            raise ConfigError(f"missing section [{section}]")
    allowed = {"dims", "snr", "rate", "mc", "outputs"}
    extra = set(cp.sections()) - allowed
    if extra:
        name = sorted(extra)[0]
        _fail(text, name, None, f"unknown section; allowed: {', '.join(sorted(allowed))}")
    n_rx = _get(cp, text, "dims", "n_rx", _integer)
    n_tx = _get(cp, text, "dims", "n_tx", _integer)
    n_list = _get(cp, text, "dims", "n_avail", _list_of(_integer))
    has_l = cp.has_option("dims", "blocklen")
    has_beta = cp.has_option("dims", "beta")
    if has_l == has_beta:
        _fail(text, "dims", None, "give exactly one of blocklen or beta")
    if has_l:
        l_list = _get(cp, text, "dims", "blocklen", _list_of(_integer))
    else:
        betas = _get(cp, text, "dims", "beta", _list_of(float))
        l_list = [int(round(b * n_tx)) for b in betas]
    dims = []
    for n in n_list:
        for l in l_list:
            try:
                dims.append(make_dims(n_rx, n_tx, n, l))
            except DimensionError as exc:
                _fail(text, "dims", None, str(exc))
    snr = _get(cp, text, "snr", "snr_db", _list_of(float))
    normalized = _get(cp, text, "snr", "normalized", _boolean, False, required=False)
    rate = _get(cp, text, "rate", "rate", float, required=False)
    fraction = _get(cp, text, "rate", "fraction", float, required=False)
    if (rate is None) == (fraction is None):
        _fail(text, "rate", None, "give exactly one of rate or fraction")
    for value, key in ((rate, "rate"), (fraction, "fraction")):
        if value is not None and not math.isfinite(value):
            _fail(text, "rate", key, "must be finite")
    mc = None
    if cp.has_section("mc"):
        trials = _get(cp, text, "mc", "n_trials", _integer)
        seed = _get(cp, text, "mc", "master_seed", _integer, 0, required=False)
        if trials < 1000:
            _fail(text, "mc", "n_trials", "needs at least 1000 trials")
        mc = McSettings(trials, seed)
    outputs = _get(cp, text, "outputs", "quantities", _list_of(str))
    for q in outputs:
        if q not in QUANTITIES:
            _fail(text, "outputs", "quantities", f"unknown quantity {q!r}; allowed: {', '.join(QUANTITIES)}")
    return SweepConfig(
        dims_grid=tuple(dims),
        snr_grid_db=tuple(snr),
        outputs=tuple(outputs),
        rate=rate,
        rate_fraction=fraction,
        normalized_snr=normalized,
        mc=mc,
        name="custom",
    )


# ---------------------------------------------------------------- evaluation


def point_noise_power(cfg: SweepConfig, dims: ChannelDims, snr_db: float) -> float:
    sigma2 = snr_db_to_noise_power(snr_db)
    return normalized_noise_power(dims, sigma2) if cfg.normalized_snr else sigma2


def _error_text(exc: Exception) -> str:
    return f"{type(exc).__name__}: {exc}"


def _evaluate_point(cfg: SweepConfig, index: int, dims: ChannelDims, snr_db: float) -> SweepRow:
    sigma2 = point_noise_power(cfg, dims, snr_db)
    cells: dict[str, Cell] = {}
    try:
        cbar = capacity_approx(dims, sigma2).cbar
        rate = cfg.rate if cfg.rate is not None else cfg.rate_fraction * cbar
    except JacobiFBLError as exc:
        err = Cell(None, None, _error_text(exc))
        return SweepRow(dims, snr_db, cfg.rate, {q: err for q in cfg.outputs})

    cache: dict[str, object] = {}

    def comp():
        if "comp" not in cache:
            cache["comp"] = dispersion_components(dims, sigma2)
        return cache["comp"]

    def bounds():
        if "bounds" not in cache:
            cache["bounds"] = error_probability_bounds(dims, sigma2, rate)
        return cache["bounds"]

    def run():
        if "run" not in cache:
            cache["run"] = run_clt_campaign(
                dims, sigma2, cfg.mc.n_trials, derive_seed(cfg.mc.master_seed, index)
            )
        return cache["run"]

    def mc_fraction(p: float, n: int) -> Cell:
        return Cell(p, math.sqrt(p * (1.0 - p) / n))

    evaluators = {
        "cbar": lambda: Cell(cbar),
        "v1": lambda: Cell(comp().v1),
        "v2": lambda: Cell(comp().v2),
        "v3": lambda: Cell(comp().v3),
        "xi_minus": lambda: Cell(comp().xi_minus),
        "xi_plus": lambda: Cell(comp().xi_plus),
        "lower": lambda: Cell(bounds().lower_bound),
        "upper": lambda: Cell(bounds().upper_bound),
        "outage": lambda: Cell(bounds().outage),
        "gallager": lambda: Cell(gallager_comparison(dims, sigma2).e_g),
        # Empirical CDF of sqrt(ML)(ID - C̄)/sqrt(Xi_+) at r/sqrt(Xi_+).
        "empirical_cdf": lambda: mc_fraction(
            float(
                empirical_cdf(run(), cbar, math.sqrt(comp().xi_plus))(
                    bounds().second_order_rate / math.sqrt(comp().xi_plus)
                )
            ),
            len(run()),
        ),
        "empirical_pe": lambda: mc_fraction(
            float((run().info_density <= rate).mean()), len(run())
        ),
    }
    for q in cfg.outputs:
        try:
            cell = evaluators[q]()
            if cell.value is not None and not math.isfinite(cell.value):
                cell = Cell(None, None, f"non-finite value {cell.value!r}")
        except JacobiFBLError as exc:
            cell = Cell(None, None, _error_text(exc))
        cells[q] = cell
    return SweepRow(dims, snr_db, rate, cells)


def run_sweep(cfg: SweepConfig, *, workers: int = 1) -> SweepResult:
    """Evaluate every requested quantity at every (dims, SNR) grid point."""
    grid = [(d, s) for d in cfg.dims_grid for s in cfg.snr_grid_db]
    tasks = [(i, d, s) for i, (d, s) in enumerate(grid)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda t: _evaluate_point(cfg, *t), tasks))
    else:
        rows = [_evaluate_point(cfg, *t) for t in tasks]
    failed = sum(r.failed for r in rows)
    if failed > MAX_FAILED_FRACTION * len(rows):
        raise SweepFailure(f"{failed} of {len(rows)} grid points failed")
    provenance = {
        "config_hash": cfg.digest(),
        "master_seed": None if cfg.mc is None else cfg.mc.master_seed,
        "tool_version": __version__,
        "preset": cfg.name,
        "config": cfg.canonical(),
    }
    return SweepResult(tuple(rows), provenance)


# ---------------------------------------------------------------- output


def _num(x: float | None) -> str:
    return "" if x is None else format(x, ".17g")


def flat_rows(result: SweepResult) -> list[dict]:
    out = []
    for row in result.rows:
        d = row.dims
        for q, cell in row.cells.items():
            out.append({
                "N": d.n_rx, "M": d.n_tx, "n": d.n_avail, "L": d.blocklen,
                "snr_db": row.snr_db, "rate": row.rate, "quantity": q,
                "value": cell.value, "std_err": cell.std_err, "error": cell.error,
            })
    return out


def to_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in flat_rows(result):
        writer.writerow([
            r["N"], r["M"], r["n"], r["L"], _num(r["snr_db"]), _num(r["rate"]), r["quantity"],
            _num(r["value"]), _num(r["std_err"]), r["error"],
        ])
    return buf.getvalue()


def to_json(result: SweepResult) -> str:
    return json.dumps({"provenance": result.provenance, "rows": flat_rows(result)}, indent=1)


def emit(result: SweepResult, fmt: str, destination) -> None:
    """Write ``result`` as ``csv`` or ``json``; raises OSError on write failure."""
    if fmt == "csv":
        text = to_csv(result)
    elif fmt == "json":
        text = to_json(result)
    else:
        raise ConfigError(f"unknown output format {fmt!r}")
    Path(destination).write_text(text)
