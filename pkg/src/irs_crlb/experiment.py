"""Scenario configuration, scene assembly and the noise/LSR sweeps."""

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import dataclass, field, replace
import hashlib
import json
import logging
from pathlib import Path

import numpy as np

from .errors import ConfigError, InvalidArgumentError, NonConvergenceError, SingularFimError
from .fisher import assemble_full_fim, crlb, fim_blocks, no_irs_fim
from .geometry import (
    TWO_PI,
    ChannelSet,
    IrsPanel,
    Position2D,
    angles_from_positions,
    cophasing_phases,
    coupling_matrix,
    nlos_channel_direct,
    path_loss,
    scale_reflectivities,
)
from .optimizer import DesignProblem, OptimizerConfig, alternating_optimize
from .signal_model import NoiseModel, RadarParams, TargetParams

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("axis", "scenario", "trace_crlb", "trace_alpha_block", "trace_nu_block", "surrogate", "converged", "seed")
METRICS = ("trace_crlb", "trace_alpha_block", "trace_nu_block", "surrogate")


@dataclass(frozen=True)
class IrsSpec:
    position: Position2D
    elements: int = 8
    spacing_ratio: float = 0.5


@dataclass(frozen=True)
class ScenarioConfig:
    """Single source of truth for one experiment.

    ``doppler`` is either ``("uniform", low, high)`` or ``("values", nu_0, ..., nu_K)``.
    """

    radar_pos: Position2D = Position2D(0.0, 0.0)
    target_pos: Position2D = Position2D(0.0, 5000.0)
    irs: tuple = ()
    pulse_count: int = 64
    pri: float = 1e-4
    waveform: tuple = None
    sigma2: float = 0.1
    gamma: float = 0.1
    doppler: tuple = ("uniform", 0.1, 0.3)
    l0_db: float = -30.0
    d0: float = 1.0
    path_loss_exponent: float = 2.5
    seed: int = 42

    def __post_init__(self):
        if self.gamma <= 0:
            raise ConfigError("gamma", f"must be positive, got {self.gamma}")
        if self.sigma2 <= 0:
            raise ConfigError("sigma2", f"must be positive, got {self.sigma2}")
        if self.pulse_count < 2:
            raise ConfigError("pulse_count", "must be >= 2")
        kind = self.doppler[0]
        if kind == "uniform":
            lo, hi = self.doppler[1:]
            if not (-0.5 <= lo < hi <= 0.5):
                raise ConfigError("doppler.uniform", f"interval [{lo}, {hi}) not inside [-0.5, 0.5)")
        elif kind == "values":
            values = self.doppler[1:]
            if len(values) != self.irs_count + 1:
                raise ConfigError("doppler.values", f"need {self.irs_count + 1} values, got {len(values)}")
            if any(not (-0.5 <= v < 0.5) for v in values):
                raise ConfigError("doppler.values", "entries must lie in [-0.5, 0.5)")
        else:
            raise ConfigError("doppler", f"unknown kind {kind!r}")
        for i, spec in enumerate(self.irs):
            if spec.elements < 1:
                raise ConfigError(f"irs[{i}].elements", "must be >= 1")

    @property
    def irs_count(self):
        return len(self.irs)

    def with_irs_count(self, k):
        """Copy keeping only the first ``k`` IRS platforms."""
        if k > self.irs_count:
            raise InvalidArgumentError(f"scenario asks for {k} IRS, config has {self.irs_count}")
        doppler = self.doppler
        if doppler[0] == "values":
            doppler = doppler[: k + 2]
        return replace(self, irs=self.irs[:k], doppler=doppler)

    def digest(self):
        payload = json.dumps(config_to_dict(self), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _reference_irs(count, elements=8):
    positions = [(2500.0, 2500.0), (-2500.0, 2500.0), (0.0, 2500.0)]
    return tuple(IrsSpec(Position2D(*xy), elements) for xy in positions[:count])


PRESETS = {
    "paper-3irs": ScenarioConfig(irs=_reference_irs(3)),
    "paper-1irs": ScenarioConfig(irs=_reference_irs(1)),
    "paper-no-irs": ScenarioConfig(irs=()),
}


def preset(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


# ---------------------------------------------------------------------------
# config file parsing

_TOP_KEYS = {
    "preset", "radar", "target", "irs", "pulse_count", "pri", "waveform",
    "sigma2", "gamma", "doppler", "path_loss", "seed",
}


def _position(value, where):
    if not (isinstance(value, (list, tuple)) and len(value) == 2):
        raise ConfigError(where, "expected [x, y]")
    try:
        return Position2D(float(value[0]), float(value[1]))
    except (TypeError, ValueError, InvalidArgumentError) as exc:
        raise ConfigError(where, str(exc)) from None


def _number(value, where, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(where, f"expected a number, got {value!r}")
    if kind is int and int(value) != value:
        raise ConfigError(where, f"expected an integer, got {value!r}")
    return kind(value)


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(where, "expected a mapping")
    unknown = set(d) - set(allowed)
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"{where}.{key}" if where else key, "unknown key")


def config_from_dict(d):
    """Build a :class:`ScenarioConfig` from parsed JSON; unknown keys are rejected."""
    _check_keys(d, _TOP_KEYS, "")
    base = preset(d["preset"]) if "preset" in d else ScenarioConfig(irs=_reference_irs(3))
    kw = {}
    if "radar" in d:
        kw["radar_pos"] = _position(d["radar"], "radar")
    if "target" in d:
        kw["target_pos"] = _position(d["target"], "target")
    if "irs" in d:
        if not isinstance(d["irs"], list):
            raise ConfigError("irs", "expected a list")
        specs = []
        for i, item in enumerate(d["irs"]):
            where = f"irs[{i}]"
            _check_keys(item, {"position", "elements", "spacing_ratio"}, where)
            if "position" not in item:
                raise ConfigError(f"{where}.position", "required")
            specs.append(IrsSpec(
                _position(item["position"], f"{where}.position"),
                _number(item.get("elements", 8), f"{where}.elements", int),
                _number(item.get("spacing_ratio", 0.5), f"{where}.spacing_ratio"),
            ))
        kw["irs"] = tuple(specs)
    for key, kind in (("pulse_count", int), ("pri", float), ("sigma2", float), ("gamma", float), ("seed", int)):
        if key in d:
            kw[key] = _number(d[key], key, kind)
    if "waveform" in d:
        kw["waveform"] = _parse_waveform(d["waveform"])
    if "doppler" in d:
        dop = d["doppler"]
        _check_keys(dop, {"uniform", "values"}, "doppler")
        if len(dop) != 1:
            raise ConfigError("doppler", "give exactly one of 'uniform' or 'values'")
        if "uniform" in dop:
            lo, hi = (_number(v, "doppler.uniform") for v in dop["uniform"])
            kw["doppler"] = ("uniform", lo, hi)
        else:
            kw["doppler"] = ("values",) + tuple(_number(v, "doppler.values") for v in dop["values"])
    if "path_loss" in d:
        pl = d["path_loss"]
        _check_keys(pl, {"l0_db", "d0", "exponent"}, "path_loss")
        if "l0_db" in pl:
            kw["l0_db"] = _number(pl["l0_db"], "path_loss.l0_db")
        if "d0" in pl:
            kw["d0"] = _number(pl["d0"], "path_loss.d0")
        if "exponent" in pl:
            kw["path_loss_exponent"] = _number(pl["exponent"], "path_loss.exponent")
    try:
        return replace(base, **kw)
    except InvalidArgumentError as exc:
        raise ConfigError("", str(exc)) from None


def _parse_waveform(w):
    if w is None or w == "ones":
        return None
    if isinstance(w, dict):
        _check_keys(w, {"real", "imag"}, "waveform")
        re = [_number(v, "waveform.real") for v in w.get("real", [])]
        im = [_number(v, "waveform.imag") for v in w.get("imag", [0.0] * len(re))]
        if len(re) != len(im):
            raise ConfigError("waveform", "real and imag lengths differ")
        return tuple(complex(a, b) for a, b in zip(re, im))
    if isinstance(w, list):
        return tuple(complex(_number(v, "waveform")) for v in w)
    raise ConfigError("waveform", "expected 'ones', a list, or {real, imag}")


def config_to_dict(cfg):
    d = {
        "radar": [cfg.radar_pos.x, cfg.radar_pos.y],
        "target": [cfg.target_pos.x, cfg.target_pos.y],
        "irs": [
            {"position": [s.position.x, s.position.y], "elements": s.elements, "spacing_ratio": s.spacing_ratio}
            for s in cfg.irs
        ],
        "pulse_count": cfg.pulse_count,
        "pri": cfg.pri,
        "waveform": None if cfg.waveform is None else {
            "real": [c.real for c in cfg.waveform], "imag": [c.imag for c in cfg.waveform]
        },
        "sigma2": cfg.sigma2,
        "gamma": cfg.gamma,
        "doppler": {"uniform": list(cfg.doppler[1:])} if cfg.doppler[0] == "uniform" else {"values": list(cfg.doppler[1:])},
        "path_loss": {"l0_db": cfg.l0_db, "d0": cfg.d0, "exponent": cfg.path_loss_exponent},
        "seed": cfg.seed,
    }
    return d


def load_scenario(path):
    """Load a JSON scenario file, or return a built-in preset when given its name.

    Omitted fields fall back to the preset named under ``"preset"`` or, by
    default, to the three-IRS reference geometry.
    """
    if isinstance(path, str) and path in PRESETS:
        return PRESETS[path]
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc}") from None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"parse error at line {exc.lineno}: {exc.msg}") from None
    return config_from_dict(d)


# ---------------------------------------------------------------------------
# scene


@dataclass(frozen=True)
class Scene:
    radar: RadarParams
    channels: ChannelSet
    target: TargetParams
    couplings: tuple
    angles: tuple
    phases: tuple

    def problem(self, sigma2):
        return DesignProblem(self.radar, self.channels.h_los, self.couplings, self.target.alpha, self.target.nu, sigma2)


def draw_paths(cfg):
    """Raw reflectivities ``CN(0, 1)`` and Dopplers, drawn path by path.

    Path ``k`` always consumes the same random numbers, so a scene with fewer
    IRS shares its LoS (and leading NLoS) parameters with a larger one.
    """
    rng = np.random.default_rng(cfg.seed)
    k = cfg.irs_count
    raw = np.empty(k + 1, dtype=complex)
    nu = np.empty(k + 1)
    for i in range(k + 1):
        re, im = rng.standard_normal(2)
        raw[i] = complex(re, im) / np.sqrt(2.0)
        if cfg.doppler[0] == "uniform":
            nu[i] = rng.uniform(cfg.doppler[1], cfg.doppler[2])
    if cfg.doppler[0] == "values":
        nu[:] = cfg.doppler[1 : k + 2]
    return raw, nu


def build_scene(cfg, phases=None):
    """Assemble channels, target and radar for a configuration.

    Parameters
    ----------
    cfg : ScenarioConfig
    phases : sequence of arrays, optional
        One phase vector per IRS. Defaults to the co-phasing configuration,
        which reaches the largest NLoS gain ``M^2`` on every panel.

    Notes
    -----
    Reflectivities are scaled for ``cfg.gamma`` using the channels of the
    given (or co-phasing) phases. The LoS gain is the path loss over the
    two-way radar-target distance.
    """
    radar = RadarParams(cfg.pulse_count, cfg.pri, None if cfg.waveform is None else np.array(cfg.waveform))
    raw, nu = draw_paths(cfg)
    distance = cfg.radar_pos.distance_to(cfg.target_pos)
    h_los = path_loss(2.0 * distance, cfg.l0_db, cfg.d0, cfg.path_loss_exponent)

    couplings, angles, panels = [], [], []
    for i, spec in enumerate(cfg.irs):
        th_ir, th_ti = angles_from_positions(cfg.radar_pos, spec.position, cfg.target_pos)
        s = coupling_matrix(th_ir, th_ti, spec.elements, spec.spacing_ratio)
        ph = cophasing_phases(s) if phases is None else np.asarray(phases[i], dtype=float)
        if ph.size != spec.elements:
            raise InvalidArgumentError(f"IRS {i} has {spec.elements} elements, got {ph.size} phases")
        couplings.append(s)
        angles.append((th_ir, th_ti))
        panels.append(IrsPanel(ph, spec.spacing_ratio))
    h_nlos = [nlos_channel_direct(p, *a) for p, a in zip(panels, angles)]
    channels = ChannelSet(h_los, h_nlos)

    if cfg.irs_count:
        alpha = scale_reflectivities(raw, channels, cfg.gamma)
    else:
        alpha = raw * np.sqrt(cfg.gamma) / np.abs(raw[0] * h_los)
    return Scene(
        radar=radar,
        channels=channels,
        target=TargetParams(alpha, nu),
        couplings=tuple(couplings),
        angles=tuple(angles),
        phases=tuple(p.phases for p in panels),
    )


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class SweepResult:
    axis_name: str
    axis_values: list
    scenario: str
    trace_crlb: list = field(default_factory=list)
    trace_alpha_block: list = field(default_factory=list)
    trace_nu_block: list = field(default_factory=list)
    surrogate: list = field(default_factory=list)
    converged: list = field(default_factory=list)
    seed: int = 0
    config_digest: str = ""
    traces: list = field(default_factory=list)


def scenario_name(k):
    return "no-irs" if k == 0 else f"{k}-irs"


def _metrics(scene, phases, sigma2):
    """CRLB summary of a scene, or NaNs when the FIM is singular.

    White noise only scales the FIM by ``1/sigma2``, so the bound is computed
    at unit noise and rescaled. Inverting the scaled matrix directly would add
    rounding noise amplified by the FIM condition number.
    """
    target = scene.target
    if phases is not None:
        channels = ChannelSet(scene.channels.h_los, scene.problem(sigma2).consistent_h(phases))
    else:
        channels = scene.channels
    blocks = fim_blocks(scene.radar, channels, target, NoiseModel(sigma2=1.0))
    try:
        res = crlb(assemble_full_fim(blocks))
    except SingularFimError:
        logger.warning("singular FIM at sigma2=%g", sigma2)
        return dict.fromkeys(METRICS, float("nan")), False
    out = {
        "trace_crlb": res.trace_total,
        "trace_alpha_block": res.trace_alpha_block,
        "trace_nu_block": res.trace_nu_block,
        "surrogate": res.surrogate,
    }
    if channels.irs_count == 0:
        f_aa0, f_nn0 = no_irs_fim(scene.radar, channels.h_los, target.alpha[0], target.nu[0], 1.0)
        out["surrogate"] = float(np.trace(np.linalg.inv(f_aa0)) + 1.0 / f_nn0)
    return {key: sigma2 * val for key, val in out.items()}, True


def design_phases(scene, sigma2, optimizer_cfg, optimize=True):
    """Phases for one scene: AO design, or uniform random phases as a baseline.

    Returns ``(phases, converged, objective_trace)``.
    """
    if not optimize:
        rng = np.random.default_rng(optimizer_cfg.seed)
        phases = np.array([rng.uniform(0.0, TWO_PI, s.shape[0]) for s in scene.couplings])
        return phases, True, []
    try:
        result = alternating_optimize(scene.problem(sigma2), optimizer_cfg)
        return result.optimal_phases, True, list(result.objective_trace)
    except NonConvergenceError as exc:
        logger.warning("phase design did not converge: %s", exc)
        if exc.result is None:
            return None, False, exc.trace
        return exc.result.optimal_phases, False, exc.trace


def _sigma_variant(args):
    cfg, k, grid, optimizer_cfg, optimize, design_sigma2 = args
    scene = build_scene(cfg.with_irs_count(k))
    phases, ok, trace = (None, True, []) if k == 0 else design_phases(scene, design_sigma2, optimizer_cfg, optimize)
    rows = []
    for s2 in grid:
        if k and phases is None:
            rows.append((dict.fromkeys(METRICS, float("nan")), False))
            continue
        m, good = _metrics(scene, phases if k else None, s2)
        rows.append((m, good and ok))
    return rows, [trace]


def _gamma_point(args):
    cfg, k, gamma, sigma2, optimizer_cfg, optimize = args
    cfg = replace(cfg.with_irs_count(k), gamma=gamma, sigma2=sigma2)
    scene = build_scene(cfg)
    if k == 0:
        return _metrics(scene, None, sigma2), []
    phases, ok, trace = design_phases(scene, sigma2, optimizer_cfg, optimize)
    if phases is None:
        return (dict.fromkeys(METRICS, float("nan")), False), trace
    m, good = _metrics(scene, phases, sigma2)
    return (m, good and ok), trace


def _map(fn, tasks, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def _collect(axis_name, grid, k, cfg, rows, traces):
    res = SweepResult(axis_name, list(grid), scenario_name(k), seed=cfg.seed, config_digest=cfg.digest())
    for m, ok in rows:
        for key in METRICS:
            getattr(res, key).append(float(m[key]))
        res.converged.append(bool(ok))
    res.traces = traces
    return res


def run_sigma_sweep(cfg, sigma2_grid, scenarios=(0, 1, 3), optimizer_cfg=OptimizerConfig(),
                    optimize=True, workers=1, design_sigma2=1.0):
    """CRLB metrics versus noise variance at the config's LSR.

    Phases are designed once per scenario at ``design_sigma2``: the FIM is
    proportional to ``1/sigma2``, so the optimum does not move along this axis.
    """
    grid = [float(v) for v in sigma2_grid]
    if not grid:
        raise InvalidArgumentError("empty sigma2 grid")
    tasks = [(cfg, k, grid, optimizer_cfg, optimize, design_sigma2) for k in scenarios]
    out = []
    for k, (rows, traces) in zip(scenarios, _map(_sigma_variant, tasks, workers)):
        out.append(_collect("sigma2", grid, k, cfg, rows, traces))
    return out


def run_gamma_sweep(cfg, gamma_grid, scenarios=(0, 1, 3), optimizer_cfg=OptimizerConfig(),
                    optimize=True, workers=1, sigma2=0.1):
    """CRLB metrics versus LSR at fixed noise variance; phases re-designed per point."""
    grid = [float(v) for v in gamma_grid]
    if not grid:
        raise InvalidArgumentError("empty gamma grid")
    tasks = [(cfg, k, g, sigma2, optimizer_cfg, optimize) for k in scenarios for g in grid]
    results = _map(_gamma_point, tasks, workers)
    out = []
    for i, k in enumerate(scenarios):
        chunk = results[i * len(grid) : (i + 1) * len(grid)]
        out.append(_collect("gamma", grid, k, cfg, [r for r, _ in chunk], [t for _, t in chunk]))
    return out


def emit_csv(results, path):
    """Write one row per (scenario, axis value) with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for res in results:
            for i, x in enumerate(res.axis_values):
                writer.writerow([
                    f"{x:.17g}",
                    res.scenario,
                    *(f"{getattr(res, key)[i]:.17g}" for key in METRICS),
                    int(res.converged[i]),
                    res.seed,
                ])
    return Path(path)


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for key in ("axis",) + METRICS:
            row[key] = float(row[key])
        row["converged"] = bool(int(row["converged"]))
        row["seed"] = int(row["seed"])
    return rows


def emit_trace_log(results, path):
    """JSON-lines log of optimizer objective traces, one line per sweep point."""
    with open(path, "w") as fh:
        for res in results:
            for i, trace in enumerate(res.traces):
                axis = res.axis_values[i] if len(res.traces) == len(res.axis_values) else None
                fh.write(json.dumps({
                    "axis_name": res.axis_name, "axis": axis, "scenario": res.scenario,
                    "objective_trace": [float(v) for v in trace],
                }) + "\n")


def parse_grid(spec):
    """``"1e-3:1e1:log:25"`` or ``"0:1:lin:5"`` or ``"0.1,0.2,0.5"``."""
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 4 or parts[2] not in ("log", "lin"):
            raise ConfigError("grid", f"expected start:stop:log|lin:count, got {spec!r}")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[3])
        if parts[2] == "log":
            if start <= 0 or stop <= 0:
                raise ConfigError("grid", "log grid needs positive bounds")
            return np.logspace(np.log10(start), np.log10(stop), count)
        return np.linspace(start, stop, count)
    return np.array([float(v) for v in spec.split(",") if v.strip()])


def phases_to_rows(phases):
    return [(k + 1, m, float(p)) for k, ph in enumerate(phases) for m, p in enumerate(ph)]


__all__ = [
    "IrsSpec", "ScenarioConfig", "Scene", "SweepResult", "PRESETS", "preset", "load_scenario",
    "config_from_dict", "config_to_dict", "build_scene", "draw_paths", "design_phases",
    "run_sigma_sweep", "run_gamma_sweep", "emit_csv", "read_csv", "emit_trace_log", "parse_grid",
    "scenario_name",
]
