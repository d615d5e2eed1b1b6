"""Declarative run configuration: flat ``key = value`` files.

Lengths are given in micrometers in the file (the natural scale of the
problem) and converted to SI in exactly one place, here.  ``#`` starts a
comment; unknown keys are errors; every parse error names the offending key
and line.  An empty file yields the documented default channel
(D_rho = D_theta = 5e-10 m^2/s, rho_c = 100 um, k_d = 0.3 1/s, reflective rim,
receiver radius 1 um, dt = 1e-2 s).

Two presets bundle the truncation and Monte Carlo budget:

* ``default`` (desk scale): n_max=8, m_max=40, 1e5 molecules x 50 realizations
* ``paper``: n_max=2, m_max=4, 1e7 molecules x 500 realizations
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

from .modes import ChannelParams
from .pbs import PbsConfig, ReceiverSpec

__all__ = ["ConfigError", "RunConfig", "parse_config", "parse_config_text",
           "serialize_config", "PRESETS"]

UM = 1e6  # micrometers per meter; parse divides, serialize multiplies


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


PRESETS = {
    "default": {"n_max": 8, "m_max": 40, "n_molecules": 100_000, "n_realizations": 50},
    "paper": {"n_max": 2, "m_max": 4, "n_molecules": 10_000_000, "n_realizations": 500},
}

# key -> parser for scalar values
_SCALAR_KEYS = {
    "d_rho": float,
    "d_theta": float,
    "rho_c_um": float,
    "k_d": float,
    "k_f": float,
    "tx_rho_um": float,
    "tx_theta_rad": float,
    "t0_s": float,
    "n_max": int,
    "m_max": int,
    "n_molecules": int,
    "n_realizations": int,
    "dt_s": float,
    "t_end_s": float,
    "sample_every": int,
    "seed": int,
    "rx_radius_um": float,
    "field_pixel_um": float,
    "field_extent_um": float,
    "compare_nrmse_max": float,
    "compare_peak_rel_err_max": float,
}
_LIST_KEYS = {"rx_rho_um", "rx_theta_rad", "field_snapshot_times_s"}
_STRING_KEYS = {"preset", "out_dir"}
_ALL_KEYS = set(_SCALAR_KEYS) | _LIST_KEYS | _STRING_KEYS

_DEFAULTS = {
    "d_rho": 5e-10,
    "d_theta": 5e-10,
    "rho_c_um": 100.0,
    "k_d": 0.3,
    "k_f": 0.0,
    "tx_rho_um": 0.0,
    "tx_theta_rad": 0.0,
    "t0_s": 0.0,
    "dt_s": 1e-2,
    "t_end_s": 5.0,
    "sample_every": 5,
    "seed": 20260801,
    "rx_rho_um": [20.0, 40.0, 60.0, 80.0],
    "rx_theta_rad": [0.0],
    "rx_radius_um": 1.0,
    "field_pixel_um": 20.0,
    "field_extent_um": None,  # 2*rho_c unless overridden
    "field_snapshot_times_s": [3.0],
    "out_dir": "out",
    "compare_nrmse_max": 0.05,
    "compare_peak_rel_err_max": 0.05,
}


@dataclass(frozen=True)
class RunConfig:
    """Validated run description in SI units."""

    channel: ChannelParams
    preset: str
    n_max: int
    m_max: int
    n_molecules: int
    n_realizations: int
    dt: float
    t_end: float
    sample_every: int
    seed: int
    receivers: tuple[ReceiverSpec, ...]
    field_pixel: float
    field_extent: float
    field_snapshot_times: tuple[float, ...]
    out_dir: str
    compare_nrmse_max: float
    compare_peak_rel_err_max: float

    def pbs_config(self) -> PbsConfig:
        return PbsConfig(
            params=self.channel,
            n_molecules=self.n_molecules,
            dt=self.dt,
            t_end=self.t_end,
            sample_every=self.sample_every,
            n_realizations=self.n_realizations,
            seed=self.seed,
        )

    def config_hash(self) -> str:
        return hashlib.sha256(serialize_config(self).encode()).hexdigest()[:16]


def _parse_lines(text: str) -> dict[str, tuple[str, int]]:
    entries: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _ALL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = (value, lineno)
    return entries


def _convert(key: str, value: str, lineno: int):
    try:
        if key in _STRING_KEYS:
            return value
        if key in _LIST_KEYS:
            return [float(part.strip()) for part in value.split(",") if part.strip()]
        return _SCALAR_KEYS[key](value)
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: malformed value for {key!r}: {value!r}") from exc


def parse_config_text(text: str, preset: str | None = None) -> RunConfig:
    """Parse a config document; ``preset`` overrides any preset in the file."""
    entries = _parse_lines(text)
    raw = {key: _convert(key, value, lineno) for key, (value, lineno) in entries.items()}
    lines = {key: lineno for key, (_, lineno) in entries.items()}

    preset_name = preset or raw.get("preset", "default")
    if preset_name not in PRESETS:
        raise ConfigError(
            f"line {lines.get('preset', 0)}: preset must be one of "
            f"{sorted(PRESETS)}, got {preset_name!r}"
        )

    def get(key: str):
        if key in raw:
            return raw[key]
        if key in PRESETS[preset_name]:
            return PRESETS[preset_name][key]
        return _DEFAULTS[key]

    def fail(key: str, message: str):
        raise ConfigError(f"line {lines.get(key, 0)}: {key}: {message}")

    rho_c = get("rho_c_um") / UM
    tx_rho = get("tx_rho_um") / UM
    if tx_rho > rho_c:
        fail("tx_rho_um", f"transmitter radius {get('tx_rho_um')} um exceeds "
                          f"rho_c_um = {get('rho_c_um')}")
    try:
        channel = ChannelParams(
            d_rho=get("d_rho"), d_theta=get("d_theta"), rho_c=rho_c,
            k_d=get("k_d"), k_f=get("k_f"), tx_rho=tx_rho,
            tx_theta=get("tx_theta_rad"), t0=get("t0_s"),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid channel parameters: {exc}") from exc

    rx_rho = [v / UM for v in get("rx_rho_um")]
    rx_theta = list(get("rx_theta_rad"))
    if len(rx_theta) == 1:
        rx_theta = rx_theta * len(rx_rho)
    if len(rx_theta) != len(rx_rho):
        fail("rx_theta_rad", f"expected 1 or {len(rx_rho)} angles, got {len(rx_theta)}")
    radius = get("rx_radius_um") / UM
    receivers = []
    for rho, theta in zip(rx_rho, rx_theta):
        if rho > rho_c:
            fail("rx_rho_um", f"receiver center {rho * UM} um outside rho_c_um")
        receivers.append(ReceiverSpec(rho=rho, theta=theta, radius=radius))

    extent_um = get("field_extent_um")
    field_extent = (2.0 * rho_c) if extent_um is None else extent_um / UM
    if field_extent < 2.0 * rho_c:
        fail("field_extent_um", "field extent must cover the disk (>= 2*rho_c)")

    def positive(key: str, value):
        if value <= 0:
            fail(key, "must be positive")
        return value

    cfg = RunConfig(
        channel=channel,
        preset=preset_name,
        n_max=int(get("n_max")),
        m_max=positive("m_max", int(get("m_max"))),
        n_molecules=positive("n_molecules", int(get("n_molecules"))),
        n_realizations=positive("n_realizations", int(get("n_realizations"))),
        dt=positive("dt_s", get("dt_s")),
        t_end=positive("t_end_s", get("t_end_s")),
        sample_every=positive("sample_every", int(get("sample_every"))),
        seed=int(get("seed")),
        receivers=tuple(receivers),
        field_pixel=positive("field_pixel_um", get("field_pixel_um") / UM),
        field_extent=field_extent,
        field_snapshot_times=tuple(get("field_snapshot_times_s")),
        out_dir=str(get("out_dir")),
        compare_nrmse_max=get("compare_nrmse_max"),
        compare_peak_rel_err_max=get("compare_peak_rel_err_max"),
    )
    if cfg.n_max < 0:
        fail("n_max", "must be >= 0")
    if cfg.seed < 0:
        fail("seed", "must be >= 0")
    return cfg


def parse_config(path: str, preset: str | None = None) -> RunConfig:
    """Read and validate a config file; empty or missing keys fall back to defaults."""
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    return parse_config_text(text, preset=preset)


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form; parsing it reproduces ``cfg`` exactly."""
    ch = cfg.channel
    theta_list = ", ".join(repr(rx.theta) for rx in cfg.receivers)
    lines = [
        f"d_rho = {ch.d_rho!r}",
        f"d_theta = {ch.d_theta!r}",
        f"rho_c_um = {ch.rho_c * UM!r}",
        f"k_d = {ch.k_d!r}",
        f"k_f = {ch.k_f!r}",
        f"tx_rho_um = {ch.tx_rho * UM!r}",
        f"tx_theta_rad = {ch.tx_theta!r}",
        f"t0_s = {ch.t0!r}",
        f"preset = {cfg.preset}",
        f"n_max = {cfg.n_max}",
        f"m_max = {cfg.m_max}",
        f"n_molecules = {cfg.n_molecules}",
        f"n_realizations = {cfg.n_realizations}",
        f"dt_s = {cfg.dt!r}",
        f"t_end_s = {cfg.t_end!r}",
        f"sample_every = {cfg.sample_every}",
        f"seed = {cfg.seed}",
        "rx_rho_um = " + ", ".join(repr(rx.rho * UM) for rx in cfg.receivers),
        f"rx_theta_rad = {theta_list}",
        f"rx_radius_um = {cfg.receivers[0].radius * UM!r}" if cfg.receivers else "",
        f"field_pixel_um = {cfg.field_pixel * UM!r}",
        f"field_extent_um = {cfg.field_extent * UM!r}",
        "field_snapshot_times_s = "
        + ", ".join(repr(t) for t in cfg.field_snapshot_times),
        f"out_dir = {cfg.out_dir}",
        f"compare_nrmse_max = {cfg.compare_nrmse_max!r}",
        f"compare_peak_rel_err_max = {cfg.compare_peak_rel_err_max!r}",
    ]
    return "\n".join(line for line in lines if line) + "\n"
