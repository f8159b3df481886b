"""Scenario configuration: typed fields, figure presets, INI parsing and hashing.

A configuration is a sectioned ``key = value`` text (``configparser`` syntax).
Every key belongs to exactly one section; unknown sections or keys are
rejected with the line they appear on.
"""

import configparser
import dataclasses
import hashlib
import math
from dataclasses import dataclass, field

from . import pulses

PROTOCOLS = (
    "single_pulse",
    "multi_pulse",
    "sequential_linear",
    "sequential_circular",
    "dcg2",
    "udd16",
    "carr_purcell",
    "hybrid_qec_dd",
    "floquet_reference",
    "floquet_optimized_fixed",
    "floquet_lyapunov",
    "gen_no_control",
    "gen_heuristic",
    "gen_knill_dd",
    "adaptive",
    "walk",
)
INITIAL_STATES = ("00", "+0", "0+", "++", "phi+", "psi+", "ghz", "perturbed_ghz")
TASKS = (
    "",
    "preservation",
    "generation",
    "pwc_preservation",
    "pwc_generation",
    "polarized_simple",
    "stepwise_circular_preservation",
    "stepwise_circular_generation",
    "dd_sparse",
    "floquet_dense",
    "gen_shaped",
    "walk",
)


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


def _f(section, default, **kw):
    return field(default=default, metadata={"section": section, **kw})


def _flist(section, default):
    return field(default=tuple(default), metadata={"section": section, "list": float})


def _ilist(section, default):
    return field(default=tuple(default), metadata={"section": section, "list": int})


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved scenario. Field metadata names the INI section of each key."""

    # [scenario]
    preset: str = _f("scenario", "")
    protocol: str = _f("scenario", "single_pulse", choices=PROTOCOLS)
    shape: str = _f("scenario", "gp", choices=pulses.SHAPES)
    sgp_exponent: int = _f("scenario", 4)
    agp_asymmetry: float = _f("scenario", 0.0)
    initial_state: str = _f("scenario", "phi+", choices=INITIAL_STATES)
    initial_epsilon: float = _f("scenario", 0.0)
    seed: int = _f("scenario", 0)
    t_total: float = _f("scenario", 50.0)
    n_grid: int = _f("scenario", 501)
    rtol: float = _f("scenario", 1e-8)
    atol: float = _f("scenario", 1e-10)
    # [system]
    n_qubits: int = _f("system", 2)
    omega_q: tuple = _flist("system", (4.8, 4.8))
    coupling: str = _f("system", "xy", choices=("xy", "yy"))
    g: float = _f("system", 0.5)
    noise_qubits: tuple = _ilist("system", (0,))
    # [drive]
    amplitude: tuple = _flist("drive", (1.0, 0.0))
    omega_d: float = _f("drive", 5.0)
    phase: float = _f("drive", 0.0)
    omega_z: float = _f("drive", 1.0)
    # [pulse]
    t_c: float = _f("pulse", 7.0)
    duration: float = _f("pulse", 15.0)
    n_pulses: int = _f("pulse", 1)
    spacing: float = _f("pulse", 7.5)
    # [lindblad]
    gamma1: float = _f("lindblad", 0.001)
    gamma_phi: float = _f("lindblad", 0.001)
    # [noise]
    noise_enabled: bool = _f("noise", True)
    m: int = _f("noise", 1000)
    s0: float = _f("noise", 0.2)
    omega_c: float = _f("noise", 0.5)
    gamma_hwhm: float = _f("noise", 0.5)
    omega_min: float = _f("noise", -5.0)
    omega_max: float = _f("noise", 5.0)
    tau_c: float = _f("noise", 5.0)
    noise_cache: bool = _f("noise", False)
    # [errors]
    detuning: float = _f("errors", 0.0)
    amplitude_error: float = _f("errors", 0.0)
    pulse_error_sigma: float = _f("errors", 0.0)
    # [dd]
    tau_p: float = _f("dd", 0.15)
    m_free: float = _f("dd", 2.0)
    dd_steps: int = _f("dd", 140)
    p_qec: float = _f("dd", 0.8)
    s_max: float = _f("dd", 0.3)
    dead_time: float = _f("dd", 0.01)
    qec_rule: str = _f("dd", "fidelity", choices=("fidelity", "constant"))
    # [floquet]
    floquet_omega: float = _f("floquet", 5.0)
    a_pulse: float = _f("floquet", 1.0)
    harmonic_weights: tuple = _flist("floquet", (1.0, 0.5, 0.3))
    floquet_trials: int = _f("floquet", 50)
    floquet_env: float = _f("floquet", 1.0)
    floquet_steps: int = _f("floquet", 100)
    # [generation]
    t_p: float = _f("generation", 0.05)
    gen_steps: int = _f("generation", 40)
    step_time: float = _f("generation", 1.5)
    knill_pulses: int = _f("generation", 12)
    # [walk]
    n_sites: int = _f("walk", 11)
    walk_steps: int = _f("walk", 30)
    dt_step: float = _f("walk", 0.5)
    omega0: float = _f("walk", 1.0)
    x_target: int = _f("walk", -3)
    walk_tau: float = _f("walk", 7.5)
    disorder: float = _f("walk", 0.01)
    boundary: str = _f("walk", "as_written", choices=("as_written", "cyclic"))
    t_offset: float = _f("walk", 0.5)
    # [rl]
    task: str = _f("rl", "", choices=TASKS)
    reward_variant: str = _f("rl", "caption", choices=("caption", "body"))
    control_window: tuple = _flist("rl", (10.0, 30.0))
    rl_steps: int = _f("rl", 40)
    cem_population: int = _f("rl", 24)
    cem_elite_frac: float = _f("rl", 0.25)
    cem_iterations: int = _f("rl", 15)
    cem_sigma0: float = _f("rl", 0.5)
    cem_sigma_floor: float = _f("rl", 0.02)
    cem_alpha: float = _f("rl", 0.7)

    def __post_init__(self):
        validate_config(self)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @property
    def pulse_shape(self):
        return pulses.PulseShape(
            self.shape, self.sgp_exponent, self.agp_asymmetry if self.agp_asymmetry > 0 else None
        )

    @property
    def tau_step(self):
        """Duration of one decoupling step, ``tau_p * m_free``."""
        return self.tau_p * self.m_free

    @property
    def cp_cycle(self):
        """Carr-Purcell cycle length: the run holds ``dd_steps / m_free`` cycles."""
        return self.t_total * self.m_free / self.dd_steps

    @property
    def grid(self):
        import numpy as np

        return np.linspace(0.0, self.t_total, self.n_grid)


FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}
SECTIONS = {}
for _f_obj in dataclasses.fields(ScenarioConfig):
    SECTIONS.setdefault(_f_obj.metadata["section"], []).append(_f_obj.name)


def validate_config(cfg):
    """Check choices, ranges and cross-field consistency; raise :class:`ConfigError`."""
    for f in dataclasses.fields(cfg):
        choices = f.metadata.get("choices")
        if choices is not None and getattr(cfg, f.name) not in choices:
            raise ConfigError(f"{f.name} = {getattr(cfg, f.name)!r}; expected one of {choices}")
    positive = ("t_total", "duration", "tau_p", "m_free", "floquet_omega", "floquet_env",
                "t_p", "step_time", "dt_step", "walk_tau", "rtol", "atol", "gamma_hwhm")
    for name in positive:
        if not getattr(cfg, name) > 0:
            raise ConfigError(f"{name} must be positive")
    for name in ("gamma1", "gamma_phi", "s0", "disorder", "initial_epsilon", "pulse_error_sigma",
                 "dead_time"):
        if getattr(cfg, name) < 0:
            raise ConfigError(f"{name} must be non-negative")
    for name in ("p_qec", "s_max"):
        if not 0 <= getattr(cfg, name) <= 1:
            raise ConfigError(f"{name} must lie in [0, 1]")
    if cfg.n_grid < 2:
        raise ConfigError("n_grid must be at least 2")
    if cfg.n_qubits < 1 or len(cfg.omega_q) != cfg.n_qubits:
        raise ConfigError(f"omega_q has {len(cfg.omega_q)} entries for {cfg.n_qubits} qubits")
    if len(cfg.amplitude) != cfg.n_qubits:
        raise ConfigError(f"amplitude has {len(cfg.amplitude)} entries for {cfg.n_qubits} qubits")
    if any(not 0 <= q < cfg.n_qubits for q in cfg.noise_qubits):
        raise ConfigError("noise_qubits must index existing qubits")
    if cfg.sgp_exponent <= 2 or cfg.sgp_exponent % 2:
        raise ConfigError("sgp_exponent must be an even integer greater than 2")
    if cfg.m < 1 or not cfg.omega_min < cfg.omega_max:
        raise ConfigError("noise needs m >= 1 and omega_min < omega_max")
    if cfg.omega_d == 0 and cfg.protocol == "single_pulse":
        raise ConfigError("the corrected drive divides by omega_d; omega_d = 0 is not allowed")
    if cfg.n_pulses < 1:
        raise ConfigError("n_pulses must be at least 1")
    if cfg.protocol in ("sequential_linear", "sequential_circular") and cfg.spacing < cfg.duration - 1e-12:
        raise ConfigError(
            f"sequential windows overlap: spacing {cfg.spacing} is shorter than duration {cfg.duration}"
        )
    if not -(cfg.n_sites // 2) <= cfg.x_target <= cfg.n_sites // 2:
        raise ConfigError("x_target outside the lattice")
    if cfg.n_sites < 1 or cfg.n_sites % 2 == 0:
        raise ConfigError("n_sites must be odd so that sites are centred on 0")
    if not 0 < cfg.cem_elite_frac <= 1:
        raise ConfigError("cem_elite_frac must lie in (0, 1]")
    if cfg.dd_steps < 1:
        raise ConfigError("dd_steps must be positive")
    if not cfg.dead_time < cfg.cp_cycle:
        raise ConfigError("dead_time must be shorter than the cycle")
    for name in ("omega_q", "amplitude", "harmonic_weights", "control_window"):
        if not all(math.isfinite(v) for v in getattr(cfg, name)):
            raise ConfigError(f"{name} entries must be finite")


# Scenario presets fig1 .. fig12; keys not listed keep the defaults above.
_GP_FIG1 = dict(
    g=0.5, omega_q=(4.8, 4.8), amplitude=(1.0, 0.0), omega_d=5.0, phase=0.0, t_c=7.0,
    duration=15.0, gamma1=0.001, gamma_phi=0.001, m=1000, gamma_hwhm=0.5, s0=0.2,
    omega_min=-5.0, omega_max=5.0, tau_c=5.0, t_total=50.0, n_grid=501,
)
PRESETS = {
    "fig1": dict(_GP_FIG1, protocol="single_pulse", initial_state="phi+"),
    "fig2": dict(_GP_FIG1, protocol="adaptive", task="preservation", control_window=(10.0, 30.0),
                 rl_steps=40),
    "fig3": dict(_GP_FIG1, protocol="multi_pulse", duration=5.0, n_pulses=4, t_c=7.5, spacing=7.5,
                 gamma_hwhm=0.1),
    "fig4": dict(_GP_FIG1, protocol="adaptive", task="pwc_preservation", duration=5.0, n_pulses=4,
                 t_c=7.5, spacing=7.5, gamma_hwhm=0.1, rl_steps=40),
    "fig5": dict(_GP_FIG1, protocol="sequential_linear", amplitude=(1.0, 1.0), omega_z=1.0,
                 n_pulses=3, t_c=10.0, spacing=5.0, duration=5.0),
    "fig6": dict(_GP_FIG1, protocol="adaptive", task="polarized_simple", amplitude=(1.0, 1.0),
                 n_pulses=3, t_c=10.0, spacing=5.0, duration=5.0, rl_steps=100),
    "fig7": dict(_GP_FIG1, protocol="sequential_circular", amplitude=(1.0, 1.0), n_pulses=2,
                 t_c=10.0, spacing=5.0, duration=5.0),
    "fig8": dict(_GP_FIG1, protocol="adaptive", task="stepwise_circular_preservation",
                 amplitude=(1.0, 1.0), n_pulses=2, t_c=10.0, spacing=5.0, duration=5.0, rl_steps=100),
    "fig9": dict(
        protocol="hybrid_qec_dd", initial_state="perturbed_ghz", initial_epsilon=0.05, g=0.5,
        coupling="yy", omega_q=(2.0, 2.0), amplitude=(0.0, 0.0), gamma1=0.05, gamma_phi=0.05,
        m=1000, s0=0.2, gamma_hwhm=0.5, omega_min=-5.0, omega_max=5.0, tau_p=0.15, m_free=2.0,
        dd_steps=140, t_total=42.0, n_grid=141, p_qec=0.8, s_max=0.3, dead_time=0.01,
        detuning=0.02, pulse_error_sigma=0.05, task="dd_sparse",
    ),
    "fig10": dict(
        protocol="floquet_reference", initial_state="perturbed_ghz", initial_epsilon=0.05, g=1.2,
        coupling="yy", omega_q=(3.5, 3.5), amplitude=(0.0, 0.0), gamma1=0.03, gamma_phi=0.03,
        m=1000, s0=0.05, gamma_hwhm=0.5, omega_min=0.001, omega_max=10.0, floquet_omega=5.0,
        t_total=100.0, n_grid=101, floquet_steps=100, amplitude_error=0.01, detuning=0.035,
        harmonic_weights=(1.0, 0.5, 0.3), task="floquet_dense",
    ),
    "fig11": dict(
        protocol="gen_no_control", initial_state="00", g=0.5, coupling="yy", omega_q=(2.0, 2.0),
        amplitude=(0.0, 0.0), gamma1=0.01, gamma_phi=0.01, t_p=0.05, gen_steps=40, step_time=1.5,
        t_total=60.0, n_grid=41, pulse_error_sigma=0.01, detuning=0.02, m=1000,
        omega_min=-10.0, omega_max=10.0, s0=0.01, gamma_hwhm=0.5, task="gen_shaped",
        cem_population=20, cem_iterations=30, cem_sigma0=0.5,
    ),
    "fig12": dict(
        protocol="walk", n_sites=11, walk_steps=30, dt_step=0.5, walk_tau=7.5, omega0=1.0,
        t_offset=0.5, s0=0.04, gamma_hwhm=0.5, omega_min=-5.0, omega_max=5.0, disorder=0.01,
        gamma1=0.0, gamma_phi=0.0, x_target=-3, t_total=15.0, n_grid=31, task="walk",
        rtol=1e-10, atol=1e-12,
    ),
}


def preset(name):
    """Resolved :class:`ScenarioConfig` for a figure preset."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return ScenarioConfig(preset=name, **PRESETS[name])


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_format_value(x) for x in v)
    return str(v)


def _convert(name, raw, line):
    f = FIELDS[name]
    kind = f.metadata.get("list")
    try:
        if kind is not None:
            raw = raw.strip()
            return tuple(kind(x) for x in raw.split(",") if x.strip()) if raw else ()
        default = f.default
        if isinstance(default, bool):
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"line {line}: bad value for {name}: {exc}") from None


def _line_numbers(text):
    """Map (section, key) to 1-based line numbers."""
    out, section = {}, None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
            out[(section, None)] = i
        elif section is not None and ("=" in s or ":" in s):
            key = s.split("=", 1)[0] if "=" in s else s.split(":", 1)[0]
            out[(section, key.strip().lower())] = i
    return out


def parse_config(text, preset_name=None):
    """Parse INI text into a :class:`ScenarioConfig`.

    ``preset_name`` (or a ``preset`` key in ``[scenario]``) selects the base
    values; keys in the text override them.
    """
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse configuration: {exc}") from None
    lines = _line_numbers(text)
    values = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"line {lines.get((section, None), '?')}: unknown section [{section}]")
        for key, raw in parser.items(section):
            line = lines.get((section, key), "?")
            if key not in SECTIONS[section]:
                raise ConfigError(f"line {line}: unknown key {key!r} in [{section}]")
            values[key] = _convert(key, raw, line)
    name = values.pop("preset", None) or preset_name
    if name and name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}")
    base = dict(PRESETS[name]) if name else {}
    base.update(values)
    try:
        return ScenarioConfig(preset=name or "", **base)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def serialize_config(cfg):
    """INI text that :func:`parse_config` maps back to ``cfg``."""
    out = []
    for section, names in SECTIONS.items():
        out.append(f"[{section}]")
        for name in names:
            out.append(f"{name} = {_format_value(getattr(cfg, name))}")
        out.append("")
    return "\n".join(out)


def config_hash(cfg):
    """Git-style blob hash of the serialized configuration."""
    data = serialize_config(cfg).encode()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()
