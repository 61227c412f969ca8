"""Deterministic synthetic signature corpus.

Each synthetic writer is a bundle of random harmonic curves for x(t), y(t)
and pressure(t), sampled at 100 Hz for 1.5 s (150 points). Genuine samples
re-render the base curves with small amplitude/phase jitter plus a touch of
additive noise; skilled-style forgeries re-render the victim's curves with
much larger distortion and a smooth monotone time warp; random forgeries
render a *different* writer's curves with genuine-level jitter.

Everything derives from a master seed through numpy SeedSequence spawning,
so a corpus is a pure function of (master_seed, parameters): regenerating
it yields byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SAMPLE_RATE_HZ = 100
DURATION_S = 1.5
N_POINTS = int(SAMPLE_RATE_HZ * DURATION_S)

DEFAULT_HARMONICS = 4
DEFAULT_JITTER = 0.03
DEFAULT_WARP = 0.25


@dataclass(frozen=True)
class SyntheticUserSpec:
    """One synthetic writer: identical seed means identical base curves."""

    seed: int
    n_harmonics: int = DEFAULT_HARMONICS
    genuine_jitter: float = DEFAULT_JITTER
    forgery_warp: float = DEFAULT_WARP

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "n_harmonics": self.n_harmonics,
            "genuine_jitter": self.genuine_jitter,
            "forgery_warp": self.forgery_warp,
        }


@dataclass(frozen=True)
class HarmonicParams:
    """Base amplitudes/phases per harmonic for the x, y, p curves."""

    ax: tuple
    phx: tuple
    ay: tuple
    phy: tuple
    ap: tuple
    php: tuple


def draw_params(rng: np.random.Generator, n_harmonics: int) -> HarmonicParams:
    def channel(scale):
        k = np.arange(1, n_harmonics + 1)
        amps = rng.uniform(0.4, 1.2, n_harmonics) * scale / k
        phases = rng.uniform(0.0, 2.0 * np.pi, n_harmonics)
        return tuple(amps), tuple(phases)

    ax, phx = channel(1.0)
    ay, phy = channel(0.7)
    ap, php = channel(0.12)
    return HarmonicParams(ax, phx, ay, phy, ap, php)


def params_for(spec: SyntheticUserSpec) -> HarmonicParams:
    """The writer's base curves, a pure function of the spec."""
    base_ss = np.random.SeedSequence(spec.seed).spawn(3)[0]
    return draw_params(np.random.default_rng(base_ss), spec.n_harmonics)


def _series(amps, phases, tt, rng, perturb):
    f0 = 1.0 / DURATION_S
    out = np.zeros_like(tt)
    for k, (a, ph) in enumerate(zip(amps, phases), start=1):
        a_k = a * (1.0 + perturb * rng.standard_normal())
        ph_k = ph + perturb * rng.standard_normal()
        out += a_k * np.sin(2.0 * np.pi * k * f0 * tt + ph_k)
    return out


def render_sample(
    params: HarmonicParams,
    rng: np.random.Generator,
    perturb: float,
    warp_amp: float = 0.0,
    device_id: str = "synth",
) -> dict:
    """Render one wire-format sample from harmonic parameters.

    perturb is the relative amplitude/phase distortion scale; warp_amp is
    the time-warp magnitude in seconds (0 disables warping). Draw order is
    fixed so output depends only on (params, rng state, arguments).
    """
    tt = np.arange(N_POINTS) / SAMPLE_RATE_HZ
    tw = tt
    if warp_amp > 0.0:
        psi = rng.uniform(0.0, 2.0 * np.pi)
        tw = tt + warp_amp * np.sin(np.pi * tt / DURATION_S + psi)
    x = _series(params.ax, params.phx, tw, rng, perturb)
    y = _series(params.ay, params.phy, tw, rng, perturb)
    p = _series(params.ap, params.php, tw, rng, perturb)

    x = 800.0 + 420.0 * x
    y = 550.0 + 420.0 * y
    # small additive sensor-style noise, scaled off the jitter knob
    x = x + 0.25 * perturb * max(x.std(), 1e-9) * rng.standard_normal(N_POINTS)
    y = y + 0.25 * perturb * max(y.std(), 1e-9) * rng.standard_normal(N_POINTS)
    p = np.clip(0.55 + p, 0.02, 0.98)

    points = [
        {
            "t": int(i * 1000 / SAMPLE_RATE_HZ),
            "x": float(x[i]),
            "y": float(y[i]),
            "p": float(p[i]),
            "pen": True,
        }
        for i in range(N_POINTS)
    ]
    return {"device_id": device_id, "points": points}


class WriterPool:
    """Deterministic bank of synthetic writers with per-purpose RNG streams."""

    def __init__(
        self,
        master_seed: int,
        n_users: int,
        n_harmonics: int = DEFAULT_HARMONICS,
        genuine_jitter: float = DEFAULT_JITTER,
        forgery_warp: float = DEFAULT_WARP,
    ):
        self.master_seed = master_seed
        self.n_users = n_users
        self.n_harmonics = n_harmonics
        self.genuine_jitter = genuine_jitter
        self.forgery_warp = forgery_warp
        user_seeds = np.random.SeedSequence(master_seed).generate_state(n_users, dtype=np.uint64)
        self.specs: list[SyntheticUserSpec] = [
            SyntheticUserSpec(
                seed=int(seed),
                n_harmonics=n_harmonics,
                genuine_jitter=genuine_jitter,
                forgery_warp=forgery_warp,
            )
            for seed in user_seeds
        ]
        self.params: list[HarmonicParams] = []
        self._genuine_rng: list[np.random.Generator] = []
        self._forgery_rng: list[np.random.Generator] = []
        for spec in self.specs:
            _, genuine_ss, forgery_ss = np.random.SeedSequence(spec.seed).spawn(3)
            self.params.append(params_for(spec))
            self._genuine_rng.append(np.random.default_rng(genuine_ss))
            self._forgery_rng.append(np.random.default_rng(forgery_ss))

    def username(self, i: int) -> str:
        return f"user{i:03d}"

    def genuine(self, i: int) -> dict:
        return render_sample(
            self.params[i], self._genuine_rng[i], self.genuine_jitter, device_id="synth-genuine"
        )

    def skilled_forgery(self, victim: int) -> dict:
        warp_amp = 0.2 * self.forgery_warp * DURATION_S
        return render_sample(
            self.params[victim],
            self._forgery_rng[victim],
            self.forgery_warp,
            warp_amp=warp_amp,
            device_id="synth-skilled",
        )

    def random_forgery(self, victim: int) -> dict:
        donor = (victim + 1) % self.n_users
        sample = render_sample(
            self.params[donor],
            self._forgery_rng[victim],
            self.genuine_jitter,
            device_id="synth-random",
        )
        return sample


def gen_corpus(
    out_dir,
    n_users: int,
    genuines_per_user: int,
    forgeries_per_user: int,
    master_seed: int,
    n_harmonics: int = DEFAULT_HARMONICS,
    genuine_jitter: float = DEFAULT_JITTER,
    forgery_warp: float = DEFAULT_WARP,
) -> dict:
    """Write a corpus directory; returns its manifest. Byte-identical per seed."""
    if n_users < 1:
        raise ValueError("n_users must be >= 1")
    out = Path(out_dir)
    pool = WriterPool(master_seed, n_users, n_harmonics, genuine_jitter, forgery_warp)
    usernames = []
    for i in range(n_users):
        username = pool.username(i)
        usernames.append(username)
        user_dir = out / "users" / username
        user_dir.mkdir(parents=True, exist_ok=True)
        genuine_files = []
        for j in range(genuines_per_user):
            name = f"genuine_{j:02d}.json"
            _write_json(user_dir / name, pool.genuine(i))
            genuine_files.append(name)
        forgery_files = []
        for j in range(forgeries_per_user):
            if j % 2 == 0:
                sample, kind = pool.skilled_forgery(i), "skilled"
            else:
                sample, kind = pool.random_forgery(i), "random"
            name = f"forgery_{j:02d}.json"
            _write_json(user_dir / name, sample)
            forgery_files.append({"file": name, "kind": kind})
        _write_json(
            user_dir / "manifest.json",
            {
                "username": username,
                "spec": pool.specs[i].to_dict(),
                "genuine": genuine_files,
                "forgery": forgery_files,
            },
        )
    manifest = {
        "master_seed": master_seed,
        "n_users": n_users,
        "genuines_per_user": genuines_per_user,
        "forgeries_per_user": forgeries_per_user,
        "n_harmonics": n_harmonics,
        "genuine_jitter": genuine_jitter,
        "forgery_warp": forgery_warp,
        "sample_rate_hz": SAMPLE_RATE_HZ,
        "duration_s": DURATION_S,
        "users": usernames,
    }
    _write_json(out / "manifest.json", manifest)
    return manifest


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")
