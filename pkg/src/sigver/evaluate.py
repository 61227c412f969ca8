"""FAR/FRR sweeps and equal-error-rate estimation over a synthetic corpus.

Per user, the first enroll_count genuine samples build the model; remaining
genuines are false-rejection trials and all forgeries are false-acceptance
trials against that user's model. Acceptance is normalized_score <=
threshold, so lowering the threshold is stricter: FAR is non-decreasing and
FRR non-increasing in the threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import matching, signals
from .errors import InsufficientSamples


@dataclass
class EvalReport:
    thresholds: list[float]
    far: list[float]
    frr: list[float]
    eer: float
    eer_threshold: float
    n_genuine: int
    n_impostor: int
    trials: list[dict] = field(default_factory=list)
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "eer": self.eer,
            "eer_threshold": self.eer_threshold,
            "n_genuine": self.n_genuine,
            "n_impostor": self.n_impostor,
            "thresholds": self.thresholds,
            "far": self.far,
            "frr": self.frr,
            "trials": self.trials,
            "note": self.note,
        }


def default_threshold_grid() -> np.ndarray:
    return np.round(np.arange(0.0, 8.0 + 1e-9, 0.02), 6)


def load_corpus(corpus_dir) -> dict:
    corpus_dir = Path(corpus_dir)
    manifest = json.loads((corpus_dir / "manifest.json").read_text())
    users = []
    for username in manifest["users"]:
        user_dir = corpus_dir / "users" / username
        user_manifest = json.loads((user_dir / "manifest.json").read_text())
        users.append(
            {
                "username": username,
                "dir": user_dir,
                "genuine": user_manifest["genuine"],
                "forgery": user_manifest["forgery"],
            }
        )
    return {"manifest": manifest, "users": users}


def _features_for(path: Path) -> np.ndarray:
    sample = signals.parse_sample(json.loads(path.read_text()))
    return signals.sample_to_features(sample)


def corpus_scores(corpus_dir, enroll_count: int = 5) -> list[dict]:
    """Score every probe trial; returns one dict per trial with its normalized score."""
    corpus = load_corpus(corpus_dir)
    trials = []
    for user in corpus["users"]:
        if len(user["genuine"]) <= enroll_count:
            raise InsufficientSamples(
                f"{user['username']}: {len(user['genuine'])} genuines, "
                f"need > {enroll_count}"
            )
        if not user["forgery"]:
            raise InsufficientSamples(f"{user['username']}: no forgery probes")
        refs = [_features_for(user["dir"] / f) for f in user["genuine"][:enroll_count]]
        model = matching.build_model(refs, r=enroll_count)
        for fname in user["genuine"][enroll_count:]:
            ms = matching.score(model, _features_for(user["dir"] / fname), threshold=np.inf)
            trials.append(
                {
                    "username": user["username"],
                    "file": fname,
                    "kind": "genuine",
                    "score": ms.normalized,
                }
            )
        for entry in user["forgery"]:
            ms = matching.score(model, _features_for(user["dir"] / entry["file"]), threshold=np.inf)
            trials.append(
                {
                    "username": user["username"],
                    "file": entry["file"],
                    "kind": entry["kind"],
                    "score": ms.normalized,
                }
            )
    return trials


def sweep(genuine_scores, impostor_scores, thresholds) -> tuple[np.ndarray, np.ndarray]:
    gen = np.asarray(genuine_scores, dtype=np.float64)
    imp = np.asarray(impostor_scores, dtype=np.float64)
    thresholds = np.asarray(thresholds, dtype=np.float64)
    far = np.array([(imp <= t).mean() for t in thresholds])
    frr = np.array([(gen > t).mean() for t in thresholds])
    return far, frr


def interpolate_eer(thresholds, far, frr) -> tuple[float, float, str]:
    """EER at the linear-interpolated crossing of FAR and FRR."""
    thresholds = np.asarray(thresholds, dtype=np.float64)
    diff = np.asarray(far) - np.asarray(frr)
    sign_change = np.nonzero((diff[:-1] < 0) & (diff[1:] >= 0))[0]
    if len(sign_change) == 0:
        i = int(np.argmin(np.abs(diff)))
        return float((far[i] + frr[i]) / 2.0), float(thresholds[i]), "no crossing on grid"
    i = int(sign_change[0])
    d0, d1 = diff[i], diff[i + 1]
    frac = 0.0 if d1 == d0 else -d0 / (d1 - d0)
    t_star = thresholds[i] + frac * (thresholds[i + 1] - thresholds[i])
    eer = far[i] + frac * (far[i + 1] - far[i])
    return float(eer), float(t_star), ""


def eval_corpus(corpus_dir, threshold_grid=None, enroll_count: int = 5) -> EvalReport:
    trials = corpus_scores(corpus_dir, enroll_count)
    thresholds = (
        default_threshold_grid() if threshold_grid is None else np.asarray(threshold_grid)
    )
    genuine = [t["score"] for t in trials if t["kind"] == "genuine"]
    impostor = [t["score"] for t in trials if t["kind"] != "genuine"]
    far, frr = sweep(genuine, impostor, thresholds)
    eer, t_star, note = interpolate_eer(thresholds, far, frr)
    return EvalReport(
        thresholds=[float(t) for t in thresholds],
        far=[float(v) for v in far],
        frr=[float(v) for v in frr],
        eer=eer,
        eer_threshold=t_star,
        n_genuine=len(genuine),
        n_impostor=len(impostor),
        trials=trials,
        note=note,
    )


def rates_at(report: EvalReport, threshold: float) -> tuple[float, float]:
    """Exact FAR/FRR at one threshold, recomputed from the stored trials."""
    gen = np.array([t["score"] for t in report.trials if t["kind"] == "genuine"])
    imp = np.array([t["score"] for t in report.trials if t["kind"] != "genuine"])
    return float((imp <= threshold).mean()), float((gen > threshold).mean())
