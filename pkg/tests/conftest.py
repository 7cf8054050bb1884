"""Shared fixtures.

The converged 2D spinning-soliton profile is expensive (minutes), so it is
computed once per session and cached on disk under tests/.cache; delete
that directory to force a fresh run.
"""

import json
from pathlib import Path

import numpy as np
import pytest

from rotwave.discretize import Grid, load_field, save_field
from rotwave.freeze import FreezeConfig, run_freezing
from rotwave.model_qcgl import QcglParams, diffusion_matrix, f_real, jacobian_Df

CACHE = Path(__file__).resolve().parent / ".cache"


@pytest.fixture(scope="session")
def qcgl_params():
    return QcglParams()


@pytest.fixture(scope="session")
def soliton(qcgl_params):
    """Converged 2D spinning soliton on [-16, 16]^2, N = 128."""
    CACHE.mkdir(exist_ok=True)
    prof_path = CACHE / "soliton_profile.bin"
    meta_path = CACHE / "soliton_meta.json"
    if prof_path.exists() and meta_path.exists():
        v, grid = load_field(prof_path)
        meta = json.loads(meta_path.read_text())
        return {
            "profile": np.real(v),
            "grid": grid,
            "s": float(meta["s"]),
            "tau": np.array(meta["tau"]),
            "converged": bool(meta["converged"]),
            "vt_norm": float(meta["vt_norm"]),
        }

    grid = Grid(d=2, R=16.0, N=128)
    cfg = FreezeConfig(grid=grid, dt=5e-3, t_end=300.0, phase_tolerance=1e-6)
    res = run_freezing(cfg, diffusion_matrix(qcgl_params),
                       lambda u: f_real(u, qcgl_params),
                       df=lambda u: jacobian_Df(u, qcgl_params))
    save_field(prof_path, res.profile, grid)
    meta = {
        "s": float(res.final.s[0]),
        "tau": [float(x) for x in res.final.tau],
        "converged": res.converged,
        "vt_norm": res.final.vt_norm,
    }
    meta_path.write_text(json.dumps(meta, indent=2))
    return {
        "profile": res.profile,
        "grid": grid,
        "s": meta["s"],
        "tau": np.array(meta["tau"]),
        "converged": res.converged,
        "vt_norm": res.final.vt_norm,
    }
