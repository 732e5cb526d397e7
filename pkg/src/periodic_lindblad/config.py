"""Model files: parsing and validation.

A model file is JSON::

    {
      "system": {"hamiltonian": [[...]]},
      "couplings": [{"S": [[...]], "steering": {"type": "cos"}, "bath_row": 0}],
      "bath": {"type": "exponential", "params": {"a": 1.0, "c": 1.0}},
      "drive": {"Omega": 3.7},
      "regime": "wcl",
      "lambda": 0.1,
      "tolerances": {"atol": 1e-9, "rtol": 1e-9},
      "truncation": {"N": null}
    }

Matrices are row-major nested arrays of reals or ``[re, im]`` pairs.  Every
violation is collected with its field path before a single
:class:`ValidationError` is raised.
"""

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import bath as _bath
from . import generators, spectral
from . import steering as _steering
from .exceptions import ParseError, PeriodicLindbladError, ValidationError
from .serialization import decode_matrix

REGIMES = ("wcl", "adiabatic")


@dataclass(frozen=True)
class ModelConfig:
    H: np.ndarray
    couplings: tuple
    steering: tuple
    bath_rows: tuple
    bath: object
    Omega: float
    regime: str = "wcl"
    lam: float = 0.1
    atol: float = 1e-9
    rtol: float = 1e-9
    n_trunc: object = None
    shifted: bool = False
    initial_state: np.ndarray = field(default=None, repr=False)
    oracle: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self):
        return self.H.shape[0]

    def system_model(self):
        return spectral.SystemModel(self.H, self.couplings)

    def spectral_data(self):
        return spectral.decompose(self.system_model())

    def channel_bath(self):
        """Bath seen by the couplings (rows selected and repeated as referenced)."""
        rows = self.bath_rows
        if rows == tuple(range(self.bath.n_channels)):
            return self.bath
        return self.bath.select(rows)

    def generator(self, scale=1.0):
        model = self.system_model()
        spec = spectral.decompose(model)
        if self.regime == "wcl":
            return generators.build_wcl_generator(
                model, spec, list(self.steering), self.channel_bath(), self.Omega,
                n_trunc=self.n_trunc, scale=scale, shifted=self.shifted,
            )
        return generators.build_adiabatic_generator(model, spec, list(self.steering), self.channel_bath(), scale=scale)

    def rho0(self):
        if self.initial_state is not None:
            return self.initial_state
        d = self.dim
        rho = np.zeros((d, d), dtype=complex)
        rho[-1, -1] = 1.0
        return rho


def _matrix(obj, path, errors):
    try:
        M = decode_matrix(obj)
    except (ValueError, TypeError) as exc:
        errors.append((path, f"not a numeric matrix ({exc})"))
        return None
    if M.shape[0] != M.shape[1]:
        errors.append((path, f"matrix must be square, got shape {M.shape}"))
        return None
    return M


def _positive(raw, key, path, errors, default=None):
    if key not in raw or raw[key] is None:
        if default is None:
            errors.append((path, "missing"))
        return default
    try:
        v = float(raw[key])
    except (TypeError, ValueError):
        errors.append((path, f"not a number: {raw[key]!r}"))
        return default
    if not v > 0:
        errors.append((path, f"must be positive, got {v}"))
    return v


def validate(raw, base_dir=None):
    """Validate a decoded model dictionary and build a :class:`ModelConfig`."""
    errors = []
    if not isinstance(raw, dict):
        raise ValidationError([("", "top level must be a JSON object")])
    sysraw = raw.get("system")
    H = None
    if not isinstance(sysraw, dict) or "hamiltonian" not in sysraw:
        errors.append(("system.hamiltonian", "missing"))
    else:
        H = _matrix(sysraw["hamiltonian"], "system.hamiltonian", errors)
        if H is not None and np.linalg.norm(H - H.conj().T) > 1e-9:
            errors.append(("system.hamiltonian", "not Hermitian"))
    d = H.shape[0] if H is not None else None

    drive = raw.get("drive") if isinstance(raw.get("drive"), dict) else {}
    if not isinstance(raw.get("drive"), dict):
        errors.append(("drive.Omega", "missing"))
    Omega = _positive(drive, "Omega", "drive.Omega", errors, default=None if drive else 1.0)

    regime = raw.get("regime", "wcl")
    if regime not in REGIMES:
        errors.append(("regime", f"must be one of {REGIMES}, got {regime!r}"))
    lam = _positive(raw, "lambda", "lambda", errors, default=0.1)

    tol = raw.get("tolerances", {}) or {}
    atol = _positive(tol, "atol", "tolerances.atol", errors, default=1e-9)
    rtol = _positive(tol, "rtol", "tolerances.rtol", errors, default=1e-9)

    trunc = raw.get("truncation", {}) or {}
    n_trunc = trunc.get("N")
    if n_trunc is not None and (not isinstance(n_trunc, int) or isinstance(n_trunc, bool) or n_trunc < 0):
        errors.append(("truncation.N", f"must be a non-negative integer, got {n_trunc!r}"))
    shifted = bool(trunc.get("shifted", False))

    bath = None
    bathraw = raw.get("bath")
    if not isinstance(bathraw, dict) or "type" not in bathraw:
        errors.append(("bath.type", "missing"))
    else:
        try:
            bath = _bath.bath_from_dict(bathraw, base_dir)
        except (PeriodicLindbladError, ValueError, TypeError, KeyError, OSError) as exc:
            path = "bath.type" if "unknown bath type" in str(exc) else "bath.params"
            errors.append((path, str(exc)))

    couplings, steering, rows = [], [], []
    craw = raw.get("couplings")
    if not isinstance(craw, list) or not craw:
        errors.append(("couplings", "must be a non-empty list"))
        craw = []
    for i, c in enumerate(craw):
        p = f"couplings[{i}]"
        if not isinstance(c, dict):
            errors.append((p, "must be an object"))
            continue
        S = _matrix(c["S"], f"{p}.S", errors) if "S" in c else None
        if "S" not in c:
            errors.append((f"{p}.S", "missing"))
        if S is not None and d is not None and S.shape[0] != d:
            errors.append((f"{p}.S", f"dimension {S.shape[0]} does not match H ({d})"))
        g = None
        try:
            g = _steering.steering_from_dict(c.get("steering", {"type": "const"}), Omega or 1.0, base_dir)
        except (PeriodicLindbladError, ValueError, TypeError, KeyError, OSError) as exc:
            errors.append((f"{p}.steering", str(exc)))
        row = c.get("bath_row")
        if row is None:
            errors.append((f"{p}.bath_row", "missing"))
        elif not isinstance(row, int) or isinstance(row, bool) or row < 0:
            errors.append((f"{p}.bath_row", f"must be a non-negative integer, got {row!r}"))
        elif bath is not None and row >= bath.n_channels:
            errors.append((f"{p}.bath_row", f"references row {row} but the bath has {bath.n_channels} channel(s)"))
        couplings.append(S)
        steering.append(g)
        rows.append(row)

    rho = None
    if "initial_state" in raw:
        rho = _matrix(raw["initial_state"], "initial_state", errors)
        if rho is not None and d is not None and rho.shape[0] != d:
            errors.append(("initial_state", f"dimension {rho.shape[0]} does not match H ({d})"))

    oracle = raw.get("oracle", {}) or {}
    if not isinstance(oracle, dict):
        errors.append(("oracle", "must be an object"))
        oracle = {}

    if errors:
        raise ValidationError(errors)
    return ModelConfig(
        H=H,
        couplings=tuple(couplings),
        steering=tuple(steering),
        bath_rows=tuple(rows),
        bath=bath,
        Omega=Omega,
        regime=regime,
        lam=lam,
        atol=atol,
        rtol=rtol,
        n_trunc=n_trunc,
        shifted=shifted,
        initial_state=rho,
        oracle=dict(oracle),
    )


def parse_config(path):
    """Read and validate a model file.

    Raises
    ------
    ParseError
        If the file cannot be read or is not valid JSON.
    ValidationError
        With every ``(field_path, message)`` violation found.
    """
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    return validate(raw, os.path.dirname(os.path.abspath(path)))
