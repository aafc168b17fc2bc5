"""Scenario configuration and its YAML file format.

A config file has three optional sections plus top-level keys::

    mode: sr            # ri_bpsk | ri_qpsk | dr | sr
    n_beacons: 2000
    seed: 1
    snr_db: {a: 7, b: 7, c: [7.5, 8.5, 15]}
    mac: {L: {A: 8, B: 16, C: 32}, n_max_factor: 4}
    phy: {payload_bits: 128, llr_clip: 50, exact_llr: false, noise_var: [1, 1]}

Unknown keys anywhere are rejected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from .modem import Modulation
from .phy import DecoderMode


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    mode: DecoderMode = DecoderMode.SR_NCMA
    snr_a_db: float = 7.0
    snr_b_db: float = 7.0
    snr_c_db: tuple[float, ...] = (15.0,)
    n_beacons: int = 2000
    L: Mapping[str, int] = field(default_factory=lambda: {"A": 8, "B": 16, "C": 32})
    n_max_factor: int = 4
    payload_bits: int = 128
    seed: int = 0
    llr_clip: float | None = 50.0
    exact_llr: bool = False
    noise_var: tuple[float, float] = (1.0, 1.0)
    n_batches: int = 10
    modulations: tuple[str, ...] | None = None

    def __post_init__(self):
        if isinstance(self.snr_c_db, (int, float)):
            object.__setattr__(self, "snr_c_db", (float(self.snr_c_db),))
        object.__setattr__(self, "snr_c_db", tuple(float(s) for s in self.snr_c_db))
        object.__setattr__(self, "L", dict(self.L))
        object.__setattr__(self, "noise_var", tuple(float(v) for v in self.noise_var))
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.mode, DecoderMode):
            raise ConfigError(f"mode must be a DecoderMode, got {self.mode!r}")
        if self.n_beacons < 1:
            raise ConfigError("n_beacons must be at least 1")
        if not self.snr_c_db:
            raise ConfigError("snr_c_db sweep list is empty")
        for s in (self.snr_a_db, self.snr_b_db, *self.snr_c_db):
            if not math.isfinite(s):
                raise ConfigError(f"SNR {s} is not finite")
        if set(self.L) != {"A", "B", "C"} or any(v < 1 for v in self.L.values()):
            raise ConfigError(f"L needs positive entries for A, B and C, got {self.L}")
        if self.n_max_factor < 1:
            raise ConfigError("n_max_factor must be >= 1")
        for u, L in self.L.items():
            if L * self.n_max_factor > 256:
                raise ConfigError(f"user {u}: n_max = {L * self.n_max_factor} exceeds the GF(256) code length")
        if self.payload_bits < 8 or self.payload_bits % 8:
            raise ConfigError("payload_bits must be a positive multiple of 8")
        if self.llr_clip is not None and self.llr_clip <= 0:
            raise ConfigError("llr_clip must be positive")
        if len(self.noise_var) != 2 or min(self.noise_var) <= 0:
            raise ConfigError("noise_var needs two positive values")
        if self.n_batches < 2 or self.n_beacons < self.n_batches:
            raise ConfigError("need at least 2 batches and one beacon per batch")
        if self.modulations is not None:
            expected = tuple(m.value for m in self.mode.modulations)
            given = tuple(_normalize_modulation(m) for m in self.modulations)
            if given != expected:
                raise ConfigError(f"mode {self.mode.value} implies modulations {expected}, config says {given}")

    def n_max(self, user: str) -> int:
        return self.L[user] * self.n_max_factor

    def point(self, snr_c: float) -> "ScenarioConfig":
        return replace(self, snr_c_db=(snr_c,))


def _normalize_modulation(name: str) -> str:
    name = str(name).lower()
    aliases = {"qpsk": Modulation.QPSK_STANDARD.value, "qpsk_split": Modulation.QPSK_SPLIT.value,
               "split": Modulation.QPSK_SPLIT.value}
    return aliases.get(name, name)


_TOP = {"mode", "n_beacons", "seed", "n_batches", "snr_db", "mac", "phy"}
_SNR = {"a", "b", "c"}
_MAC = {"L", "n_max_factor"}
_PHY = {"payload_bits", "llr_clip", "exact_llr", "noise_var", "modulations"}


def _check_keys(section: str, data: Mapping[str, Any], allowed: set[str]) -> None:
    extra = set(data) - allowed
    if extra:
        raise ConfigError(f"unknown key(s) in {section}: {sorted(extra)}")


def parse_mode(value: str) -> DecoderMode:
    value = str(value).lower()
    for m in DecoderMode:
        if value in (m.value, m.name.lower()):
            return m
    raise ConfigError(f"unknown mode {value!r}; choose from {[m.value for m in DecoderMode]}")


def config_from_dict(data: Mapping[str, Any]) -> ScenarioConfig:
    if not isinstance(data, Mapping):
        raise ConfigError("config root must be a mapping")
    _check_keys("config", data, _TOP)
    kw: dict[str, Any] = {}
    if "mode" in data:
        kw["mode"] = parse_mode(data["mode"])
    for key in ("n_beacons", "seed", "n_batches"):
        if key in data:
            kw[key] = int(data[key])
    snr = data.get("snr_db", {})
    _check_keys("snr_db", snr, _SNR)
    if "a" in snr:
        kw["snr_a_db"] = float(snr["a"])
    if "b" in snr:
        kw["snr_b_db"] = float(snr["b"])
    if "c" in snr:
        c = snr["c"]
        kw["snr_c_db"] = tuple(float(x) for x in (c if isinstance(c, (list, tuple)) else [c]))
    mac = data.get("mac", {})
    _check_keys("mac", mac, _MAC)
    if "L" in mac:
        _check_keys("mac.L", mac["L"], {"A", "B", "C"})
        kw["L"] = {"A": 8, "B": 16, "C": 32} | {k: int(v) for k, v in mac["L"].items()}
    if "n_max_factor" in mac:
        kw["n_max_factor"] = int(mac["n_max_factor"])
    phy = data.get("phy", {})
    _check_keys("phy", phy, _PHY)
    if "payload_bits" in phy:
        kw["payload_bits"] = int(phy["payload_bits"])
    if "llr_clip" in phy:
        kw["llr_clip"] = None if phy["llr_clip"] is None else float(phy["llr_clip"])
    if "exact_llr" in phy:
        kw["exact_llr"] = bool(phy["exact_llr"])
    if "noise_var" in phy:
        nv = phy["noise_var"]
        kw["noise_var"] = tuple(nv) if isinstance(nv, (list, tuple)) else (nv, nv)
    if "modulations" in phy:
        kw["modulations"] = tuple(phy["modulations"])
    try:
        return ScenarioConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> ScenarioConfig:
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    return config_from_dict(data)
