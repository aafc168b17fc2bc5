"""Simulator for three-user rate-diverse network-coded multiple access."""
from .config import ConfigError, ScenarioConfig, load_config
from .phy import DecoderMode
from .sim import ThroughputRecord, emit_results, run_scenario
from .oracles import oracle_suite

__all__ = ["ConfigError", "DecoderMode", "ScenarioConfig", "ThroughputRecord", "emit_results",
           "load_config", "oracle_suite", "run_scenario"]
