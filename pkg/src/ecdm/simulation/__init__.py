from ecdm.simulation.covariance import CovSpec, build_sigma, sym_eig
from ecdm.simulation.model import ScenarioModel, gen_sample, replication_stream, scenario_model
from ecdm.simulation.montecarlo import SimReport, ks_distance, run_monte_carlo
from ecdm.simulation.oracle import OracleQuantities, oracle_quantities, variance_constant
from ecdm.simulation.scenario import (
    ConfigError,
    Coupling,
    Distribution,
    SimScenario,
    load_scenario,
    scenario_from_dict,
)

__all__ = [
    "ConfigError",
    "CovSpec",
    "Coupling",
    "Distribution",
    "OracleQuantities",
    "ScenarioModel",
    "SimReport",
    "SimScenario",
    "build_sigma",
    "gen_sample",
    "ks_distance",
    "load_scenario",
    "oracle_quantities",
    "replication_stream",
    "run_monte_carlo",
    "scenario_from_dict",
    "scenario_model",
    "sym_eig",
    "variance_constant",
]
