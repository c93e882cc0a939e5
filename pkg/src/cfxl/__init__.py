"""cfxl: uplink spectral-efficiency simulator for near-field cell-free XL-MIMO.

Library layout:
  specialfn   sine/cosine integrals
  geometry    array placement and distances
  channel     near-field LoS/NLoS statistics and sampling
  coupling    dipole mutual-coupling matrix
  estimation  pilots and the generalized channel-estimator family
  combining   centralized/distributed combining schemes and the SSOR solver
  se_eval     UatF, standard, and LSFD spectral-efficiency bounds
  oracle      brute-force reference computations for tests
  harness     configs, presets, Monte-Carlo runner, complexity model
  service     FastAPI wrapper
"""

from .harness import ScenarioConfig, complexity_estimate, preset, run_experiment

__version__ = "0.1.0"

__all__ = ["ScenarioConfig", "complexity_estimate", "preset", "run_experiment", "__version__"]
