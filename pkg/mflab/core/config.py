from pathlib import Path

from pydantic_settings import BaseSettings

# Search for .env in: CWD first, then ~/.mflab/.env (global)
_global_env = Path.home() / ".mflab" / ".env"


class Settings(BaseSettings):
    # Map family box
    gamma_star: float = 0.5
    epsilon: float = 0.0
    eps_star: float = 0.1
    family: str = "coupled"
    regularity_r: int = 3
    chi_star: float = 1.0

    # Grids
    n_cells: int = 4096
    rate_n_cells: int = 8192
    grading_q: float = 0.0
    min_grading_q: float = 3.0
    assumption_grid_nodes: int = 100_000
    interpolation_switch: float = 0.1

    # Root finding
    preimage_tol: float = 1e-13
    preimage_max_iter: int = 200
    newton_polish: bool = True

    # Fixed point solver
    inner_solver: str = "direct"
    inner_tol: float = 1e-10
    outer_tol: float = 1e-9
    max_outer: int = 200
    max_inner: int = 5000
    max_linearizations: int = 25
    stagnation_window: int = 50
    stagnation_ratio: float = 1e-3
    sign_threshold: float = 1e-14
    delta_floor: float = 1e-14
    preimage_cache_size: int = 64

    # Cone constants (a_1, a_2, a_3, A)
    cone_a1: float = 6.0
    cone_a2: float = 60.0
    cone_a3: float = 600.0
    cone_tail_a: float = 4.0

    # Ensemble
    n_particles: int = 100_000
    burn_in: int = 10_000
    histogram_bins: int = 100

    # Rates
    n_steps: int = 2000
    fit_window_lo: int = 10
    bound_tolerance: float = 0.2
    sequence_horizon: int = 10_000

    seed: int = 12345
    output_dir: str = "mflab-output"
    debug: bool = False

    model_config = {
        "env_file": (".env", str(_global_env)),
        "env_file_encoding": "utf-8",
        "env_prefix": "MFLAB_",
        "extra": "ignore",
    }


settings = Settings()
