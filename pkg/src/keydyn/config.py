"""Engine configuration shared by the anomaly pipeline, MFA, and the service."""

from __future__ import annotations

from dataclasses import dataclass

THRESHOLD_MODES = ("radius-factor", "mean-sigma")


@dataclass(frozen=True)
class EngineConfig:
    """Tunable knobs with defaults suitable for a small deployment.

    min_history: training vectors required before risk assessment runs.
    radius_factor: second threshold as a multiple of the first.
    epsilon_floor: lower bound applied to a degenerate first threshold.
    threshold_mode: "radius-factor" (cluster radius) or "mean-sigma"
        (mean plus three standard deviations of member distances).
    """

    min_history: int = 10
    radius_factor: float = 2.0
    epsilon_floor: float = 1e-6
    threshold_mode: str = "radius-factor"
    k_min: int = 1
    k_max_cap: int = 10
    restarts: int = 32
    max_iter: int = 100
    otp_ttl_ms: int = 300_000
    otp_attempts: int = 3
    oob_ttl_ms: int = 300_000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.min_history < 1:
            raise ValueError("min_history must be at least 1")
        if self.radius_factor < 1.0:
            raise ValueError("radius_factor must be at least 1.0")
        if self.epsilon_floor <= 0.0:
            raise ValueError("epsilon_floor must be positive")
        if self.threshold_mode not in THRESHOLD_MODES:
            raise ValueError(f"unknown threshold_mode {self.threshold_mode!r}")
        if self.k_min < 1 or self.k_max_cap < self.k_min:
            raise ValueError("k bounds must satisfy 1 <= k_min <= k_max_cap")
        if self.restarts < 1 or self.max_iter < 1:
            raise ValueError("restarts and max_iter must be positive")
        if self.otp_ttl_ms <= 0 or self.oob_ttl_ms <= 0:
            raise ValueError("challenge TTLs must be positive")
        if self.otp_attempts < 1:
            raise ValueError("otp_attempts must be at least 1")

    def k_range(self, n_points: int) -> tuple[int, int]:
        """Candidate k interval for re-clustering n_points vectors.

        The upper end is half the population (never more than k_max_cap),
        so a lone attempt cannot force every point into its own cluster.
        """
        if n_points < 1:
            raise ValueError("n_points must be positive")
        k_max = min(self.k_max_cap, n_points // 2)
        k_max = max(self.k_min, k_max)
        k_max = min(k_max, n_points)
        return self.k_min, k_max
