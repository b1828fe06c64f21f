from dataclasses import dataclass, field

import numpy as np

from apps.core.utils import spawn_generators


@dataclass
class FocusState:
    scores: np.ndarray
    epsilon: float
    omega: np.ndarray
    selected: np.ndarray
    af_iteration: int = 0
    elbo_eval_gap: int = 16
    initial_gap: int = 16
    streams: list = field(default_factory=list, repr=False)
    rf_stream: np.random.Generator = field(default=None, repr=False)

    @classmethod
    def initial(cls, q, seed, elbo_eval_gap=16):
        """Everything selected, ε = 1, one random stream per trait plus one for RF."""
        generators = spawn_generators(seed, q + 1)
        return cls(
            scores=np.ones(q),
            epsilon=1.0,
            omega=np.ones(q),
            selected=np.ones(q, dtype=bool),
            elbo_eval_gap=elbo_eval_gap,
            initial_gap=elbo_eval_gap,
            streams=generators[:q],
            rf_stream=generators[q],
        )

    @property
    def n_selected(self):
        return int(self.selected.sum())
