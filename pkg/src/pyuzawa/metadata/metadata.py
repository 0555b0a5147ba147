from __future__ import annotations
from collections.abc import Callable
import numpy as np

class ProblemParams():
    """Parent class for the parameters of every problem generator. Subclasses validate their fields on construction.
    """
    name = 'abstract'

    def as_dict(self) -> dict[str, str]:
        """Flat ``str -> str`` view used in problem metadata and run records."""
        out = {'problem': self.name}
        for attr in sorted(vars(self)):
            value = getattr(self, attr)
            if callable(value):
                value = getattr(value, 'description', getattr(value, '__name__', 'callable'))
            out[attr] = str(value)
        return out

    def __repr__(self):
        attributes = [f"{attr} = {getattr(self, attr)}\n" for attr in dir(self) if not callable(getattr(self, attr)) and not attr.startswith("__")]
        return ''.join(attributes)


def inclusion_lambda(lambda_in: float = 1000.0, lower: float = 0.25, upper: float = 0.75) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    r"""Lamé field equal to ``lambda_in`` on the open square :math:`(\text{lower},\text{upper})^2` and zero elsewhere.

    Args:
        lambda_in (float, optional): Value inside the inclusion. Defaults to 1000.
        lower (float, optional): Lower corner coordinate. Defaults to 0.25.
        upper (float, optional): Upper corner coordinate. Defaults to 0.75.

    Returns:
        Callable: Vectorized function of the cell center coordinates.
    """
    def field(x, y):
        inside = (x > lower) & (x < upper) & (y > lower) & (y < upper)
        return np.where(inside, float(lambda_in), 0.0)
    field.description = f'inclusion({lambda_in:g} in ({lower:g},{upper:g})^2)'
    return field


class ElasticityParams(ProblemParams):
    r"""Parameters of the nearly incompressible elasticity problem on the unit square.

    Args:
        n (int): Cells per direction, :math:`h = 1/n`. Must be at least 2.
        mu (float, optional): Shear modulus :math:`\mu > 0`. Defaults to 1.
        lambda_field (Callable | None, optional): Lamé parameter as a function of cell center coordinates. Defaults to :func:`inclusion_lambda` with value 1000.
        f_value (float, optional): Constant body force in every velocity equation. Defaults to 0.
        g_value (float, optional): Constant right hand side of every divergence equation. Defaults to 1.
    """
    name = 'elasticity'

    def __init__(
        self,
        n: int,
        mu: float = 1.0,
        lambda_field: Callable | None = None,
        f_value: float = 0.0,
        g_value: float = 1.0,
    ) -> None:
        if int(n) < 2:
            raise ValueError(f"n must be at least 2, got {n}")
        if not mu > 0:
            raise ValueError(f"mu must be positive, got {mu}")
        self.n = int(n)
        self.h = 1.0 / self.n
        self.mu = float(mu)
        self.lambda_field = inclusion_lambda() if lambda_field is None else lambda_field
        self.f_value = float(f_value)
        self.g_value = float(g_value)

    def cell_lambda(self) -> np.ndarray:
        """Lamé values at the cell centers, ordered with the x index fastest."""
        centers = (np.arange(self.n) + 0.5) * self.h
        X, Y = np.meshgrid(centers, centers, indexing='xy')
        lam = np.asarray(self.lambda_field(X.ravel(), Y.ravel()), dtype=float).reshape(-1)
        if np.any(lam < 0):
            raise ValueError("lambda_field must be nonnegative")
        return lam


class ConvectionParams(ElasticityParams):
    r"""Elasticity parameters plus a convection magnitude :math:`b`, which adds :math:`b\,\partial u_k/\partial x_k` to the equation of component :math:`k`.

    Args:
        n (int): Cells per direction.
        b (float, optional): Convection magnitude. Defaults to 0.
        mu (float, optional): Shear modulus. Defaults to 1.
        lambda_field (Callable | None, optional): Lamé field. Defaults to the inclusion field.
    """
    name = 'convection'

    def __init__(self, n: int, b: float = 0.0, mu: float = 1.0, lambda_field: Callable | None = None, f_value: float = 0.0, g_value: float = 1.0) -> None:
        super().__init__(n, mu, lambda_field, f_value, g_value)
        self.b = float(b)


class StokesParams(ProblemParams):
    r"""Parameters of the lid driven cavity Stokes problem with stabilized Q1-P0 elements.

    Args:
        n (int): Elements per direction, :math:`h = 1/n`. Must be at least 2.
        nu (float, optional): Viscosity. Defaults to 1.
        beta (float, optional): Stabilization parameter (0.25 for local, 1 for global stabilization). Defaults to 0.25.
    """
    name = 'stokes'

    def __init__(self, n: int, nu: float = 1.0, beta: float = 0.25) -> None:
        if int(n) < 2:
            raise ValueError(f"n must be at least 2, got {n}")
        if not nu > 0:
            raise ValueError(f"nu must be positive, got {nu}")
        if not beta > 0:
            raise ValueError(f"beta must be positive, got {beta}")
        self.n = int(n)
        self.h = 1.0 / self.n
        self.nu = float(nu)
        self.beta = float(beta)


class AlgebraicParams(ProblemParams):
    r"""Parameters of the algebraic example with a Gaussian Toeplitz :math:`A`.

    Args:
        n (int): Size of :math:`A`.
        m (int): Size of :math:`D`, ``n > m >= 1``.
        sigma (float, optional): Gaussian width. Defaults to 1.5.
    """
    name = 'algebraic'

    def __init__(self, n: int, m: int, sigma: float = 1.5) -> None:
        if not int(n) > int(m) >= 1:
            raise ValueError(f"need n > m >= 1, got n={n}, m={m}")
        if not sigma > 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        self.n = int(n)
        self.m = int(m)
        self.sigma = float(sigma)


class RandomQPParams(ProblemParams):
    r"""Parameters of a seeded random equality constrained quadratic program with penalty :math:`D = \varepsilon I`.

    Args:
        n (int): Number of primal unknowns.
        m (int): Number of constraints, ``1 <= m <= n``.
        epsilon (float, optional): Penalty :math:`\varepsilon \ge 0`. Defaults to 0.
        seed (int, optional): Seed of the generator. Defaults to 0.
    """
    name = 'random-qp'

    def __init__(self, n: int, m: int, epsilon: float = 0.0, seed: int = 0) -> None:
        if not int(n) >= int(m) >= 1:
            raise ValueError(f"need n >= m >= 1, got n={n}, m={m}")
        if epsilon < 0:
            raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
        self.n = int(n)
        self.m = int(m)
        self.epsilon = float(epsilon)
        self.seed = int(seed)
