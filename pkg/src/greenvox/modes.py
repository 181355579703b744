"""Double-continuum field coefficients and eigenfunction components.

The electric-field operator of the coupled field-medium system carries
one complex vector coefficient per continuum label: e_kappa(r) for the
electromagnetic continuum kappa = (k, sigma, zeta) and m_mu(r) for the
medium continuum mu = (x, nu, j).  Both reduce to Fredholm problems with
the same kernel as the medium Green tensor:

    e_kappa = omega Phi_kappa + int_V G0 beta e_kappa,
    m_mu    = -alpha_tilde(x, nu) nu^2 G0(., x) n_j + int_V G0 beta m_mu,

whose solutions can equivalently be evaluated through the medium Green
tensor,

    e_kappa(r) = omega Phi_kappa(r) + int_V G(r, z) beta(z) omega Phi_kappa(z),
    m_mu(r)    = -alpha_tilde(x, nu) nu^2 G(r, x) n_j.

Both routes are implemented; they agree to solver tolerance as an exact
discrete identity, which the tests exploit.

The scattering eigenfunction components are exposed through their smooth
parts only: v-components as pointwise values away from the on-shell
pole, u-components as the numerator of the pole term (the delta part is
reported symbolically, never as a number).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .green_free import PlaneWaveMode, g0_from_displacements, phi_plane_wave
from .permittivity import coupling_alpha_tilde
from .vie import MediumSolver

#: pointwise v-components are rejected closer to the shell than this
NEAR_SINGULAR_FLOOR = 1e-6


class NearSingularError(ValueError):
    """Pointwise eigenfunction value requested too close to the on-shell pole."""


@dataclass(frozen=True)
class MedModeIndex:
    """Medium continuum label mu = (x, nu, j) with j in {1, 2, 3}."""

    x: tuple[float, float, float]
    nu: float
    j: int

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        if not self.nu > 0.0:
            raise ValueError("medium mode frequency nu must be positive")
        if self.j not in (1, 2, 3):
            raise ValueError("direction index j must be 1, 2 or 3")

    @property
    def x_point(self):
        return np.asarray(self.x, dtype=float)

    @property
    def direction(self):
        n = np.zeros(3)
        n[self.j - 1] = 1.0
        return n


@dataclass(frozen=True)
class FieldCoefficientSample:
    """Field coefficient value with its operator prefactor sqrt(1/(2 w)).

    The electric-field operator weighs each continuum coefficient by
    sqrt(hbar / (2 eps0 w)); in natural units that is 1/sqrt(2 w) with w
    the mode frequency (omega_kappa or nu_mu).
    """

    location: tuple[float, float, float]
    value: tuple[complex, complex, complex]
    prefactor: float

    def __post_init__(self):
        if not self.prefactor > 0.0:
            raise ValueError("operator prefactor must be positive")
        if not all(np.isfinite(v) for v in self.value):
            raise ValueError("field coefficient must be finite")


def _solver(grid, materials, omega, tol):
    if isinstance(grid, MediumSolver):
        return grid
    return MediumSolver(grid, materials, omega, tol)


def _alpha_at(solver: MediumSolver, index: int, nu: float) -> float:
    if solver.materials is not None:
        model = solver.materials[int(solver.grid.material_ids[index])]
        return float(coupling_alpha_tilde(model, nu))
    # without material models the solver only knows eps at its own frequency
    if abs(nu - solver.omega) > 1e-12 * solver.omega:
        raise ValueError("coupling at nu != solver frequency requires material models")
    return float(np.sqrt(max(2.0 * nu / np.pi * solver.eps[index].imag, 0.0)))


# ----------------------------------------------------------------------
# e coefficients
# ----------------------------------------------------------------------

def e_grid_solution(solver: MediumSolver, mode: PlaneWaveMode):
    """On-grid e values from the direct Fredholm solve, (N, 3)."""
    if abs(mode.omega - solver.omega) > 1e-12 * solver.omega:
        raise ValueError("mode shell frequency must match the solver frequency")
    rhs = (mode.omega * phi_plane_wave(mode, solver.grid.centers)).reshape(solver.op.n3)
    return solver.solve(rhs.astype(complex)).reshape(solver.grid.n, 3)


def e_evaluate(solver: MediumSolver, mode: PlaneWaveMode, e_grid, points):
    """Evaluate e anywhere from its on-grid values (solved points returned as is)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty((len(pts), 3), dtype=complex)
    for i, p in enumerate(pts):
        idx = solver.grid.index_of(p)
        if idx is not None:
            out[i] = e_grid[idx]
        else:
            out[i] = (mode.omega * phi_plane_wave(mode, p)
                      + solver.scattered_at(p, e_grid[:, :, None])[:, 0])
    return out


def e_coefficient(grid, materials, mode: PlaneWaveMode, points, tol: float = 1e-10):
    """Electromagnetic field coefficient e_kappa at the requested points, (P, 3)."""
    solver = _solver(grid, materials, mode.omega, tol)
    eg = e_grid_solution(solver, mode)
    return e_evaluate(solver, mode, eg, points)


def e_coefficient_via_green(grid, materials, mode: PlaneWaveMode, points, tol: float = 1e-10):
    """e_kappa through the medium Green tensor (route-equivalence partner).

    e(r) = omega Phi(r) + sum_i dV G(r, z_i) beta_i omega Phi(z_i), with
    G(r, z_i) taken from one solve with source r via reciprocity.
    """
    solver = _solver(grid, materials, mode.omega, tol)
    w = mode.omega
    phi_v = w * phi_plane_wave(mode, solver.grid.centers)          # (N, 3)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty((len(pts), 3), dtype=complex)
    dV = solver.grid.voxel_volume
    for i, p in enumerate(pts):
        X = solver.grid_fields(p)                                  # X_i = G(z_i, p)
        # G(p, z_i) = X_i^T
        out[i] = (w * phi_plane_wave(mode, p)
                  + dV * np.einsum("j,jba,jb->a", solver.beta, X, phi_v))
    return out


# ----------------------------------------------------------------------
# m coefficients
# ----------------------------------------------------------------------

def m_coefficient(grid, materials, mode: MedModeIndex, points, tol: float = 1e-10,
                  route: str = "green"):
    """Medium field coefficient m_mu at the requested points, (P, 3).

    route "green" evaluates -alpha_tilde nu^2 G(r, x) n_j from the medium
    Green tensor; route "direct" solves the m Fredholm equation with its
    own inhomogeneity.  The two agree to solver tolerance.
    """
    solver = _solver(grid, materials, mode.nu, tol)
    idx = solver.grid.index_of(mode.x_point)
    if idx is None:
        raise ValueError("medium mode position must be a voxel center of the grid")
    alpha = _alpha_at(solver, idx, mode.nu)
    nj = mode.direction
    scale = -alpha * mode.nu**2
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty((len(pts), 3), dtype=complex)

    if route == "green":
        X = solver.grid_fields(mode.x_point)
        for i, p in enumerate(pts):
            ip = solver.grid.index_of(p)
            if ip is not None:
                out[i] = scale * (X[ip] @ nj)
            else:
                Gpx = (g0_from_displacements(p - mode.x_point, solver.omega)
                       + solver.scattered_at(p, X))
                out[i] = scale * (Gpx @ nj)
        return out

    if route != "direct":
        raise ValueError(f"unknown m-coefficient route {route!r}")
    rhs = scale * (solver.source_columns(mode.x_point) @ nj)       # (3N,)
    m_grid = solver.solve(rhs).reshape(solver.grid.n, 3)
    for i, p in enumerate(pts):
        ip = solver.grid.index_of(p)
        if ip is not None:
            out[i] = m_grid[ip]
        else:
            out[i] = (scale * (g0_from_displacements(p - mode.x_point, solver.omega) @ nj)
                      + solver.scattered_at(p, m_grid[:, :, None])[:, 0])
    return out


# ----------------------------------------------------------------------
# eigenfunction components (smooth parts; delta parts symbolic)
# ----------------------------------------------------------------------

def _check_off_shell(nup: float, w: float):
    if abs(nup**2 - w**2) < NEAR_SINGULAR_FLOOR * w**2:
        raise NearSingularError(
            "pointwise eigenfunction component requested within the on-shell "
            "floor |nu'^2 - w^2| < 1e-6 w^2; the distributional content lives "
            "in the identities, not pointwise values")


def v_component_e(grid, materials, mode: PlaneWaveMode, xp, nup: float,
                  tol: float = 1e-10):
    """Medium component of the electromagnetic eigenfunction.

    v^e_kappa(x', nu') = -alpha_tilde(x', nu') e_kappa(x') / (nu'^2 - w^2),
    valid away from the shell nu' = w.
    """
    solver = _solver(grid, materials, mode.omega, tol)
    _check_off_shell(nup, mode.omega)
    idx = solver.grid.index_of(np.asarray(xp, dtype=float))
    if idx is None:
        raise ValueError("x' must be a voxel center")
    alpha = _alpha_at(solver, idx, nup)
    e_here = e_evaluate(solver, mode, e_grid_solution(solver, mode), xp)[0]
    return -alpha * e_here / (nup**2 - mode.omega**2)


def u_numerator_e(grid, materials, mode: PlaneWaveMode, probe: PlaneWaveMode,
                  tol: float = 1e-10) -> complex:
    """Smooth numerator of u^e: N(kappa, kappa') = int_V w' Phi_kappa' . e^v_kappa.

    e^v = -(eps - 1) e_kappa; the delta(kappa - kappa') part of u^e is
    symbolic and not included.  Note the primed frequency and mode in the
    integrand.
    """
    solver = _solver(grid, materials, mode.omega, tol)
    eg = e_grid_solution(solver, mode)
    phi_probe = phi_plane_wave(probe, solver.grid.centers)
    ev = -(solver.eps - 1.0)[:, None] * eg
    return complex(probe.omega * solver.grid.voxel_volume
                   * np.sum(phi_probe * ev))


@dataclass(frozen=True)
class VComponentM:
    """Smooth part of v^m plus a symbolic flag for its delta(mu - mu') part."""

    delta_present: bool
    smooth: tuple[complex, complex, complex] | None


def v_component_m(grid, materials, mode: MedModeIndex, xp, nup: float,
                  tol: float = 1e-10) -> VComponentM:
    """Medium component of the medium eigenfunction.

    v^m_mu(x', nu') = n_j delta(x - x') delta(nu - nu')
                      - alpha_tilde(x', nu') m_mu(x') / (nu'^2 - nu^2);
    the delta part is reported as a flag, the smooth part pointwise.
    """
    solver = _solver(grid, materials, mode.nu, tol)
    xp = np.asarray(xp, dtype=float)
    delta_present = bool(np.array_equal(xp, mode.x_point) and nup == mode.nu)
    if abs(nup**2 - mode.nu**2) < NEAR_SINGULAR_FLOOR * mode.nu**2:
        return VComponentM(delta_present=delta_present, smooth=None)
    idx = solver.grid.index_of(xp)
    if idx is None:
        raise ValueError("x' must be a voxel center")
    alpha = _alpha_at(solver, idx, nup)
    m_here = m_coefficient(solver, None, mode, xp, tol)[0]
    smooth = -alpha * m_here / (nup**2 - mode.nu**2)
    return VComponentM(delta_present=delta_present, smooth=tuple(smooth))


def u_numerator_m(grid, materials, mode: MedModeIndex, probe: PlaneWaveMode,
                  tol: float = 1e-10) -> complex:
    """Smooth numerator of u^m: int w' Phi_kappa' . m^v_mu over all space.

    m^v = alpha_tilde(x, nu) delta(r - x) n_j - (eps - 1) m_mu, so the
    point term contributes alpha_tilde Phi_kappa'(x) . n_j and the rest a
    voxel sum over the body.
    """
    solver = _solver(grid, materials, mode.nu, tol)
    idx = solver.grid.index_of(mode.x_point)
    if idx is None:
        raise ValueError("medium mode position must be a voxel center")
    alpha = _alpha_at(solver, idx, mode.nu)
    m_grid = m_coefficient(solver, None, mode, solver.grid.centers, tol)
    phi_probe = phi_plane_wave(probe, solver.grid.centers)
    point_term = alpha * float(phi_plane_wave(probe, mode.x_point) @ mode.direction)
    volume_term = solver.grid.voxel_volume * np.sum(
        phi_probe * ((solver.eps - 1.0)[:, None] * m_grid))
    return complex(probe.omega * (point_term - volume_term))


# ----------------------------------------------------------------------
# noise-current amplitude
# ----------------------------------------------------------------------

#: pairing rule of the current operator inside the medium field part
NOISE_CURRENT_PAIRING = "E_m(r) = int dnu int_V d^3x [ i nu G_m(r, x, nu) j(x, nu) + H.c. ]"


@dataclass(frozen=True)
class NoiseCurrentAmplitude:
    """Scalar amplitude of the noise current operator per direction."""

    amplitude: complex
    pairing: str = NOISE_CURRENT_PAIRING


def noise_current_amplitude(grid, materials, x, nu: float,
                            tol: float = 1e-10) -> NoiseCurrentAmplitude:
    """Amplitude -i nu sqrt(Im eps(x, nu) / pi) of the noise current.

    Uses Im eps (not eps) under the root so the current route of the
    medium field reproduces the m-coefficient route exactly through
    alpha_tilde = sqrt(2 nu Im eps / pi); natural units absorb the
    sqrt(hbar / (pi eps0)) and 1/c^2 factors.
    """
    solver = _solver(grid, materials, nu, tol)
    idx = solver.grid.index_of(np.asarray(x, dtype=float))
    if idx is None:
        raise ValueError("x must be a voxel center")
    im_eps = solver.eps[idx].imag
    return NoiseCurrentAmplitude(amplitude=-1j * nu * np.sqrt(max(im_eps, 0.0) / np.pi))
