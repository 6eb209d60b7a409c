"""Reference configurations used by the tests, the acceptance suite and the scripts.

F1: one species, mu_A=0.1, mu_J=0.05, beta=0.2, zeta=1, f(x)=1/(1+x), phi=1, tau0=2 (C=1).
F2: two uncoupled copies of the F1 species.
F3: two F1 species with zeta = [[1, 0.5], [0.5, 1]].
"""

from __future__ import annotations

from dataclasses import replace

from .model import (CompetitionFunction, InitialHistory, ModelConfig, SpeciesParams,
                    compute_normalization, equilibrium, weighted_total)

MU_A, MU_J, BETA = 0.1, 0.05, 0.2


def f1_species(tau0=2.0, history=None) -> SpeciesParams:
    return SpeciesParams(MU_A, MU_J, BETA, tau0, CompetitionFunction.rational(1.0, 1.0, 1.0),
                         history or InitialHistory.constant(1.0))


def F1() -> ModelConfig:
    return ModelConfig([f1_species()], [[1.0]])


def F2() -> ModelConfig:
    return ModelConfig([f1_species(), f1_species()], [[1.0, 0.0], [0.0, 1.0]])


def F3() -> ModelConfig:
    return ModelConfig([f1_species(), f1_species()], [[1.0, 0.5], [0.5, 1.0]])


def degenerate(beta=BETA, mu_A=MU_A, A0=1.0) -> ModelConfig:
    """tau0 = 0: the delay stays 0 and A grows like exp((beta - mu_A) t)."""
    sp = SpeciesParams(mu_A, MU_J, beta, 0.0, CompetitionFunction.rational(),
                       InitialHistory.constant(A0))
    return ModelConfig([sp], [[1.0]])


def equilibrium_config(config: ModelConfig = None, i: int = 0) -> ModelConfig:
    """Single-species config started on its steady state (phi = A*, tau0 = tau_bar)."""
    config = config or F1()
    C = compute_normalization(config)[i]
    eq = equilibrium(config, i, C)
    if eq is None:
        raise ValueError("configuration has no positive equilibrium")
    A_star, tau_bar = eq
    sp = replace(config.species[i], tau0=tau_bar, history=InitialHistory.constant(A_star))
    return ModelConfig([sp], [[config.zeta[i][i]]])


def amplitude_member(config: ModelConfig, A0: float, C=None) -> ModelConfig:
    """Constant histories phi_j = A0 with tau_i0 chosen so each C_i keeps its base value."""
    C = compute_normalization(config).C if C is None else C
    A = [A0] * config.n
    species = []
    for i, sp in enumerate(config.species):
        fz = float(sp.f(weighted_total(config, i, A)))
        species.append(replace(sp, tau0=C[i] / fz, history=InitialHistory.constant(A0)))
    return ModelConfig(species, config.zeta)


AMPLITUDES = (0.1, 1.0, 10.0, 100.0)
