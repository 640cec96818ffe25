"""Exact desk-scale numerics for lattice bosons with strong on-site
repulsion: Fock bases, Hamiltonians, Krylov dynamics, special states,
closed-form light-cone bounds and audits of the associated inequalities."""

__version__ = "0.1.0"
