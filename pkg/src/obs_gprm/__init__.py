"""Discrete-event simulator for JET-based optical burst switching networks.

Two routing policies are provided: a static minimum-hop baseline and GPRM,
an adaptive policy in which every node learns per-neighbor success
probabilities from ACK/NACK notifications and routes bursts over the
lowest-cost next hop.
"""

from importlib import resources


def data_path(name):
    """Absolute path of a data file shipped with the package."""
    return str(resources.files("obs_gprm").joinpath("data", name))


__all__ = ["data_path"]
__version__ = "0.1.0"
