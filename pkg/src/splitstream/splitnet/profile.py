"""Per-layer volume/compute profiling and latency-optimal split selection.

Compute is counted in multiply-accumulates: convolutions and dense layers
by their arithmetic, pooling and activations as one operation per output
sample, reshapes as free.  The planner minimizes mobile compute + uplink
transfer + cloud compute over every possible split boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .network import (KIND_CONV, KIND_DENSE, KIND_FLATTEN, NetworkSpec,
                      infer_shapes)


@dataclass(frozen=True)
class LayerEntry:
    kind: str
    out_volume: int
    macs: int
    cum_macs: int
    cum_cost: float


@dataclass(frozen=True)
class LayerProfile:
    input_volume: int
    entries: tuple
    total_macs: int

    def volume_at(self, split_index: int) -> int:
        """Samples transferred for a split after ``split_index`` layers."""
        if split_index == 0:
            return self.input_volume
        return self.entries[split_index - 1].out_volume

    def macs_before(self, split_index: int) -> int:
        if split_index == 0:
            return 0
        return self.entries[split_index - 1].cum_macs


def layer_profile(net: NetworkSpec) -> LayerProfile:
    shapes = infer_shapes(net)
    in_shape = tuple(net.input_shape)
    entries = []
    cum = 0
    prev = in_shape
    for spec, shape in zip(net.layers, shapes):
        volume = int(np.prod(shape))
        if spec.kind == KIND_CONV:
            macs = volume * spec.kernel * spec.kernel * spec.in_channels
        elif spec.kind == KIND_DENSE:
            macs = spec.in_width * spec.out_width
        elif spec.kind == KIND_FLATTEN:
            macs = 0
        else:
            macs = volume
        cum += macs
        entries.append((spec.kind, volume, macs, cum))
        prev = shape
    total = cum
    final = tuple(
        LayerEntry(kind=k, out_volume=v, macs=m, cum_macs=c,
                   cum_cost=c / total if total else 0.0)
        for k, v, m, c in entries
    )
    return LayerProfile(input_volume=int(np.prod(in_shape)), entries=final,
                        total_macs=total)


def split_cost(profile: LayerProfile, split_index: int,
               mobile_time_per_mac: float, cloud_time_per_mac: float,
               uplink_bps: float, bits_per_sample: float) -> float:
    """Total latency of one split choice."""
    mobile = mobile_time_per_mac * profile.macs_before(split_index)
    cloud = cloud_time_per_mac * (profile.total_macs
                                  - profile.macs_before(split_index))
    transfer = profile.volume_at(split_index) * bits_per_sample / uplink_bps
    return mobile + transfer + cloud


def choose_split(profile: LayerProfile, mobile_time_per_mac: float,
                 cloud_time_per_mac: float, uplink_bps: float,
                 bits_per_sample: float) -> int:
    """Latency-minimizing split boundary; ties go to the earlier split."""
    if min(mobile_time_per_mac, cloud_time_per_mac) < 0 or uplink_bps <= 0:
        raise ValueError("rates must be positive")
    best_index = 0
    best_cost = math.inf
    for split_index in range(len(profile.entries) + 1):
        cost = split_cost(profile, split_index, mobile_time_per_mac,
                          cloud_time_per_mac, uplink_bps, bits_per_sample)
        if cost < best_cost:
            best_index, best_cost = split_index, cost
    return best_index
